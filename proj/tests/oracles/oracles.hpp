#ifndef FEDCACHE_TEST_ORACLES_HPP
#define FEDCACHE_TEST_ORACLES_HPP

// Brute-force reference implementations for tests. Nothing here calls into
// the production numeric, model, index or cache code; only domain types are
// shared.

#include "fedcache/federation.hpp"
#include "fedcache/types.hpp"

#include <boost/multiprecision/cpp_dec_float.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace oracle {

using fedcache::SampleIndex;
using hp_float = boost::multiprecision::cpp_dec_float_50;
using Vec = std::vector<double>;

// ---- 50-digit evaluator ----

std::vector<hp_float> hp_softmax(const Vec& logits, double temperature);
hp_float hp_cross_entropy(const Vec& logits, int label, double temperature);
/// KL(softmax(student) || teacher_probs).
hp_float hp_kl(const Vec& student_probs, const Vec& teacher_probs);
/// softmax of the elementwise mean of `logits`.
std::vector<hp_float> hp_ensemble(const std::vector<Vec>& logits, double temperature);

// ---- exact kNN ----

struct Item {
    SampleIndex id;
    int label = 0;
    Vec hash;
};

/// Top-r same-label items by cosine (dot product), self excluded, ties by
/// ascending id.
std::vector<SampleIndex> exact_knn(const std::vector<Item>& items, SampleIndex query, std::size_t r,
                                   bool exclude_same_client = false);

// ---- sequential cache replay ----

struct ReplayResult {
    bool pass = true;
    std::optional<std::size_t> first_divergence;
    std::string reason;
};

/// Re-executes an event log against plain maps and compares every fetch.
ReplayResult replay_check(const fedcache::EventLog& log);

struct AuditResult {
    std::size_t lists = 0;
    std::size_t label_violations = 0;
    std::size_t self_violations = 0;
    std::size_t duplicate_violations = 0;
    std::size_t total() const { return label_violations + self_violations + duplicate_violations; }
};

/// Label purity, self exclusion and distinctness of every relations event.
AuditResult audit_relations(const fedcache::EventLog& log);

// ---- naive FedCache rounds ----

struct TinyClient {
    std::vector<Vec> inputs;
    std::vector<int> labels;
    std::vector<Vec> hashes;
    std::vector<int> hidden_widths;
    Vec params;  ///< per layer: W (out x in, column-major), then b
};

struct TinyScenario {
    int num_classes = 3;
    int input_dim = 2;
    std::size_t related = 1;
    double beta = 1.5;
    double temperature = 1.0;
    double lr = 0.01;
    std::size_t batch_size = 2;
    int rounds = 3;
    std::vector<TinyClient> clients;
};

struct NaiveResult {
    std::vector<Vec> params;
    /// Teacher distribution used for each sample in the last round.
    std::map<SampleIndex, std::optional<Vec>> last_teachers;
};

/// Round-robin batches in sample order, fetch-before-update per sample, one
/// SGD step per batch.
NaiveResult naive_round_oracle(const TinyScenario& scenario);

}  // namespace oracle

#endif
