#ifndef FEDCACHE_CONFIG_HPP
#define FEDCACHE_CONFIG_HPP

#include "fedcache/ann_index.hpp"
#include "fedcache/knowledge_cache.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace fedcache {

enum class Algorithm { fedcache, fd, standalone };
enum class ScheduleMode { sync, async };

std::string_view to_string(Algorithm a);
Algorithm parse_algorithm(std::string_view name);

/// Every knob of one experiment. Serialized as flat `key = value` lines whose
/// keys match the field names below (R for `related`).
struct ExperimentConfig {
    Algorithm algorithm = Algorithm::fedcache;

    // data
    std::string data = "synth";  ///< synth | idx
    int classes = 10;
    int per_class = 200;
    int dim = 64;
    double class_sep = 3.0;
    std::string idx_images;
    std::string idx_labels;
    int clients = 20;
    double alpha = 1.0;
    double test_fraction = 0.2;
    /// When positive, each train split is cut to round(local_fraction * |D|).
    double local_fraction = 0.0;

    // models
    bool heterogeneous = true;  ///< architecture by client index mod 3; else all mlp_large
    int width_scale = 1;

    // training
    int rounds = 30;
    int batch_size = 8;
    double lr = 0.01;
    double beta = 1.5;
    double temperature = 1.0;
    double fd_gamma = 1.0;
    bool shuffle = true;

    // knowledge cache
    std::size_t related = 16;
    int hash_dim = kDefaultHashDim;
    int hnsw_m = 16;
    int ef_construction = 200;
    int ef_search = 64;
    IndexBackend index = IndexBackend::hnsw;
    std::string hash_file;
    bool exclude_same_client = false;
    bool skip_cold_teachers = false;

    ScheduleMode schedule = ScheduleMode::sync;
    std::uint64_t async_seed = 0;
    std::uint64_t seed = 1;

    std::vector<double> acc_targets;

    /// Throws std::invalid_argument naming the offending key.
    void validate() const;

    /// Sets one key from its textual value; unknown keys throw.
    void set(std::string_view key, std::string_view value);

    /// Canonical key/value form, sorted by key.
    std::map<std::string, std::string> to_kv() const;
    std::string serialize() const;

    RelationOptions relation_options() const;
};

/// Parses `key = value` lines on top of `base`; `#` starts a comment.
ExperimentConfig parse_config(std::string_view text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});

/// Stable 64-bit FNV-1a digest of the canonical serialization, as 16 hex digits.
std::string config_digest(const ExperimentConfig& config);

}  // namespace fedcache

#endif
