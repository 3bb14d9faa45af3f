#ifndef FEDCACHE_FEDERATION_HPP
#define FEDCACHE_FEDERATION_HPP

#include "fedcache/config.hpp"
#include "fedcache/data.hpp"
#include "fedcache/encoder.hpp"
#include "fedcache/knowledge_cache.hpp"
#include "fedcache/metrics.hpp"
#include "fedcache/model.hpp"
#include "fedcache/protocol.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace fedcache {

/// Server-side cache traffic, recorded in the order the server handled it.
/// Used by the replay checker.
struct CacheEvent {
    enum class Type { init, relations, fetch, update };
    Type type = Type::init;
    SampleIndex id;
    int label = -1;
    std::vector<SampleIndex> related;  ///< relations: IR(id)
    std::vector<RealVector> values;    ///< fetch: returned logits; update: {z}
};

struct EventLog {
    std::vector<CacheEvent> events;
};

/// FedCache server: the knowledge cache and nothing else. It holds no model
/// parameters.
class FedCacheServer {
public:
    FedCacheServer(int num_classes, int hash_dim, EventLog* log = nullptr);

    void receive(const HashUpload& msg);
    void build_relations(const RelationOptions& opts);
    /// Fetch IR(id) knowledge, ensemble it, then store the upload.
    EnsembleDown handle(const KnowledgeUpload& msg, double temperature, bool skip_cold_teachers);

    const KnowledgeCache& cache() const { return cache_; }

private:
    KnowledgeCache cache_;
    EventLog* log_;
};

/// FD server: the latest per-class mean logits from every client.
class FdServer {
public:
    explicit FdServer(int num_clients, int num_classes);

    void receive(const FdClassUpload& msg);
    /// Row y is the mean of F^{l,y} over clients l != k that hold class y.
    FdClassDown teachers_for(int client) const;

private:
    int num_classes_;
    std::vector<std::optional<FdClassUpload>> latest_;
};

struct ClientState {
    ClientShard shard;
    ClientModel model;
    int rounds_done = 0;
    /// FD: class teachers from the last download.
    std::optional<FdClassDown> fd_teachers;
};

struct ServerState {
    std::unique_ptr<FedCacheServer> fedcache;
    std::unique_ptr<FdServer> fd;
    CommLedger ledger;
    std::uint64_t skipped_client_rounds = 0;
};

struct FederationState {
    ExperimentConfig config;
    ServerState server;
    std::vector<ClientState> clients;
    EventLog* log = nullptr;
};

/// One client minibatch in a round.
struct BatchEvent {
    int client = 0;
    std::size_t batch = 0;

    friend bool operator==(const BatchEvent&, const BatchEvent&) = default;
};

/// Batch 0 of every client, then batch 1 of every client, and so on.
std::vector<BatchEvent> round_robin_schedule(std::span<const std::size_t> batches_per_client);

/// Seeded uniformly random interleaving of all clients' batches; each client's
/// own batches stay in order.
std::vector<BatchEvent> async_schedule(std::span<const std::size_t> batches_per_client, std::uint64_t seed);

/// Shards and models built from a config. Model k uses architecture k mod 3 when
/// heterogeneous, else mlp_large.
struct Setup {
    LabeledDataset data;
    Partition partition;
    std::vector<ClientShard> shards;
    std::vector<ClientModel> models;
};
Setup prepare(const ExperimentConfig& config);

FederationState make_federation(const ExperimentConfig& config, std::vector<ClientShard> shards,
                                std::vector<ClientModel> models, EventLog* log = nullptr);

/// Client-side hash encoding of every train sample, keyed by (k, i).
HashTable encode_shards(const HashEncoder& encoder, std::span<const ClientShard> shards);

/// Uploads one hash per train sample, initializes the cache and builds
/// relations. Closes ledger round 0.
void run_initialization(FederationState& state, const HashTable& hashes);

std::vector<std::size_t> batches_per_client(const FederationState& state);

/// Train order of client k's samples in a round (local train indexes).
std::vector<std::size_t> epoch_order(const FederationState& state, int client, int round);

void fedcache_round(FederationState& state, int round, std::span<const BatchEvent> schedule);
void fd_round(FederationState& state, int round, std::span<const BatchEvent> schedule);
void standalone_round(FederationState& state, int round, std::span<const BatchEvent> schedule);

/// Schedule from the config (round-robin or async) and the configured algorithm.
void run_round(FederationState& state, int round);

/// UA of every client on its local test split; bytes are cumulative.
RoundRecord evaluate_round(const FederationState& state, int round);

/// Data, init, all rounds, evaluation after each round.
MetricsReport run_experiment(const ExperimentConfig& config, EventLog* log = nullptr);

}  // namespace fedcache

#endif
