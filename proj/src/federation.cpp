#include "fedcache/federation.hpp"

#include "fedcache/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fedcache {

namespace {

// Seed streams derived from ExperimentConfig::seed.
enum SeedStream : std::uint64_t {
    kDataStream = 0,
    kPartitionStream = 1,
    kEncoderStream = 2,
    kIndexStream = 3,  // used by ExperimentConfig::relation_options
    kSplitStream = 4,
    kOrderStream = 5,
    kModelStream = 6,
    kSubsampleStream = 7,
};

Batch gather_batch(const ClientShard& shard, std::span<const std::size_t> positions) {
    Batch batch;
    batch.inputs.resize(shard.train.dim(), static_cast<Eigen::Index>(positions.size()));
    batch.labels.reserve(positions.size());
    for (std::size_t j = 0; j < positions.size(); ++j) {
        batch.inputs.col(static_cast<Eigen::Index>(j)) = shard.train.features.col(static_cast<Eigen::Index>(positions[j]));
        batch.labels.push_back(shard.train.labels[positions[j]]);
    }
    batch.teachers.assign(positions.size(), std::nullopt);
    return batch;
}

// Positions of `event`'s samples within its client's epoch order.
std::span<const std::size_t> batch_slice(const std::vector<std::size_t>& order, std::size_t batch, int batch_size) {
    const std::size_t begin = batch * static_cast<std::size_t>(batch_size);
    const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(batch_size));
    return std::span<const std::size_t>(order).subspan(begin, end - begin);
}

std::vector<std::vector<std::size_t>> all_orders(const FederationState& state, int round) {
    std::vector<std::vector<std::size_t>> orders;
    orders.reserve(state.clients.size());
    for (std::size_t k = 0; k < state.clients.size(); ++k) orders.push_back(epoch_order(state, static_cast<int>(k), round));
    return orders;
}

template <typename OnBatch>
void for_each_batch(FederationState& state, int round, std::span<const BatchEvent> schedule, OnBatch&& on_batch) {
    const auto orders = all_orders(state, round);
    for (const auto& ev : schedule) {
        auto& client = state.clients.at(static_cast<std::size_t>(ev.client));
        const auto positions = batch_slice(orders[static_cast<std::size_t>(ev.client)], ev.batch, state.config.batch_size);
        if (positions.empty()) continue;
        on_batch(ev.client, client, positions);
    }
    for (auto& client : state.clients) {
        if (client.shard.train.empty()) {
            ++state.server.skipped_client_rounds;
            continue;
        }
        ++client.rounds_done;
    }
}

}  // namespace

FedCacheServer::FedCacheServer(int num_classes, int hash_dim, EventLog* log)
    : cache_(num_classes, hash_dim), log_(log) {}

void FedCacheServer::receive(const HashUpload& msg) {
    cache_.init_entry(msg.id, msg.label, msg.hash);
    if (log_) log_->events.push_back({CacheEvent::Type::init, msg.id, msg.label, {}, {}});
}

void FedCacheServer::build_relations(const RelationOptions& opts) {
    cache_.build_relations(opts);
    if (!log_) return;
    for (const auto& id : cache_.ids())
        log_->events.push_back({CacheEvent::Type::relations, id, cache_.label(id), cache_.relations(id), {}});
}

EnsembleDown FedCacheServer::handle(const KnowledgeUpload& msg, double temperature, bool skip_cold_teachers) {
    auto teachers = cache_.fetch(msg.id);
    if (log_) {
        CacheEvent ev{CacheEvent::Type::fetch, msg.id, -1, {}, {}};
        for (const auto& t : teachers) ev.values.push_back(t.logits);
        log_->events.push_back(std::move(ev));
    }
    if (skip_cold_teachers)
        std::erase_if(teachers, [](const Knowledge& k) { return k.version == 0; });
    EnsembleDown reply{msg.id, ensemble(teachers, temperature)};
    cache_.update(msg.id, msg.logits);
    if (log_) log_->events.push_back({CacheEvent::Type::update, msg.id, -1, {}, {msg.logits}});
    return reply;
}

FdServer::FdServer(int num_clients, int num_classes)
    : num_classes_(num_classes), latest_(static_cast<std::size_t>(num_clients)) {}

void FdServer::receive(const FdClassUpload& msg) {
    if (msg.client < 0 || static_cast<std::size_t>(msg.client) >= latest_.size())
        throw std::invalid_argument("FdServer: client id out of range");
    if (msg.class_logits.rows() != num_classes_ || msg.class_logits.cols() != num_classes_ ||
        msg.counts.size() != static_cast<std::size_t>(num_classes_))
        throw std::invalid_argument("FdServer: upload shape mismatch");
    latest_[static_cast<std::size_t>(msg.client)] = msg;
}

FdClassDown FdServer::teachers_for(int client) const {
    FdClassDown down;
    down.client = client;
    down.teacher_logits = RealMatrix::Zero(num_classes_, num_classes_);
    down.present.assign(static_cast<std::size_t>(num_classes_), false);
    for (int y = 0; y < num_classes_; ++y) {
        RealVector sum = RealVector::Zero(num_classes_);
        int holders = 0;
        for (std::size_t l = 0; l < latest_.size(); ++l) {
            if (static_cast<int>(l) == client || !latest_[l]) continue;
            if (latest_[l]->counts[static_cast<std::size_t>(y)] <= 0) continue;
            sum += latest_[l]->class_logits.row(y).transpose();
            ++holders;
        }
        if (holders == 0) continue;
        down.teacher_logits.row(y) = (sum / holders).transpose();
        down.present[static_cast<std::size_t>(y)] = true;
    }
    return down;
}

std::vector<BatchEvent> round_robin_schedule(std::span<const std::size_t> batches_per_client) {
    std::vector<BatchEvent> out;
    const std::size_t most =
        batches_per_client.empty() ? 0 : *std::max_element(batches_per_client.begin(), batches_per_client.end());
    for (std::size_t b = 0; b < most; ++b)
        for (std::size_t k = 0; k < batches_per_client.size(); ++k)
            if (b < batches_per_client[k]) out.push_back({static_cast<int>(k), b});
    return out;
}

std::vector<BatchEvent> async_schedule(std::span<const std::size_t> batches_per_client, std::uint64_t seed) {
    std::vector<int> pool;
    for (std::size_t k = 0; k < batches_per_client.size(); ++k)
        pool.insert(pool.end(), batches_per_client[k], static_cast<int>(k));
    Rng rng(seed);
    std::shuffle(pool.begin(), pool.end(), rng);
    std::vector<std::size_t> next(batches_per_client.size(), 0);
    std::vector<BatchEvent> out;
    out.reserve(pool.size());
    for (int k : pool) out.push_back({k, next[static_cast<std::size_t>(k)]++});
    return out;
}

Setup prepare(const ExperimentConfig& config) {
    config.validate();
    Setup setup;
    if (config.data == "idx")
        setup.data = load_idx(config.idx_images, config.idx_labels);
    else
        setup.data = synth_gaussian(config.classes, config.per_class, config.dim, config.class_sep,
                                    derive_seed(config.seed, kDataStream));

    setup.partition = dirichlet_partition(setup.data, config.clients, config.alpha,
                                          derive_seed(config.seed, kPartitionStream));
    const auto keep = static_cast<std::size_t>(std::llround(config.local_fraction * static_cast<double>(setup.data.size())));
    for (int k = 0; k < config.clients; ++k) {
        const auto ku = static_cast<std::uint64_t>(k);
        auto shard = split_shard(setup.data, k, setup.partition.clients[static_cast<std::size_t>(k)], config.test_fraction,
                                 derive_seed(derive_seed(config.seed, kSplitStream), ku));
        if (config.local_fraction > 0.0)
            subsample_train(shard, std::max<std::size_t>(keep, 1), derive_seed(derive_seed(config.seed, kSubsampleStream), ku));
        setup.shards.push_back(std::move(shard));

        const auto arch = config.heterogeneous ? architecture_for_client(k) : Architecture::mlp_large;
        const auto spec = ModelSpec::standard(arch, static_cast<int>(setup.data.dim()), setup.data.num_classes,
                                              config.width_scale);
        setup.models.push_back(build_model(spec, derive_seed(derive_seed(config.seed, kModelStream), ku)));
    }
    return setup;
}

FederationState make_federation(const ExperimentConfig& config, std::vector<ClientShard> shards,
                                std::vector<ClientModel> models, EventLog* log) {
    if (shards.size() != models.size()) throw std::invalid_argument("make_federation: one model per shard required");
    FederationState state;
    state.config = config;
    state.log = log;
    const int num_classes = models.empty() ? config.classes : models.front().spec().num_classes;
    for (std::size_t k = 0; k < shards.size(); ++k) {
        if (shards[k].client_id != static_cast<int>(k)) throw std::invalid_argument("make_federation: shard order");
        state.clients.push_back({std::move(shards[k]), std::move(models[k]), 0, std::nullopt});
    }
    if (config.algorithm == Algorithm::fedcache)
        state.server.fedcache = std::make_unique<FedCacheServer>(num_classes, config.hash_dim, log);
    if (config.algorithm == Algorithm::fd)
        state.server.fd = std::make_unique<FdServer>(static_cast<int>(state.clients.size()), num_classes);
    return state;
}

HashTable encode_shards(const HashEncoder& encoder, std::span<const ClientShard> shards) {
    HashTable table;
    for (const auto& shard : shards)
        for (Eigen::Index i = 0; i < shard.train.size(); ++i)
            table.emplace(SampleIndex{shard.client_id, static_cast<int>(i)}, encoder.encode(shard.train.features.col(i)));
    return table;
}

void run_initialization(FederationState& state, const HashTable& hashes) {
    auto& server = state.server;
    if (!server.fedcache) throw StateError("run_initialization: not a FedCache federation");
    for (const auto& client : state.clients) {
        for (Eigen::Index i = 0; i < client.shard.train.size(); ++i) {
            const SampleIndex id{client.shard.client_id, static_cast<int>(i)};
            const auto it = hashes.find(id);
            if (it == hashes.end()) throw NotFoundError("no hash for a train sample");
            HashUpload msg{id, client.shard.train.labels[static_cast<std::size_t>(i)], it->second};
            server.ledger.record(msg);
            server.fedcache->receive(msg);
        }
    }
    server.fedcache->build_relations(state.config.relation_options());
    server.ledger.close_round(0);
}

std::vector<std::size_t> batches_per_client(const FederationState& state) {
    std::vector<std::size_t> out;
    const auto b = static_cast<std::size_t>(state.config.batch_size);
    for (const auto& c : state.clients) out.push_back((static_cast<std::size_t>(c.shard.train.size()) + b - 1) / b);
    return out;
}

std::vector<std::size_t> epoch_order(const FederationState& state, int client, int round) {
    const auto n = static_cast<std::size_t>(state.clients.at(static_cast<std::size_t>(client)).shard.train.size());
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (state.config.shuffle) {
        const auto stream = (static_cast<std::uint64_t>(client) << 32) | static_cast<std::uint32_t>(round);
        Rng rng(derive_seed(derive_seed(state.config.seed, kOrderStream), stream));
        std::shuffle(order.begin(), order.end(), rng);
    }
    return order;
}

void fedcache_round(FederationState& state, int round, std::span<const BatchEvent> schedule) {
    auto& server = state.server;
    if (!server.fedcache || !server.fedcache->cache().frozen())
        throw StateError("fedcache_round: initialization has not run");
    const auto& cfg = state.config;
    const LossOptions loss{cfg.beta, cfg.temperature, DistillLoss::kl};

    for_each_batch(state, round, schedule, [&](int k, ClientState& client, std::span<const std::size_t> positions) {
        Batch batch = gather_batch(client.shard, positions);
        const RealMatrix logits = client.model.forward_batch(batch.inputs);
        for (std::size_t j = 0; j < positions.size(); ++j) {
            KnowledgeUpload up{{k, static_cast<int>(positions[j])}, logits.col(static_cast<Eigen::Index>(j))};
            server.ledger.record(up);
            auto down = server.fedcache->handle(up, cfg.temperature, cfg.skip_cold_teachers);
            server.ledger.record(down);
            batch.teachers[j] = std::move(down.teacher);
        }
        train_batch(client.model, batch, loss, cfg.lr);
    });
    server.ledger.close_round(round);
}

void fd_round(FederationState& state, int round, std::span<const BatchEvent> schedule) {
    auto& server = state.server;
    if (!server.fd) throw StateError("fd_round: not an FD federation");
    const auto& cfg = state.config;
    const int classes = state.clients.front().model.spec().num_classes;
    const LossOptions loss{cfg.fd_gamma, 1.0, DistillLoss::soft_cross_entropy};

    std::vector<RealMatrix> sums(state.clients.size(), RealMatrix::Zero(classes, classes));
    std::vector<std::vector<int>> counts(state.clients.size(), std::vector<int>(static_cast<std::size_t>(classes), 0));

    for_each_batch(state, round, schedule, [&](int k, ClientState& client, std::span<const std::size_t> positions) {
        Batch batch = gather_batch(client.shard, positions);
        const RealMatrix logits = client.model.forward_batch(batch.inputs);
        for (std::size_t j = 0; j < positions.size(); ++j) {
            const int y = batch.labels[j];
            sums[static_cast<std::size_t>(k)].row(y) += logits.col(static_cast<Eigen::Index>(j)).transpose();
            ++counts[static_cast<std::size_t>(k)][static_cast<std::size_t>(y)];
            if (client.fd_teachers && client.fd_teachers->present[static_cast<std::size_t>(y)])
                batch.teachers[j] = softmax_temp(client.fd_teachers->teacher_logits.row(y).transpose().eval(), 1.0);
        }
        train_batch(client.model, batch, loss, cfg.lr);
    });

    for (std::size_t k = 0; k < state.clients.size(); ++k) {
        FdClassUpload up{static_cast<int>(k), sums[k], counts[k]};
        for (int y = 0; y < classes; ++y)
            if (counts[k][static_cast<std::size_t>(y)] > 0) up.class_logits.row(y) /= counts[k][static_cast<std::size_t>(y)];
        server.ledger.record(up);
        server.fd->receive(up);
    }
    for (std::size_t k = 0; k < state.clients.size(); ++k) {
        auto down = server.fd->teachers_for(static_cast<int>(k));
        server.ledger.record(down);
        state.clients[k].fd_teachers = std::move(down);
    }
    server.ledger.close_round(round);
}

void standalone_round(FederationState& state, int round, std::span<const BatchEvent> schedule) {
    const LossOptions loss{0.0, 1.0, DistillLoss::kl};
    const double lr = state.config.lr;
    for_each_batch(state, round, schedule, [&](int, ClientState& client, std::span<const std::size_t> positions) {
        train_batch(client.model, gather_batch(client.shard, positions), loss, lr);
    });
    state.server.ledger.close_round(round);
}

void run_round(FederationState& state, int round) {
    const auto batches = batches_per_client(state);
    const auto schedule =
        state.config.schedule == ScheduleMode::async
            ? async_schedule(batches, derive_seed(state.config.async_seed, static_cast<std::uint64_t>(round)))
            : round_robin_schedule(batches);
    switch (state.config.algorithm) {
        case Algorithm::fedcache: fedcache_round(state, round, schedule); break;
        case Algorithm::fd: fd_round(state, round, schedule); break;
        case Algorithm::standalone: standalone_round(state, round, schedule); break;
    }
}

RoundRecord evaluate_round(const FederationState& state, int round) {
    RoundRecord rec;
    rec.round = round;
    for (const auto& client : state.clients) {
        if (client.shard.test.empty()) continue;
        rec.ua.push_back(evaluate(client.model, client.shard.test));
    }
    rec.avg_ua = rec.ua.empty() ? 0.0 : std::accumulate(rec.ua.begin(), rec.ua.end(), 0.0) / static_cast<double>(rec.ua.size());
    rec.bytes_up = state.server.ledger.total(Direction::up);
    rec.bytes_down = state.server.ledger.total(Direction::down);
    return rec;
}

MetricsReport run_experiment(const ExperimentConfig& config, EventLog* log) {
    auto setup = prepare(config);
    const int input_dim = static_cast<int>(setup.data.dim());
    auto state = make_federation(config, std::move(setup.shards), std::move(setup.models), log);

    if (config.algorithm == Algorithm::fedcache) {
        HashTable hashes;
        if (!config.hash_file.empty()) {
            hashes = load_hashes(config.hash_file);
        } else {
            const HashEncoder encoder(EncoderSpec::standard(input_dim, derive_seed(config.seed, kEncoderStream), config.hash_dim));
            for (const auto& c : state.clients)
                for (Eigen::Index i = 0; i < c.shard.train.size(); ++i)
                    hashes.emplace(SampleIndex{c.shard.client_id, static_cast<int>(i)},
                                   encoder.encode(c.shard.train.features.col(i)));
        }
        run_initialization(state, hashes);
    }

    MetricsReport report;
    report.algorithm = std::string(to_string(config.algorithm));
    report.init_bytes = state.server.ledger.total();
    for (int r = 1; r <= config.rounds; ++r) {
        run_round(state, r);
        report.rounds.push_back(evaluate_round(state, r));
    }
    finalize(report, config.acc_targets);
    return report;
}

}  // namespace fedcache
