#include "fedcache/ann_index.hpp"

#include "fedcache/errors.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace fedcache {

namespace {

bool better(const Neighbor& a, const Neighbor& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.id < b.id;
}

bool passes(const SampleIndex& candidate, const SampleIndex* self, const QueryOptions* opts) {
    if (!self) return true;
    if (candidate == *self) return false;
    if (opts && opts->exclude_same_client && candidate.client == self->client) return false;
    return true;
}

}  // namespace

HnswGraph::HnswGraph(HnswParams params, int dim, std::uint64_t level_seed)
    : params_(params), dim_(dim), level_rng_(level_seed) {
    if (params_.max_degree < 2) throw std::invalid_argument("HnswParams: max_degree must be at least 2");
    if (params_.ef_construction < 1 || params_.ef_search < 1)
        throw std::invalid_argument("HnswParams: ef values must be positive");
    if (dim_ <= 0) throw std::invalid_argument("HnswGraph: dimension must be positive");
    level_mult_ = 1.0 / std::log(static_cast<double>(params_.max_degree));
}

std::size_t HnswGraph::max_links_for(int layer) const {
    return static_cast<std::size_t>(layer == 0 ? 2 * params_.max_degree : params_.max_degree);
}

double HnswGraph::sim(std::uint32_t a, const HashVector& q, std::uint64_t& ops) const {
    ++ops;
    return Eigen::Map<const RealVector>(data_.data() + static_cast<std::size_t>(a) * dim_, dim_).dot(q);
}

double HnswGraph::sim(std::uint32_t a, std::uint32_t b, std::uint64_t& ops) const {
    ++ops;
    return Eigen::Map<const RealVector>(data_.data() + static_cast<std::size_t>(a) * dim_, dim_)
        .dot(Eigen::Map<const RealVector>(data_.data() + static_cast<std::size_t>(b) * dim_, dim_));
}

std::vector<HnswGraph::Scored> HnswGraph::search_layer(const HashVector& q, std::uint32_t entry, std::size_t ef,
                                                       int layer, const SampleIndex* self, const QueryOptions* opts,
                                                       std::uint64_t& ops) const {
    auto best_first = [](const Scored& a, const Scored& b) { return a.sim < b.sim; };
    auto worst_first = [](const Scored& a, const Scored& b) { return a.sim > b.sim; };
    std::priority_queue<Scored, std::vector<Scored>, decltype(best_first)> candidates(best_first);
    std::priority_queue<Scored, std::vector<Scored>, decltype(worst_first)> found(worst_first);
    std::vector<char> visited(ids_.size(), 0);

    const Scored start{sim(entry, q, ops), entry};
    visited[entry] = 1;
    candidates.push(start);
    if (passes(ids_[entry], self, opts)) found.push(start);

    while (!candidates.empty()) {
        const Scored current = candidates.top();
        if (found.size() >= ef && current.sim < found.top().sim) break;
        candidates.pop();
        for (std::uint32_t next : links_[current.node][static_cast<std::size_t>(layer)]) {
            if (visited[next]) continue;
            visited[next] = 1;
            const Scored scored{sim(next, q, ops), next};
            if (found.size() < ef || scored.sim > found.top().sim) {
                candidates.push(scored);
                if (passes(ids_[next], self, opts)) {
                    found.push(scored);
                    if (found.size() > ef) found.pop();
                }
            }
        }
    }

    std::vector<Scored> out;
    out.reserve(found.size());
    while (!found.empty()) {
        out.push_back(found.top());
        found.pop();
    }
    std::sort(out.begin(), out.end(), [&](const Scored& a, const Scored& b) {
        if (a.sim != b.sim) return a.sim > b.sim;
        return ids_[a.node] < ids_[b.node];
    });
    return out;
}

// Keeps a candidate only if it is closer to the base element than to every
// neighbor already kept. `candidates` must be sorted best first.
std::vector<HnswGraph::Scored> HnswGraph::select_neighbors(std::vector<Scored> candidates, std::size_t m,
                                                           std::uint64_t& ops) const {
    if (candidates.size() <= m) return candidates;
    std::vector<Scored> kept;
    kept.reserve(m);
    for (const auto& c : candidates) {
        if (kept.size() >= m) break;
        bool diverse = true;
        for (const auto& k : kept) {
            if (sim(c.node, k.node, ops) > c.sim) {
                diverse = false;
                break;
            }
        }
        if (diverse) kept.push_back(c);
    }
    return kept;
}

void HnswGraph::insert(SampleIndex id, const HashVector& h) {
    if (h.size() != dim_) throw std::invalid_argument("HnswGraph::insert: dimension mismatch");
    const auto node = static_cast<std::uint32_t>(ids_.size());
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int level = static_cast<int>(std::floor(-std::log(1.0 - unit(level_rng_)) * level_mult_));

    ids_.push_back(id);
    data_.insert(data_.end(), h.data(), h.data() + h.size());
    links_.emplace_back(static_cast<std::size_t>(level) + 1);

    if (max_level_ < 0) {
        entry_ = node;
        max_level_ = level;
        return;
    }

    std::uint32_t ep = entry_;
    double ep_sim = sim(ep, h, build_ops_);
    for (int layer = max_level_; layer > level; --layer) {
        bool moved = true;
        while (moved) {
            moved = false;
            for (std::uint32_t next : links_[ep][static_cast<std::size_t>(layer)]) {
                const double s = sim(next, h, build_ops_);
                if (s > ep_sim) {
                    ep_sim = s;
                    ep = next;
                    moved = true;
                }
            }
        }
    }

    const auto m = static_cast<std::size_t>(params_.max_degree);
    for (int layer = std::min(level, max_level_); layer >= 0; --layer) {
        const auto lay = static_cast<std::size_t>(layer);
        auto found = search_layer(h, ep, static_cast<std::size_t>(params_.ef_construction), layer, nullptr, nullptr,
                                  build_ops_);
        ep = found.front().node;
        const auto chosen = select_neighbors(std::move(found), m, build_ops_);
        for (const auto& c : chosen) links_[node][lay].push_back(c.node);

        const std::size_t cap = max_links_for(layer);
        for (const auto& c : chosen) {
            auto& back = links_[c.node][lay];
            back.push_back(node);
            if (back.size() <= cap) continue;
            std::vector<Scored> pool;
            pool.reserve(back.size());
            for (std::uint32_t other : back) pool.push_back({sim(c.node, other, build_ops_), other});
            std::sort(pool.begin(), pool.end(), [&](const Scored& a, const Scored& b) {
                if (a.sim != b.sim) return a.sim > b.sim;
                return ids_[a.node] < ids_[b.node];
            });
            const auto pruned = select_neighbors(std::move(pool), cap, build_ops_);
            back.clear();
            for (const auto& p : pruned) back.push_back(p.node);
        }
    }

    if (level > max_level_) {
        entry_ = node;
        max_level_ = level;
    }
}

NeighborList HnswGraph::search(const HashVector& query, std::size_t k, std::size_t ef, const SampleIndex* self,
                               const QueryOptions& opts, std::uint64_t& distance_ops) const {
    if (ids_.empty() || k == 0) return {};
    if (query.size() != dim_) throw std::invalid_argument("HnswGraph::search: dimension mismatch");

    std::uint32_t ep = entry_;
    double ep_sim = sim(ep, query, distance_ops);
    for (int layer = max_level_; layer > 0; --layer) {
        bool moved = true;
        while (moved) {
            moved = false;
            for (std::uint32_t next : links_[ep][static_cast<std::size_t>(layer)]) {
                const double s = sim(next, query, distance_ops);
                if (s > ep_sim) {
                    ep_sim = s;
                    ep = next;
                    moved = true;
                }
            }
        }
    }
    const auto found = search_layer(query, ep, std::max(ef, k), 0, self, &opts, distance_ops);
    NeighborList out;
    out.reserve(std::min(k, found.size()));
    for (std::size_t i = 0; i < found.size() && out.size() < k; ++i) out.push_back({ids_[found[i].node], found[i].sim});
    return out;
}

bool HnswGraph::connected() const {
    if (ids_.empty()) return true;
    std::vector<char> seen(ids_.size(), 0);
    std::vector<std::uint32_t> stack{entry_};
    seen[entry_] = 1;
    std::size_t reached = 1;
    while (!stack.empty()) {
        const auto node = stack.back();
        stack.pop_back();
        for (std::uint32_t next : links_[node][0]) {
            if (seen[next]) continue;
            seen[next] = 1;
            ++reached;
            stack.push_back(next);
        }
    }
    return reached == ids_.size();
}

std::size_t HnswGraph::max_links(int layer) const {
    std::size_t most = 0;
    for (const auto& node : links_)
        if (static_cast<std::size_t>(layer) < node.size()) most = std::max(most, node[static_cast<std::size_t>(layer)].size());
    return most;
}

LabelPartitionedIndex::LabelPartitionedIndex(HnswParams params, int dim) : params_(params), dim_(dim) {}

void LabelPartitionedIndex::insert(SampleIndex id, int label, const HashVector& h) {
    if (labels_.contains(id)) throw ConflictError("index already holds sample (" + std::to_string(id.client) + "," +
                                                  std::to_string(id.sample) + ")");
    auto& graph = partitions_[label];
    if (!graph)
        graph = std::make_unique<HnswGraph>(params_, dim_, derive_seed(params_.seed, static_cast<std::uint64_t>(label)));
    const auto before = graph->build_distance_ops();
    graph->insert(id, h);
    labels_.emplace(id, label);
    ops_.fetch_add(graph->build_distance_ops() - before, std::memory_order_relaxed);
}

NeighborList LabelPartitionedIndex::query(SampleIndex id, int label, const HashVector& h, std::size_t r,
                                          const QueryOptions& opts) const {
    const auto it = partitions_.find(label);
    if (it == partitions_.end()) return {};
    std::uint64_t ops = 0;
    const std::size_t ef = std::max(static_cast<std::size_t>(params_.ef_search), r + 1);
    auto out = it->second->search(h, r, ef, &id, opts, ops);
    ops_.fetch_add(ops, std::memory_order_relaxed);
    return out;
}

std::size_t LabelPartitionedIndex::partition_size(int label) const {
    const auto it = partitions_.find(label);
    return it == partitions_.end() ? 0 : it->second->size();
}

std::vector<int> LabelPartitionedIndex::labels() const {
    std::vector<int> out;
    for (const auto& [label, _] : partitions_) out.push_back(label);
    return out;
}

const HnswGraph* LabelPartitionedIndex::partition(int label) const {
    const auto it = partitions_.find(label);
    return it == partitions_.end() ? nullptr : it->second.get();
}

NeighborList query_exact(std::span<const Candidate> candidates, SampleIndex id, const HashVector& h, std::size_t r,
                         const QueryOptions& opts, std::uint64_t* distance_ops) {
    NeighborList all;
    all.reserve(candidates.size());
    for (const auto& c : candidates) {
        if (!passes(c.id, &id, &opts)) continue;
        if (distance_ops) ++*distance_ops;
        all.push_back({c.id, cosine(c.hash, h)});
    }
    const auto keep = std::min(r, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(), better);
    all.resize(keep);
    return all;
}

std::vector<NeighborList> brute_force_relations(std::span<const Candidate> candidates, std::size_t r,
                                                const QueryOptions& opts, std::uint64_t& distance_ops) {
    const std::size_t n = candidates.size();
    RealMatrix sims(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double s = cosine(candidates[i].hash, candidates[j].hash);
            ++distance_ops;
            sims(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = s;
            sims(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = s;
        }
    }
    std::vector<NeighborList> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        NeighborList row;
        for (std::size_t j = 0; j < n; ++j) {
            if (!passes(candidates[j].id, &candidates[i].id, &opts)) continue;
            row.push_back({candidates[j].id, sims(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))});
        }
        const auto keep = std::min(r, row.size());
        std::partial_sort(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(keep), row.end(), better);
        row.resize(keep);
        out[i] = std::move(row);
    }
    return out;
}

}  // namespace fedcache
