#ifndef FEDCACHE_ANN_INDEX_HPP
#define FEDCACHE_ANN_INDEX_HPP

#include "fedcache/encoder.hpp"
#include "fedcache/types.hpp"

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <vector>

namespace fedcache {

struct HnswParams {
    int max_degree = 16;  ///< M; layer 0 keeps up to 2M links
    int ef_construction = 200;
    int ef_search = 64;
    std::uint64_t seed = 0x5eed;
};

struct Neighbor {
    SampleIndex id;
    double similarity = 0.0;

    friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Sorted by descending similarity, ties by ascending SampleIndex.
using NeighborList = std::vector<Neighbor>;

struct QueryOptions {
    /// Drop candidates owned by the querying client.
    bool exclude_same_client = false;
};

/// Cosine similarity of unit vectors, i.e. their dot product.
inline double cosine(const RealVector& a, const RealVector& b) { return a.dot(b); }

/// One hierarchical navigable small-world graph over unit vectors.
/// Not thread-safe for insertion; const searches may run concurrently.
class HnswGraph {
public:
    HnswGraph(HnswParams params, int dim, std::uint64_t level_seed);

    void insert(SampleIndex id, const HashVector& h);

    /// Up to k results that pass the filter (self is always excluded when
    /// `self` is set), best first. Beam width is max(ef, k).
    NeighborList search(const HashVector& query, std::size_t k, std::size_t ef, const SampleIndex* self,
                        const QueryOptions& opts, std::uint64_t& distance_ops) const;

    std::size_t size() const { return ids_.size(); }
    int max_level() const { return max_level_; }
    /// True when every node is reachable from the entry point on layer 0.
    bool connected() const;
    /// Largest link-list length seen on `layer`.
    std::size_t max_links(int layer) const;

    std::uint64_t build_distance_ops() const { return build_ops_; }

private:
    using Links = std::vector<std::uint32_t>;

    struct Scored {
        double sim;
        std::uint32_t node;
    };

    double sim(std::uint32_t a, const HashVector& q, std::uint64_t& ops) const;
    double sim(std::uint32_t a, std::uint32_t b, std::uint64_t& ops) const;
    std::vector<Scored> search_layer(const HashVector& q, std::uint32_t entry, std::size_t ef, int layer,
                                     const SampleIndex* self, const QueryOptions* opts, std::uint64_t& ops) const;
    std::vector<Scored> select_neighbors(std::vector<Scored> candidates, std::size_t m, std::uint64_t& ops) const;
    std::size_t max_links_for(int layer) const;

    HnswParams params_;
    int dim_;
    Rng level_rng_;
    double level_mult_;
    std::vector<SampleIndex> ids_;
    std::vector<double> data_;               // dim_ x n, column per node
    std::vector<std::vector<Links>> links_;  // node -> layer -> neighbors
    std::uint32_t entry_ = 0;
    int max_level_ = -1;
    std::uint64_t build_ops_ = 0;
};

/// R-nearest-neighbor retrieval restricted to elements that share a label.
/// Build with insert() from one thread; afterwards query() is safe from any
/// number of threads.
class LabelPartitionedIndex {
public:
    explicit LabelPartitionedIndex(HnswParams params = {}, int dim = kDefaultHashDim);

    /// Throws ConflictError when `id` is already present.
    void insert(SampleIndex id, int label, const HashVector& h);

    /// Up to R same-label neighbors of `id`, excluding `id` itself. An unknown
    /// label yields an empty list.
    NeighborList query(SampleIndex id, int label, const HashVector& h, std::size_t r,
                       const QueryOptions& opts = {}) const;

    std::size_t size() const { return labels_.size(); }
    std::size_t partition_size(int label) const;
    std::vector<int> labels() const;
    const HnswGraph* partition(int label) const;

    /// Cosine evaluations during construction and queries since the last reset.
    std::uint64_t distance_ops() const { return ops_.load(std::memory_order_relaxed); }
    void reset_distance_ops() { ops_.store(0, std::memory_order_relaxed); }

    const HnswParams& params() const { return params_; }

private:
    HnswParams params_;
    int dim_;
    std::map<int, std::unique_ptr<HnswGraph>> partitions_;
    std::map<SampleIndex, int> labels_;
    mutable std::atomic<std::uint64_t> ops_{0};
};

struct Candidate {
    SampleIndex id;
    HashVector hash;
};

/// Exact top-R by full scan over `candidates` (one label's elements).
/// Ties break by ascending SampleIndex. Adds one to `distance_ops` per
/// cosine evaluated when given.
NeighborList query_exact(std::span<const Candidate> candidates, SampleIndex id, const HashVector& h, std::size_t r,
                         const QueryOptions& opts = {}, std::uint64_t* distance_ops = nullptr);

/// Exact R-neighbor lists for every element of one partition, evaluating each
/// unordered pair once: N(N-1)/2 cosines. Result i belongs to candidates[i].
std::vector<NeighborList> brute_force_relations(std::span<const Candidate> candidates, std::size_t r,
                                                const QueryOptions& opts, std::uint64_t& distance_ops);

}  // namespace fedcache

#endif
