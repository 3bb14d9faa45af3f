#ifndef FEDCACHE_KNOWLEDGE_CACHE_HPP
#define FEDCACHE_KNOWLEDGE_CACHE_HPP

#include "fedcache/ann_index.hpp"
#include "fedcache/encoder.hpp"
#include "fedcache/numeric.hpp"
#include "fedcache/types.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <vector>

namespace fedcache {

/// Latest logits stored for one sample. Version 0 is the all-zero initial value.
struct Knowledge {
    RealVector logits;
    std::uint64_t version = 0;
};

enum class IndexBackend { hnsw, exact };

struct RelationOptions {
    std::size_t related = 16;  ///< R
    HnswParams hnsw;
    IndexBackend backend = IndexBackend::hnsw;
    QueryOptions query;
};

/// Server-side knowledge store.
///
///   LI: label -> sample indexes        IH: sample index -> hash
///   IK: sample index -> knowledge      IR: sample index -> related indexes
///
/// Entries are added with init_entry() while the cache is open. Once
/// build_relations() has run, the cache is frozen: LI, IH and IR never change
/// again and only IK is written. Post-freeze, fetch() and update() may be called
/// concurrently; each IK entry is replaced atomically as a whole.
class KnowledgeCache {
public:
    KnowledgeCache(int num_classes, int hash_dim);

    KnowledgeCache(const KnowledgeCache&) = delete;
    KnowledgeCache& operator=(const KnowledgeCache&) = delete;

    void init_entry(SampleIndex id, int label, const HashVector& h);
    void build_relations(const RelationOptions& opts);

    /// IK(IR(id)) as value copies, in IR order.
    std::vector<Knowledge> fetch(SampleIndex id) const;
    /// IK(id) <- z. Overwrites; bumps the version.
    void update(SampleIndex id, const RealVector& z);

    bool frozen() const { return frozen_; }
    bool contains(SampleIndex id) const { return slots_.contains(id); }
    std::size_t size() const { return ids_.size(); }
    int num_classes() const { return num_classes_; }
    int hash_dim() const { return hash_dim_; }

    Knowledge knowledge(SampleIndex id) const;
    const HashVector& hash(SampleIndex id) const;
    int label(SampleIndex id) const;
    std::vector<SampleIndex> relations(SampleIndex id) const;
    const std::map<int, std::set<SampleIndex>>& label_index() const { return li_; }
    std::vector<SampleIndex> ids() const { return ids_; }

    /// Cosine evaluations spent building IR.
    std::uint64_t relation_distance_ops() const { return relation_ops_; }

    struct MapSizes {
        std::size_t li = 0, ih = 0, ik = 0, ir = 0;
        friend bool operator==(const MapSizes&, const MapSizes&) = default;
    };
    MapSizes map_sizes() const;

    /// One line per entry: k<TAB>i<TAB>label<TAB>version<TAB>z1,...,zC.
    void export_snapshot(const std::filesystem::path& path) const;

private:
    std::size_t slot(SampleIndex id) const;
    std::mutex& lock_for(std::size_t slot) const { return stripes_[slot % stripes_.size()]; }

    int num_classes_;
    int hash_dim_;
    bool frozen_ = false;
    std::map<SampleIndex, std::size_t> slots_;
    std::vector<SampleIndex> ids_;
    std::vector<int> labels_;
    std::vector<HashVector> hashes_;
    std::vector<Knowledge> knowledge_;
    std::vector<std::vector<std::size_t>> relations_;
    std::map<int, std::set<SampleIndex>> li_;
    std::uint64_t relation_ops_ = 0;
    mutable std::array<std::mutex, 64> stripes_;
};

/// Mean of the teachers' logits followed by softmax_temp. Returns nothing for
/// an empty list, meaning the sample has no teacher.
std::optional<RealVector> ensemble(std::span<const Knowledge> teachers, double temperature);

}  // namespace fedcache

#endif
