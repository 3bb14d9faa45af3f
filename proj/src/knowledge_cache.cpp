#include "fedcache/knowledge_cache.hpp"

#include "fedcache/errors.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace fedcache {

namespace {

std::string describe(SampleIndex id) {
    std::ostringstream os;
    os << id;
    return os.str();
}

}  // namespace

KnowledgeCache::KnowledgeCache(int num_classes, int hash_dim) : num_classes_(num_classes), hash_dim_(hash_dim) {
    if (num_classes <= 0) throw std::invalid_argument("KnowledgeCache: num_classes must be positive");
    if (hash_dim <= 0) throw std::invalid_argument("KnowledgeCache: hash_dim must be positive");
}

std::size_t KnowledgeCache::slot(SampleIndex id) const {
    const auto it = slots_.find(id);
    if (it == slots_.end()) throw NotFoundError("knowledge cache has no sample " + describe(id));
    return it->second;
}

void KnowledgeCache::init_entry(SampleIndex id, int label, const HashVector& h) {
    if (frozen_) throw StateError("knowledge cache is frozen; no new entries");
    if (slots_.contains(id)) throw ConflictError("duplicate sample index " + describe(id));
    if (label < 0 || label >= num_classes_) throw std::invalid_argument("init_entry: label out of range");
    if (h.size() != hash_dim_) throw std::invalid_argument("init_entry: hash dimension mismatch");

    const std::size_t s = ids_.size();
    slots_.emplace(id, s);
    ids_.push_back(id);
    labels_.push_back(label);
    hashes_.push_back(h);
    knowledge_.push_back({RealVector::Zero(num_classes_), 0});
    relations_.emplace_back();
    li_[label].insert(id);
}

void KnowledgeCache::build_relations(const RelationOptions& opts) {
    if (frozen_) throw StateError("relations already built");
    if (opts.related == 0) throw std::invalid_argument("build_relations: R must be positive");

    if (opts.backend == IndexBackend::hnsw) {
        LabelPartitionedIndex index(opts.hnsw, hash_dim_);
        for (std::size_t s = 0; s < ids_.size(); ++s) index.insert(ids_[s], labels_[s], hashes_[s]);
        for (std::size_t s = 0; s < ids_.size(); ++s) {
            const auto found = index.query(ids_[s], labels_[s], hashes_[s], opts.related, opts.query);
            auto& rel = relations_[s];
            rel.clear();
            for (const auto& n : found) rel.push_back(slots_.at(n.id));
        }
        relation_ops_ = index.distance_ops();
    } else {
        std::uint64_t ops = 0;
        for (const auto& [label, members] : li_) {
            std::vector<Candidate> part;
            part.reserve(members.size());
            for (const auto& id : members) part.push_back({id, hashes_[slots_.at(id)]});
            const auto lists = brute_force_relations(part, opts.related, opts.query, ops);
            for (std::size_t j = 0; j < part.size(); ++j) {
                auto& rel = relations_[slots_.at(part[j].id)];
                rel.clear();
                for (const auto& n : lists[j]) rel.push_back(slots_.at(n.id));
            }
        }
        relation_ops_ = ops;
    }
    frozen_ = true;
}

std::vector<Knowledge> KnowledgeCache::fetch(SampleIndex id) const {
    if (!frozen_) throw StateError("fetch before relations are built");
    const auto& rel = relations_[slot(id)];
    std::vector<Knowledge> out;
    out.reserve(rel.size());
    for (std::size_t s : rel) {
        std::lock_guard lock(lock_for(s));
        out.push_back(knowledge_[s]);
    }
    return out;
}

void KnowledgeCache::update(SampleIndex id, const RealVector& z) {
    if (!frozen_) throw StateError("update before relations are built");
    const std::size_t s = slot(id);
    if (z.size() != num_classes_) throw std::invalid_argument("update: knowledge length must equal class count");
    std::lock_guard lock(lock_for(s));
    knowledge_[s].logits = z;
    ++knowledge_[s].version;
}

Knowledge KnowledgeCache::knowledge(SampleIndex id) const {
    const std::size_t s = slot(id);
    std::lock_guard lock(lock_for(s));
    return knowledge_[s];
}

const HashVector& KnowledgeCache::hash(SampleIndex id) const { return hashes_[slot(id)]; }

int KnowledgeCache::label(SampleIndex id) const { return labels_[slot(id)]; }

std::vector<SampleIndex> KnowledgeCache::relations(SampleIndex id) const {
    std::vector<SampleIndex> out;
    for (std::size_t s : relations_[slot(id)]) out.push_back(ids_[s]);
    return out;
}

KnowledgeCache::MapSizes KnowledgeCache::map_sizes() const {
    MapSizes sizes;
    for (const auto& [_, members] : li_) sizes.li += members.size();
    sizes.ih = hashes_.size();
    sizes.ik = knowledge_.size();
    sizes.ir = relations_.size();
    return sizes;
}

void KnowledgeCache::export_snapshot(const std::filesystem::path& path) const {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open snapshot file: " + path.string());
    char buf[32];
    for (const auto& [id, s] : slots_) {
        const Knowledge k = knowledge(id);
        os << id.client << '\t' << id.sample << '\t' << labels_[s] << '\t' << k.version << '\t';
        for (Eigen::Index j = 0; j < k.logits.size(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", k.logits(j));
            os << (j ? "," : "") << buf;
        }
        os << '\n';
    }
}

std::optional<RealVector> ensemble(std::span<const Knowledge> teachers, double temperature) {
    if (teachers.empty()) return std::nullopt;
    RealVector sum = RealVector::Zero(teachers.front().logits.size());
    for (const auto& t : teachers) {
        if (t.logits.size() != sum.size()) throw std::invalid_argument("ensemble: teacher length mismatch");
        sum += t.logits;
    }
    return softmax_temp(sum / static_cast<double>(teachers.size()), temperature);
}

}  // namespace fedcache
