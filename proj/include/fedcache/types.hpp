#ifndef FEDCACHE_TYPES_HPP
#define FEDCACHE_TYPES_HPP

#include "fedcache/numeric.hpp"

#include <compare>
#include <cstdint>
#include <functional>
#include <ostream>
#include <random>
#include <vector>

namespace fedcache {

/// Global identity of a private training sample: (client k, local index i).
struct SampleIndex {
    int client = 0;
    int sample = 0;

    friend auto operator<=>(const SampleIndex&, const SampleIndex&) = default;
    friend std::ostream& operator<<(std::ostream& os, const SampleIndex& id) {
        return os << '(' << id.client << ',' << id.sample << ')';
    }
};

/// Column-major sample store: features.col(i) is sample i, labels[i] its class.
struct LabeledDataset {
    RealMatrix features;
    std::vector<int> labels;
    int num_classes = 0;

    Eigen::Index size() const { return features.cols(); }
    Eigen::Index dim() const { return features.rows(); }
    bool empty() const { return features.cols() == 0; }
};

/// Gathers the listed columns of `data` in order.
LabeledDataset subset(const LabeledDataset& data, const std::vector<std::size_t>& indices);

/// Per-class sample counts.
std::vector<std::size_t> class_counts(const LabeledDataset& data);

using Rng = std::mt19937_64;

/// Independent seed for a named sub-stream of a base seed (splitmix64 mixing).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace fedcache

template <>
struct std::hash<fedcache::SampleIndex> {
    std::size_t operator()(const fedcache::SampleIndex& id) const noexcept {
        return std::hash<std::uint64_t>{}((static_cast<std::uint64_t>(static_cast<std::uint32_t>(id.client)) << 32) |
                                          static_cast<std::uint32_t>(id.sample));
    }
};

#endif
