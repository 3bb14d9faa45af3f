#include "fedcache/types.hpp"

#include <stdexcept>

namespace fedcache {

LabeledDataset subset(const LabeledDataset& data, const std::vector<std::size_t>& indices) {
    LabeledDataset out;
    out.num_classes = data.num_classes;
    out.features.resize(data.dim(), static_cast<Eigen::Index>(indices.size()));
    out.labels.reserve(indices.size());
    for (std::size_t j = 0; j < indices.size(); ++j) {
        const auto i = indices[j];
        if (i >= static_cast<std::size_t>(data.size())) throw std::out_of_range("subset: index out of range");
        out.features.col(static_cast<Eigen::Index>(j)) = data.features.col(static_cast<Eigen::Index>(i));
        out.labels.push_back(data.labels[i]);
    }
    return out;
}

std::vector<std::size_t> class_counts(const LabeledDataset& data) {
    std::vector<std::size_t> counts(static_cast<std::size_t>(data.num_classes), 0);
    for (int y : data.labels) ++counts[static_cast<std::size_t>(y)];
    return counts;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace fedcache
