#ifndef FEDCACHE_DATA_HPP
#define FEDCACHE_DATA_HPP

#include "fedcache/types.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace fedcache {

/// Global sample indexes per client, ascending within each client.
struct Partition {
    std::vector<std::vector<std::size_t>> clients;

    std::size_t num_clients() const { return clients.size(); }
    std::size_t total() const;
};

/// Per-class Dirichlet split: for each class draw p ~ Dir(alpha * 1_K) and
/// assign each of its samples to a client drawn from p. The whole draw is
/// repeated (at most 1000 times) until every client holds at least two samples.
Partition dirichlet_partition(const LabeledDataset& data, int num_clients, double alpha, std::uint64_t seed);

/// Mean over clients of the total-variation distance between the client's
/// label distribution and the global one.
double mean_label_tv_distance(const LabeledDataset& data, const Partition& partition);

struct ClientShard {
    int client_id = 0;
    LabeledDataset train;
    LabeledDataset test;
    /// Global indexes of the train / test samples.
    std::vector<std::size_t> train_index;
    std::vector<std::size_t> test_index;
};

/// Seeded shuffle of the client's samples; the last ceil(test_fraction * n)
/// become the test split, keeping at least one sample on each side.
ClientShard split_shard(const LabeledDataset& data, int client_id, const std::vector<std::size_t>& indices,
                        double test_fraction, std::uint64_t seed);

/// Keeps a seeded random subset of `keep` train samples (no-op when keep >= n).
void subsample_train(ClientShard& shard, std::size_t keep, std::uint64_t seed);

/// Class c ~ N(class_sep * u_c, I) for a seeded random unit direction u_c.
/// Samples are laid out class by class.
LabeledDataset synth_gaussian(int num_classes, int per_class, int dim, double class_sep, std::uint64_t seed);

/// IDX image (magic 0x00000803) and label (0x00000801) files. Pixels are
/// scaled to [0, 1] and flattened row-major. The class count is max label + 1.
LabeledDataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);
LabeledDataset parse_idx(std::span<const std::uint8_t> images, std::span<const std::uint8_t> labels);

/// `client_id, n_train, n_test, c_0 c_1 ... c_{C-1}` with per-class train counts.
std::string manifest_line(const ClientShard& shard);

/// Manifest line followed by `train:` and `test:` lines listing global indexes.
void write_shard_manifest(const std::filesystem::path& path, const ClientShard& shard);

}  // namespace fedcache

#endif
