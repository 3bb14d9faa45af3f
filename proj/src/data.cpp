#include "fedcache/data.hpp"

#include "fedcache/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>

namespace fedcache {

std::size_t Partition::total() const {
    std::size_t n = 0;
    for (const auto& c : clients) n += c.size();
    return n;
}

Partition dirichlet_partition(const LabeledDataset& data, int num_clients, double alpha, std::uint64_t seed) {
    if (num_clients < 1) throw std::invalid_argument("dirichlet_partition: need at least one client");
    if (!(alpha > 0.0)) throw std::invalid_argument("dirichlet_partition: alpha must be positive");
    const auto n = static_cast<std::size_t>(data.size());
    const auto k = static_cast<std::size_t>(num_clients);
    if (num_clients == 1) {
        Partition p;
        p.clients.emplace_back(n);
        std::iota(p.clients[0].begin(), p.clients[0].end(), std::size_t{0});
        return p;
    }
    if (k > n / 2) throw std::invalid_argument("dirichlet_partition: fewer than two samples per client possible");

    std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(data.num_classes));
    for (std::size_t i = 0; i < n; ++i) by_class[static_cast<std::size_t>(data.labels[i])].push_back(i);

    Rng rng(seed);
    std::gamma_distribution<double> gamma(alpha, 1.0);
    constexpr int kMaxAttempts = 1000;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        Partition p;
        p.clients.resize(k);
        for (const auto& members : by_class) {
            if (members.empty()) continue;
            std::vector<double> weights(k);
            double total = 0.0;
            while (total <= 0.0) {
                for (auto& w : weights) w = gamma(rng);
                total = std::accumulate(weights.begin(), weights.end(), 0.0);
            }
            std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
            for (std::size_t i : members) p.clients[pick(rng)].push_back(i);
        }
        const bool ok = std::all_of(p.clients.begin(), p.clients.end(), [](const auto& c) { return c.size() >= 2; });
        if (!ok) continue;
        for (auto& c : p.clients) std::sort(c.begin(), c.end());
        return p;
    }
    throw std::runtime_error("dirichlet_partition: could not give every client two samples");
}

double mean_label_tv_distance(const LabeledDataset& data, const Partition& partition) {
    const auto classes = static_cast<std::size_t>(data.num_classes);
    std::vector<double> global(classes, 0.0);
    for (int y : data.labels) global[static_cast<std::size_t>(y)] += 1.0;
    for (auto& g : global) g /= static_cast<double>(data.size());

    double sum = 0.0;
    for (const auto& members : partition.clients) {
        std::vector<double> local(classes, 0.0);
        for (std::size_t i : members) local[static_cast<std::size_t>(data.labels[i])] += 1.0;
        double tv = 0.0;
        for (std::size_t c = 0; c < classes; ++c)
            tv += std::abs(local[c] / static_cast<double>(members.size()) - global[c]);
        sum += 0.5 * tv;
    }
    return sum / static_cast<double>(partition.clients.size());
}

ClientShard split_shard(const LabeledDataset& data, int client_id, const std::vector<std::size_t>& indices,
                        double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw std::invalid_argument("split_shard: test_fraction must lie in (0, 1)");
    const std::size_t n = indices.size();
    if (n < 2) throw std::invalid_argument("split_shard: need at least two samples");

    std::vector<std::size_t> order = indices;
    Rng rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    auto n_test = static_cast<std::size_t>(std::ceil(test_fraction * static_cast<double>(n) - 1e-9));
    n_test = std::clamp<std::size_t>(n_test, 1, n - 1);

    ClientShard shard;
    shard.client_id = client_id;
    shard.train_index.assign(order.begin(), order.end() - static_cast<std::ptrdiff_t>(n_test));
    shard.test_index.assign(order.end() - static_cast<std::ptrdiff_t>(n_test), order.end());
    shard.train = subset(data, shard.train_index);
    shard.test = subset(data, shard.test_index);
    return shard;
}

void subsample_train(ClientShard& shard, std::size_t keep, std::uint64_t seed) {
    if (keep == 0) throw std::invalid_argument("subsample_train: keep must be positive");
    if (keep >= shard.train_index.size()) return;
    std::vector<std::size_t> positions(shard.train_index.size());
    std::iota(positions.begin(), positions.end(), std::size_t{0});
    Rng rng(seed);
    std::shuffle(positions.begin(), positions.end(), rng);
    positions.resize(keep);
    std::sort(positions.begin(), positions.end());

    std::vector<std::size_t> kept_index;
    for (std::size_t p : positions) kept_index.push_back(shard.train_index[p]);
    shard.train = subset(shard.train, positions);
    shard.train_index = std::move(kept_index);
}

LabeledDataset synth_gaussian(int num_classes, int per_class, int dim, double class_sep, std::uint64_t seed) {
    if (num_classes <= 0 || per_class <= 0 || dim <= 0)
        throw std::invalid_argument("synth_gaussian: counts and dimension must be positive");
    Rng rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    RealMatrix means(dim, num_classes);
    for (int c = 0; c < num_classes; ++c) {
        RealVector u(dim);
        for (int j = 0; j < dim; ++j) u(j) = gauss(rng);
        means.col(c) = class_sep * u / u.norm();
    }

    LabeledDataset out;
    out.num_classes = num_classes;
    out.features.resize(dim, static_cast<Eigen::Index>(num_classes) * per_class);
    out.labels.reserve(static_cast<std::size_t>(num_classes) * static_cast<std::size_t>(per_class));
    Eigen::Index col = 0;
    for (int c = 0; c < num_classes; ++c) {
        for (int s = 0; s < per_class; ++s, ++col) {
            for (int j = 0; j < dim; ++j) out.features(j, col) = means(j, c) + gauss(rng);
            out.labels.push_back(c);
        }
    }
    return out;
}

namespace {

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset, const char* what) {
    if (offset + 4 > bytes.size())
        throw ParseError(std::string(what) + ": truncated header at byte " + std::to_string(bytes.size()), bytes.size());
    return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
           (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

}  // namespace

LabeledDataset parse_idx(std::span<const std::uint8_t> images, std::span<const std::uint8_t> labels) {
    constexpr std::uint32_t kImageMagic = 0x00000803;
    constexpr std::uint32_t kLabelMagic = 0x00000801;

    if (read_be32(images, 0, "images") != kImageMagic) throw ParseError("images: bad magic number", 0);
    if (read_be32(labels, 0, "labels") != kLabelMagic) throw ParseError("labels: bad magic number", 0);
    const std::size_t count = read_be32(images, 4, "images");
    const std::size_t rows = read_be32(images, 8, "images");
    const std::size_t cols = read_be32(images, 12, "images");
    const std::size_t label_count = read_be32(labels, 4, "labels");
    if (count != label_count)
        throw FormatError("IDX image count " + std::to_string(count) + " does not match label count " +
                          std::to_string(label_count));

    const std::size_t pixels = rows * cols;
    const std::size_t image_end = 16 + count * pixels;
    if (images.size() < image_end)
        throw ParseError("images: truncated pixel data at byte " + std::to_string(images.size()), images.size());
    if (labels.size() < 8 + count)
        throw ParseError("labels: truncated label data at byte " + std::to_string(labels.size()), labels.size());
    if (pixels == 0) throw FormatError("IDX images have zero pixels");

    LabeledDataset out;
    out.features.resize(static_cast<Eigen::Index>(pixels), static_cast<Eigen::Index>(count));
    out.labels.resize(count);
    int max_label = -1;
    for (std::size_t s = 0; s < count; ++s) {
        for (std::size_t p = 0; p < pixels; ++p)
            out.features(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(s)) =
                images[16 + s * pixels + p] / 255.0;
        out.labels[s] = labels[8 + s];
        max_label = std::max(max_label, out.labels[s]);
    }
    out.num_classes = max_label + 1;
    return out;
}

LabeledDataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
    const auto image_bytes = read_file(images);
    const auto label_bytes = read_file(labels);
    return parse_idx(image_bytes, label_bytes);
}

std::string manifest_line(const ClientShard& shard) {
    std::ostringstream os;
    os << shard.client_id << ", " << shard.train.size() << ", " << shard.test.size() << ',';
    for (auto c : class_counts(shard.train)) os << ' ' << c;
    return os.str();
}

void write_shard_manifest(const std::filesystem::path& path, const ClientShard& shard) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write manifest " + path.string());
    os << manifest_line(shard) << '\n';
    os << "train:";
    for (auto i : shard.train_index) os << ' ' << i;
    os << "\ntest:";
    for (auto i : shard.test_index) os << ' ' << i;
    os << '\n';
}

}  // namespace fedcache
