#ifndef FEDCACHE_ENCODER_HPP
#define FEDCACHE_ENCODER_HPP

#include "fedcache/numeric.hpp"
#include "fedcache/types.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <vector>

namespace fedcache {

/// Unit-norm code of one private sample.
using HashVector = RealVector;

inline constexpr int kDefaultHashDim = 32;

struct EncoderSpec {
    int input_dim = 0;
    /// Output widths of each layer; the last one is the hash dimension.
    std::vector<int> widths;
    std::uint64_t seed = 0;

    /// Depth-3 encoder with widths {2d, 2d, d}.
    static EncoderSpec standard(int input_dim, std::uint64_t seed, int hash_dim = kDefaultHashDim);

    int hash_dim() const { return widths.empty() ? 0 : widths.back(); }
    /// Requires positive widths and hash_dim < input_dim.
    void validate() const;
};

/// Fixed random feature map: each layer is tanh(W x + b) with seeded Gaussian
/// weights scaled by 1/sqrt(fan_in); the output is L2-normalized.
class HashEncoder {
public:
    explicit HashEncoder(EncoderSpec spec);

    const EncoderSpec& spec() const { return spec_; }
    HashVector encode(const RealVector& x) const;
    /// Encodes every column.
    std::vector<HashVector> encode_all(const RealMatrix& inputs) const;

    /// Number of samples encoded so far.
    std::uint64_t calls() const { return calls_; }

private:
    EncoderSpec spec_;
    std::vector<RealMatrix> weights_;
    std::vector<RealVector> biases_;
    mutable std::uint64_t calls_ = 0;
};

/// Rescales to unit L2 norm; rejects zero or non-finite vectors.
HashVector normalized(const RealVector& v);

using HashTable = std::map<SampleIndex, HashVector>;

/// Text format, one record per line: client_id<TAB>sample_id<TAB>v1,...,vd.
/// Vectors whose norm is off by more than 1e-6 are renormalized on load.
HashTable load_hashes(const std::filesystem::path& path);
void save_hashes(const std::filesystem::path& path, const HashTable& hashes);

}  // namespace fedcache

#endif
