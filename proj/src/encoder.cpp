#include "fedcache/encoder.hpp"

#include "fedcache/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <string_view>

namespace fedcache {

EncoderSpec EncoderSpec::standard(int input_dim, std::uint64_t seed, int hash_dim) {
    EncoderSpec spec;
    spec.input_dim = input_dim;
    spec.widths = {2 * hash_dim, 2 * hash_dim, hash_dim};
    spec.seed = seed;
    spec.validate();
    return spec;
}

void EncoderSpec::validate() const {
    if (input_dim <= 0) throw std::invalid_argument("EncoderSpec: input_dim must be positive");
    if (widths.empty()) throw std::invalid_argument("EncoderSpec: at least one layer required");
    for (int w : widths)
        if (w <= 0) throw std::invalid_argument("EncoderSpec: widths must be positive");
    if (hash_dim() >= input_dim)
        throw std::invalid_argument("EncoderSpec: hash dimension must be smaller than the input dimension");
}

HashEncoder::HashEncoder(EncoderSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    Rng rng(spec_.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    int fan_in = spec_.input_dim;
    for (int width : spec_.widths) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
        RealMatrix w(width, fan_in);
        for (Eigen::Index j = 0; j < w.cols(); ++j)
            for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = scale * gauss(rng);
        RealVector b(width);
        for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = 0.1 * gauss(rng);
        weights_.push_back(std::move(w));
        biases_.push_back(std::move(b));
        fan_in = width;
    }
}

HashVector HashEncoder::encode(const RealVector& x) const {
    if (x.size() != spec_.input_dim) throw std::invalid_argument("encode: input dimension mismatch");
    RealVector h = x;
    for (std::size_t l = 0; l < weights_.size(); ++l) h = (weights_[l] * h + biases_[l]).array().tanh().matrix();
    ++calls_;
    return normalized(h);
}

std::vector<HashVector> HashEncoder::encode_all(const RealMatrix& inputs) const {
    std::vector<HashVector> out;
    out.reserve(static_cast<std::size_t>(inputs.cols()));
    for (Eigen::Index j = 0; j < inputs.cols(); ++j) out.push_back(encode(inputs.col(j)));
    return out;
}

HashVector normalized(const RealVector& v) {
    const double norm = v.norm();
    if (!std::isfinite(norm) || norm == 0.0) throw std::invalid_argument("cannot normalize zero or non-finite vector");
    return v / norm;
}

namespace {

template <typename T>
T parse_number(std::string_view tok, std::size_t line, const char* what) {
    T value{};
    const auto* first = tok.data();
    const auto* last = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || tok.empty())
        throw ParseError("line " + std::to_string(line) + ": bad " + what + " '" + std::string(tok) + "'", line);
    return value;
}

}  // namespace

HashTable load_hashes(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open hash file: " + path.string());
    HashTable table;
    Eigen::Index dim = -1;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto t1 = line.find('\t');
        const auto t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
        if (t2 == std::string::npos)
            throw ParseError("line " + std::to_string(lineno) + ": expected three tab-separated fields", lineno);
        const std::string_view view(line);
        SampleIndex id{parse_number<int>(view.substr(0, t1), lineno, "client id"),
                       parse_number<int>(view.substr(t1 + 1, t2 - t1 - 1), lineno, "sample id")};
        std::vector<double> values;
        std::string_view rest = view.substr(t2 + 1);
        while (true) {
            const auto comma = rest.find(',');
            values.push_back(parse_number<double>(rest.substr(0, comma), lineno, "vector entry"));
            if (comma == std::string_view::npos) break;
            rest = rest.substr(comma + 1);
        }
        RealVector v = Eigen::Map<RealVector>(values.data(), static_cast<Eigen::Index>(values.size()));
        if (dim < 0) dim = v.size();
        if (v.size() != dim)
            throw FormatError("line " + std::to_string(lineno) + ": dimension " + std::to_string(v.size()) +
                              " differs from " + std::to_string(dim));
        if (!v.allFinite()) throw FormatError("line " + std::to_string(lineno) + ": non-finite entry");
        const double norm = v.norm();
        if (norm == 0.0) throw FormatError("line " + std::to_string(lineno) + ": zero hash vector");
        if (std::abs(norm - 1.0) > 1e-6) v /= norm;
        if (!table.emplace(id, std::move(v)).second)
            throw FormatError("line " + std::to_string(lineno) + ": duplicate sample index");
    }
    return table;
}

void save_hashes(const std::filesystem::path& path, const HashTable& hashes) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open hash file for writing: " + path.string());
    char buf[32];
    for (const auto& [id, h] : hashes) {
        os << id.client << '\t' << id.sample << '\t';
        for (Eigen::Index j = 0; j < h.size(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", h(j));
            os << (j ? "," : "") << buf;
        }
        os << '\n';
    }
}

}  // namespace fedcache
