#include "fedcache/encoder.hpp"

#include "fedcache/errors.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

using namespace fedcache;

namespace {

RealVector random_vec(std::mt19937_64& rng, int dim) {
    std::normal_distribution<double> n(0.0, 1.0);
    RealVector v(dim);
    for (auto& x : v) x = n(rng);
    return v;
}

std::filesystem::path temp_file(const std::string& name, const std::string& content) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream(path) << content;
    return path;
}

}  // namespace

TEST(EncoderSpec, StandardShapeAndBottleneck) {
    const auto spec = EncoderSpec::standard(64, 1);
    EXPECT_EQ(spec.widths, (std::vector<int>{64, 64, 32}));
    EXPECT_EQ(spec.hash_dim(), 32);
    EXPECT_THROW(EncoderSpec::standard(32, 1).validate(), std::invalid_argument);
    EXPECT_THROW(HashEncoder(EncoderSpec::standard(16, 1)), std::invalid_argument);
}

TEST(HashEncoder, DeterministicAndUnitNorm) {
    const HashEncoder enc(EncoderSpec::standard(64, 42));
    const HashEncoder same(EncoderSpec::standard(64, 42));
    std::mt19937_64 rng(1);
    for (int i = 0; i < 100; ++i) {
        const RealVector x = random_vec(rng, 64);
        const HashVector h = enc.encode(x);
        EXPECT_EQ(h.size(), 32);
        EXPECT_NEAR(h.norm(), 1.0, 1e-12);
        EXPECT_EQ(h, enc.encode(x));
        EXPECT_EQ(h, same.encode(x));
    }
    EXPECT_EQ(enc.calls(), 200u);
}

TEST(HashEncoder, PreservesLocality) {
    const HashEncoder enc(EncoderSpec::standard(64, 3));
    std::mt19937_64 rng(2);
    double near = 0.0, far = 0.0;
    for (int i = 0; i < 100; ++i) {
        const RealVector x = random_vec(rng, 64);
        RealVector d = random_vec(rng, 64);
        d *= 0.01 * x.norm() / d.norm();
        near += enc.encode(x).dot(enc.encode(x + d));
        far += enc.encode(x).dot(enc.encode(random_vec(rng, 64)));
    }
    EXPECT_GT(near / 100, far / 100);
    EXPECT_GT(near / 100, 0.99);
}

TEST(HashEncoder, RejectsWrongInputLength) {
    const HashEncoder enc(EncoderSpec::standard(64, 3));
    EXPECT_THROW(enc.encode(RealVector::Zero(10)), std::invalid_argument);
}

TEST(Normalized, RejectsDegenerateVectors) {
    EXPECT_THROW(normalized(RealVector::Zero(3)), std::invalid_argument);
    EXPECT_THROW(normalized((RealVector(2) << 1, NAN).finished()), std::invalid_argument);
    EXPECT_NEAR(normalized((RealVector(2) << 3, 4).finished())(0), 0.6, 1e-15);
}

TEST(Hashes, EmptyFileIsEmptyMap) { EXPECT_TRUE(load_hashes(temp_file("fc_empty.tsv", "")).empty()); }

TEST(Hashes, RoundTrip) {
    std::mt19937_64 rng(7);
    HashTable table;
    for (int k = 0; k < 3; ++k)
        for (int i = 0; i < 5; ++i) table[{k, i}] = normalized(random_vec(rng, 8));
    const auto path = std::filesystem::temp_directory_path() / "fc_round.tsv";
    save_hashes(path, table);
    const auto back = load_hashes(path);
    ASSERT_EQ(back.size(), table.size());
    for (const auto& [id, h] : table) EXPECT_LT((back.at(id) - h).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Hashes, NonUnitVectorIsNormalized) {
    const auto back = load_hashes(temp_file("fc_nonunit.tsv", "0\t0\t3,4\n0\t1\t1,0\n"));
    EXPECT_NEAR(back.at({0, 0}).norm(), 1.0, 1e-15);
    EXPECT_NEAR(back.at({0, 0})(1), 0.8, 1e-15);
}

TEST(Hashes, MalformedFilesAreRejected) {
    try {
        load_hashes(temp_file("fc_bad.tsv", "0\t0\t1,0\n0\tx\t1,0\n"));
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.position(), 2u);
    }
    EXPECT_THROW(load_hashes(temp_file("fc_dim.tsv", "0\t0\t1,0\n0\t1\t1,0,0\n")), FormatError);
    EXPECT_THROW(load_hashes(temp_file("fc_zero.tsv", "0\t0\t0,0\n")), FormatError);
    EXPECT_THROW(load_hashes(temp_file("fc_dup.tsv", "0\t0\t1,0\n0\t0\t0,1\n")), FormatError);
}
