#include "fedcache/numeric.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace fedcache;

namespace {

RealVector vec(std::initializer_list<double> v) {
    RealVector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

double to_double(const oracle::hp_float& v) { return v.convert_to<double>(); }

}  // namespace

TEST(Softmax, UniformForEqualLogits) {
    const RealVector p = softmax_temp(vec({0, 0, 0}), 1.0);
    for (Eigen::Index i = 0; i < 3; ++i) EXPECT_NEAR(p(i), 1.0 / 3.0, 1e-15);
}

TEST(Softmax, MatchesHighPrecisionOracle) {
    const RealVector p = softmax_temp(vec({1, 2, 3}), 2.0);
    const auto ref = oracle::hp_softmax({1, 2, 3}, 2.0);
    for (Eigen::Index i = 0; i < 3; ++i) EXPECT_NEAR(p(i), to_double(ref[static_cast<std::size_t>(i)]), 1e-15);
}

TEST(Softmax, ShiftInvariant) {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> n(0.0, 3.0);
    for (int trial = 0; trial < 200; ++trial) {
        RealVector x(7);
        for (auto& v : x) v = n(rng);
        const double c = n(rng) * 10.0;
        const double t = 0.1 + std::abs(n(rng));
        const RealVector a = softmax_temp(x, t);
        const RealVector b = softmax_temp((x.array() + c).matrix(), t);
        EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_NEAR(a.sum(), 1.0, 1e-9);
        EXPECT_GT(a.minCoeff(), 0.0);
    }
}

TEST(Softmax, StableForLargeLogits) {
    const RealVector p = softmax_temp(vec({1000, 1000, -1000}), 1.0);
    EXPECT_NEAR(p(0), 0.5, 1e-15);
    EXPECT_TRUE(p.allFinite());
}

TEST(Softmax, RejectsBadInput) {
    EXPECT_THROW(softmax_temp(RealVector(), 1.0), std::invalid_argument);
    EXPECT_THROW(softmax_temp(vec({1, NAN}), 1.0), std::invalid_argument);
    EXPECT_THROW(softmax_temp(vec({1, INFINITY}), 1.0), std::invalid_argument);
    EXPECT_THROW(softmax_temp(vec({1, 2}), 0.0), std::invalid_argument);
    EXPECT_THROW(softmax_temp(vec({1, 2}), -1.0), std::invalid_argument);
}

TEST(CrossEntropy, ConfidentCorrectIsNearZero) {
    const double eps = 1e-12;
    EXPECT_NEAR(cross_entropy(vec({1 - 2 * eps, eps, eps}), 0), 0.0, 1e-11);
}

TEST(CrossEntropy, UniformIsLog3) { EXPECT_NEAR(cross_entropy(vec({1.0 / 3, 1.0 / 3, 1.0 / 3}), 1), std::log(3.0), 1e-15); }

TEST(CrossEntropy, MatchesHighPrecisionOracle) {
    const double ce = cross_entropy(softmax_temp(vec({1, 2, 3}), 1.0), 2);
    EXPECT_NEAR(ce, to_double(oracle::hp_cross_entropy({1, 2, 3}, 2, 1.0)), 1e-15);
}

TEST(CrossEntropy, RejectsLabelOutOfRange) {
    EXPECT_THROW(cross_entropy(vec({0.5, 0.5}), 2), std::invalid_argument);
    EXPECT_THROW(cross_entropy(vec({0.5, 0.5}), -1), std::invalid_argument);
}

TEST(KlDiv, ZeroForIdenticalDistributions) {
    const RealVector p = vec({0.2, 0.3, 0.5});
    EXPECT_DOUBLE_EQ(kl_div(p, p), 0.0);
    const RealVector u = vec({0.25, 0.25, 0.25, 0.25});
    EXPECT_DOUBLE_EQ(kl_div(u, u), 0.0);
}

TEST(KlDiv, MatchesHighPrecisionOracle) {
    const double kl = kl_div(vec({0.7, 0.2, 0.1}), vec({0.1, 0.2, 0.7}));
    EXPECT_NEAR(kl, to_double(oracle::hp_kl({0.7, 0.2, 0.1}, {0.1, 0.2, 0.7})), 1e-15);
}

TEST(KlDiv, ClampsZeroTeacherEntries) {
    const double kl = kl_div(vec({0.5, 0.5}), vec({1.0, 0.0}));
    EXPECT_TRUE(std::isfinite(kl));
    EXPECT_NEAR(kl, 0.5 * std::log(0.5) + 0.5 * std::log(0.5 / 1e-12), 1e-12);
}

TEST(KlDiv, NonNegativeOnRandomPairs) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(0.0, 2.0);
    for (int trial = 0; trial < 500; ++trial) {
        RealVector a(5), b(5);
        for (auto& v : a) v = n(rng);
        for (auto& v : b) v = n(rng);
        EXPECT_GE(kl_div(softmax_temp(a, 1.0), softmax_temp(b, 1.0)), 0.0);
    }
}

TEST(KlDiv, RejectsLengthMismatch) { EXPECT_THROW(kl_div(vec({1.0}), vec({0.5, 0.5})), std::invalid_argument); }

TEST(SgdStep, Arithmetic) {
    const RealVector out = sgd_step(vec({1, 1}), vec({1, -1}), 0.01);
    EXPECT_DOUBLE_EQ(out(0), 0.99);
    EXPECT_DOUBLE_EQ(out(1), 1.01);
    EXPECT_EQ(sgd_step(vec({3, 4}), vec({0, 0}), 0.5), vec({3, 4}));
    EXPECT_THROW(sgd_step(vec({1}), vec({1, 2}), 0.1), std::invalid_argument);
}

TEST(SgdStep, MatchesElementwiseFormula) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-5, 5);
    RealVector p(50), g(50);
    for (auto& v : p) v = u(rng);
    for (auto& v : g) v = u(rng);
    const RealVector out = sgd_step(p, g, 0.03);
    for (Eigen::Index i = 0; i < 50; ++i) EXPECT_EQ(out(i), p(i) - 0.03 * g(i));
}

TEST(FiniteDiff, QuadraticAndConstant) {
    const RealVector g = finite_diff_grad([](const RealVector& x) { return x.squaredNorm(); }, vec({1, 2}), 1e-5);
    EXPECT_NEAR(g(0), 2.0, 1e-8);
    EXPECT_NEAR(g(1), 4.0, 1e-8);
    const RealVector z = finite_diff_grad([](const RealVector&) { return 7.0; }, vec({1, 2, 3}), 1e-5);
    EXPECT_EQ(z, RealVector::Zero(3));
}

namespace {

double rel_err(const RealVector& a, const RealVector& b) {
    return (a - b).norm() / std::max(1e-12, a.norm() + b.norm());
}

}  // namespace

TEST(LogitGradients, MatchFiniteDifferences) {
    std::mt19937_64 rng(21);
    std::normal_distribution<double> n(0.0, 1.5);
    for (int trial = 0; trial < 50; ++trial) {
        RealVector z(6), t(6);
        for (auto& v : z) v = n(rng);
        for (auto& v : t) v = n(rng);
        const RealVector teacher = softmax_temp(t, 1.0);
        const double temp = 0.5 + (trial % 4) * 0.5;
        const int y = trial % 6;

        const RealVector ce = cross_entropy_logit_grad(softmax_temp(z, temp), y, temp);
        const RealVector ce_fd = finite_diff_grad(
            [&](const RealVector& x) { return cross_entropy(softmax_temp(x, temp), y); }, z, 1e-5);
        EXPECT_LT(rel_err(ce, ce_fd), 1e-4);

        const RealVector kl = kl_logit_grad(softmax_temp(z, temp), teacher, temp);
        const RealVector kl_fd =
            finite_diff_grad([&](const RealVector& x) { return kl_div(softmax_temp(x, temp), teacher); }, z, 1e-5);
        EXPECT_LT(rel_err(kl, kl_fd), 1e-4);

        const RealVector sce = soft_cross_entropy_logit_grad(softmax_temp(z, temp), teacher, temp);
        const RealVector sce_fd = finite_diff_grad(
            [&](const RealVector& x) { return soft_cross_entropy(softmax_temp(x, temp), teacher); }, z, 1e-5);
        EXPECT_LT(rel_err(sce, sce_fd), 1e-4);
    }
}

TEST(Argmax, TiesGoToLowestIndex) {
    EXPECT_EQ(argmax(vec({1, 3, 3, 2})), 1);
    EXPECT_EQ(argmax(vec({0, 0, 0})), 0);
}

TEST(Templates, WorkWithLongDouble) {
    Vector<long double> z(3);
    z << 1.0L, 2.0L, 3.0L;
    const auto p = softmax_temp(z, 2.0L);
    const auto ref = oracle::hp_softmax({1, 2, 3}, 2.0);
    EXPECT_NEAR(static_cast<double>(p(2)), to_double(ref[2]), 1e-15);
}
