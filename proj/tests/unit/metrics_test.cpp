#include "fedcache/metrics.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

using namespace fedcache;

namespace {

MetricsReport report_of(const std::vector<double>& avg, std::uint64_t step = 100) {
    MetricsReport r;
    r.algorithm = "x";
    for (std::size_t i = 0; i < avg.size(); ++i) {
        RoundRecord rec;
        rec.round = static_cast<int>(i + 1);
        rec.avg_ua = avg[i];
        rec.ua = {avg[i]};
        rec.bytes_up = step * (i + 1);
        rec.bytes_down = step * (i + 1);
        r.rounds.push_back(rec);
    }
    return r;
}

}  // namespace

TEST(Maua, MaxOfMeans) {
    MetricsReport r;
    RoundRecord rec;
    rec.round = 1;
    rec.ua = {0.5, 0.7};
    rec.avg_ua = 0.6;
    r.rounds.push_back(rec);
    EXPECT_DOUBLE_EQ(maua(r), 0.6);
    EXPECT_DOUBLE_EQ(maua(report_of({0.6, 0.8, 0.7})), 0.8);
    EXPECT_THROW(maua(MetricsReport{}), std::invalid_argument);
}

TEST(Maua, RandomReportsAndReorderInvariance) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> avg(10);
        for (auto& a : avg) a = u(rng);
        auto r = report_of(avg);
        EXPECT_DOUBLE_EQ(maua(r), *std::max_element(avg.begin(), avg.end()));
        std::shuffle(r.rounds.begin(), r.rounds.end(), rng);
        EXPECT_DOUBLE_EQ(maua(r), *std::max_element(avg.begin(), avg.end()));
    }
}

TEST(CommToReach, CrossingRound) {
    const auto r = report_of({0.2, 0.5, 0.4, 0.9});
    EXPECT_FALSE(comm_to_reach(r, 0.95));
    EXPECT_EQ(comm_to_reach(r, 0.0), 200u);
    EXPECT_EQ(comm_to_reach(r, 0.45), 400u);
    EXPECT_EQ(comm_to_reach(r, 0.6), 800u);
    auto shuffled = r;
    std::reverse(shuffled.rounds.begin(), shuffled.rounds.end());
    EXPECT_EQ(comm_to_reach(shuffled, 0.45), 400u);
}

TEST(CommToReach, NonDecreasingInTarget) {
    const auto r = report_of({0.1, 0.3, 0.25, 0.6, 0.55, 0.7});
    std::optional<std::uint64_t> prev = 0;
    for (double t = 0.0; t <= 0.7; t += 0.01) {
        const auto b = comm_to_reach(r, t);
        ASSERT_TRUE(b);
        EXPECT_GE(*b, *prev);
        prev = b;
    }
}

TEST(Speedup, PublishedArithmetic) {
    EXPECT_DOUBLE_EQ(*speedup(5.0, 5.0), 1.0);
    EXPECT_DOUBLE_EQ(round_to(*speedup(13.25, 0.99), 1), 13.4);
    EXPECT_DOUBLE_EQ(round_to(*speedup(20.71, 0.08), 1), 258.9);
    EXPECT_FALSE(speedup(std::nullopt, 1.0));
    EXPECT_FALSE(speedup(1.0, std::nullopt));
    EXPECT_FALSE(speedup(1.0, 0.0));
}

TEST(Speedup, ReciprocalProduct) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.01, 100);
    for (int i = 0; i < 100; ++i) {
        const double a = u(rng), b = u(rng);
        EXPECT_NEAR(*speedup(a, b) * *speedup(b, a), 1.0, 1e-9);
    }
}

TEST(Csv, RoundTripAndSummary) {
    auto r = report_of({0.2, 0.5, 0.4});
    r.algorithm = "fedcache";
    r.init_bytes = 50;
    finalize(r, {0.3, 0.9});
    const auto csv = to_csv(r);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "round,avg_ua,maua,bytes_up,bytes_down");
    EXPECT_NE(csv.find("3,0.400000,0.500000,300,300"), std::string::npos);
    EXPECT_NE(csv.find("# summary algorithm=fedcache"), std::string::npos);
    const auto back = parse_csv(csv);
    EXPECT_EQ(back.algorithm, "fedcache");
    EXPECT_EQ(back.rounds.size(), 3u);
    EXPECT_DOUBLE_EQ(back.maua, 0.5);
    EXPECT_EQ(back.init_bytes, 50u);
    EXPECT_EQ(back.acc_at.at(0.3), 400u);
    EXPECT_FALSE(back.acc_at.at(0.9));
    EXPECT_EQ(to_csv(r), csv);
    EXPECT_THROW(parse_csv("bad header\n"), std::invalid_argument);
}

TEST(Compare, BaseIsLargestReachingArm) {
    auto a = report_of({0.5, 0.7}, 1000);
    a.algorithm = "heavy";
    auto b = report_of({0.7, 0.8}, 10);
    b.algorithm = "light";
    auto c = report_of({0.3, 0.4}, 1);
    c.algorithm = "weak";
    const auto rows = compare({a, b, c}, 0.6);
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_DOUBLE_EQ(*rows[0].speedup, 1.0);
    EXPECT_DOUBLE_EQ(*rows[1].speedup, 200.0);
    EXPECT_FALSE(rows[2].comm_bytes);
    const auto table = comparison_table(rows);
    EXPECT_NE(table.find("x200.0"), std::string::npos);
    EXPECT_NE(table.find("Speed-up"), std::string::npos);
}
