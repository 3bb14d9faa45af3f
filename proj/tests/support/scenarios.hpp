#ifndef FEDCACHE_TEST_SCENARIOS_HPP
#define FEDCACHE_TEST_SCENARIOS_HPP

#include "oracles.hpp"

#include "fedcache/config.hpp"
#include "fedcache/federation.hpp"

#include <cstdint>
#include <vector>

namespace scenarios {

/// Tiny federations for the oracle equivalence checks.
/// 0: 2 clients x 4 samples, R=1, batch 2.
/// 1: 3 clients x 5 samples, R=2, batch 2, mixed widths, T=2.
/// 2: 4 clients x 4 samples, R=2, batch 3, one class with a single sample.
oracle::TinyScenario tiny(int which);

/// The same scenario run through make_federation / run_initialization /
/// fedcache_round. Returns the final parameters of every client.
std::vector<oracle::Vec> run_production(const oracle::TinyScenario& sc, fedcache::EventLog* log = nullptr);

/// Largest absolute parameter difference.
double max_abs_diff(const std::vector<oracle::Vec>& a, const std::vector<oracle::Vec>& b);

/// Desk-scale benchmark: 10 Gaussian classes in 64 dims, 200 per class,
/// 20 heterogeneous clients, alpha 1, 30 rounds, beta 1.5, R 16, lr 0.01,
/// batch 8.
fedcache::ExperimentConfig d1(fedcache::Algorithm algorithm, std::uint64_t seed);

double median(std::vector<double> v);

}  // namespace scenarios

#endif
