#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sips/mixture.hpp"
#include "sips/rng.hpp"
#include "sips/sampler.hpp"
#include "sips/schedule.hpp"

namespace sips {

/// Outcome of one marginal-equivalence check: forward-SDE samples at t_stop
/// against direct interpolant draws.
struct MarginalReport {
  double t_stop = 0.0;
  double kappa = 0.0;
  std::int64_t n_samples = 0;
  int steps = 0;
  double wasserstein1 = 0.0;
  double energy_distance = 0.0;
  double threshold = 0.0;
  bool passed = false;
};

/// Order-statistics estimator of the 1-Wasserstein distance: mean absolute
/// difference of sorted samples. Requires equal, nonzero counts.
double wasserstein_1d(std::span<const double> a, std::span<const double> b);

/// Two-sample energy statistic 2 E||A-B|| - E||A-A'|| - E||B-B'||.
/// One-dimensional inputs use an O(n log n) sorted-prefix-sum path; higher
/// dimensions fall back to exact pairwise sums.
double energy_distance(const std::vector<std::vector<double>>& a,
                       const std::vector<std::vector<double>>& b);
double energy_distance(std::span<const double> a, std::span<const double> b);

/// Draws n forward-SDE trajectories to t_stop and n direct interpolant
/// samples t*s + (1-t)*y + gamma(t)*z, then compares per dimension.
/// Wasserstein distances are aggregated by max over dimensions; passed is
/// wasserstein1 < threshold. Trajectories run in parallel on independently
/// derived RNG streams, so results do not depend on the thread count.
MarginalReport marginal_check(const GaussianPairMixture& prior,
                              const NoiseSchedule& sched, double kappa,
                              double t_stop, std::int64_t n_samples, int steps,
                              double threshold, Rng& rng);

std::string marginal_csv_header();
std::string marginal_csv_row(const MarginalReport& report);

}  // namespace sips
