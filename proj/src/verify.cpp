#include "sips/verify.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sips/text.hpp"
#include "sips/threading.hpp"

namespace sips {

namespace {

// Sum over all pairs |a_i - b_j| for sorted b, via prefix sums.
double cross_abs_sum(const std::vector<double>& a,
                     const std::vector<double>& b_sorted,
                     const std::vector<double>& b_prefix) {
  const double total = b_prefix.back();
  double acc = 0.0;
  for (double v : a) {
    const auto it = std::upper_bound(b_sorted.begin(), b_sorted.end(), v);
    const std::size_t k = static_cast<std::size_t>(it - b_sorted.begin());
    const double below = b_prefix[k];
    acc += v * static_cast<double>(k) - below;
    acc += (total - below) - v * static_cast<double>(b_sorted.size() - k);
  }
  return acc;
}

// Sum over all ordered pairs |a_i - a_j| (V-statistic numerator).
double self_abs_sum(const std::vector<double>& sorted) {
  double acc = 0.0;
  double prefix = 0.0;
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    acc += sorted[j] * static_cast<double>(j) - prefix;
    prefix += sorted[j];
  }
  return 2.0 * acc;
}

std::vector<double> prefix_sums(const std::vector<double>& sorted) {
  std::vector<double> p(sorted.size() + 1, 0.0);
  for (std::size_t i = 0; i < sorted.size(); ++i) p[i + 1] = p[i] + sorted[i];
  return p;
}

double pairwise_mean_norm(const std::vector<std::vector<double>>& a,
                          const std::vector<std::vector<double>>& b) {
  double acc = 0.0;
  for (const auto& x : a) {
    for (const auto& y : b) {
      double d2 = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        d2 += d * d;
      }
      acc += std::sqrt(d2);
    }
  }
  return acc / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

}  // namespace

double wasserstein_1d(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || a.size() != b.size())
    throw std::invalid_argument(
        "wasserstein_1d: inputs must be nonempty and of equal size");
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  double acc = 0.0;
  for (std::size_t i = 0; i < sa.size(); ++i) acc += std::abs(sa[i] - sb[i]);
  return acc / static_cast<double>(sa.size());
}

double energy_distance(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("energy_distance: inputs must be nonempty");
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const auto pb = prefix_sums(sb);
  const double n = static_cast<double>(sa.size());
  const double m = static_cast<double>(sb.size());
  const double e_ab = cross_abs_sum(sa, sb, pb) / (n * m);
  const double e_aa = self_abs_sum(sa) / (n * n);
  const double e_bb = self_abs_sum(sb) / (m * m);
  return 2.0 * e_ab - e_aa - e_bb;
}

double energy_distance(const std::vector<std::vector<double>>& a,
                       const std::vector<std::vector<double>>& b) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("energy_distance: inputs must be nonempty");
  const std::size_t dim = a.front().size();
  for (const auto& x : a)
    if (x.size() != dim)
      throw std::invalid_argument("energy_distance: dimension mismatch");
  for (const auto& x : b)
    if (x.size() != dim)
      throw std::invalid_argument("energy_distance: dimension mismatch");
  if (dim == 1) {
    std::vector<double> fa(a.size()), fb(b.size());
    for (std::size_t i = 0; i < a.size(); ++i) fa[i] = a[i][0];
    for (std::size_t i = 0; i < b.size(); ++i) fb[i] = b[i][0];
    return energy_distance(std::span<const double>(fa),
                           std::span<const double>(fb));
  }
  return 2.0 * pairwise_mean_norm(a, b) - pairwise_mean_norm(a, a) -
         pairwise_mean_norm(b, b);
}

MarginalReport marginal_check(const GaussianPairMixture& prior,
                              const NoiseSchedule& sched, double kappa,
                              double t_stop, std::int64_t n_samples, int steps,
                              double threshold, Rng& rng) {
  prior.validate();
  if (n_samples < 1)
    throw std::invalid_argument("marginal_check: n_samples must be positive");
  if (!(t_stop > 0.0 && t_stop <= 1.0))
    throw std::invalid_argument("marginal_check: t_stop must lie in (0,1]");

  SamplerConfig cfg;
  cfg.kappa = kappa;
  cfg.steps = steps;
  cfg.grid = uniform_grid(steps);

  const std::size_t n = static_cast<std::size_t>(n_samples);
  const std::size_t d = static_cast<std::size_t>(prior.dim);
  const std::uint64_t sde_seed = rng.raw();
  const std::uint64_t direct_seed = rng.raw();

  std::vector<double> sde(n * d), direct(n * d);
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      Rng stream = Rng::stream(sde_seed, k);
      auto [s, y] = sample_pair(prior, stream);
      (void)s;
      auto x = forward_sde_sample(prior, y, sched, cfg, stream, t_stop);
      std::copy(x.begin(), x.end(), sde.begin() + k * d);
    }
  });
  const double g = sched.gamma(t_stop);
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      Rng stream = Rng::stream(direct_seed, k);
      auto [s, y] = sample_pair(prior, stream);
      for (std::size_t i = 0; i < d; ++i)
        direct[k * d + i] =
            t_stop * s[i] + (1.0 - t_stop) * y[i] + g * stream.gauss();
    }
  });

  MarginalReport report;
  report.t_stop = t_stop;
  report.kappa = kappa;
  report.n_samples = n_samples;
  report.steps = steps;
  report.threshold = threshold;

  double w1 = 0.0;
  std::vector<double> col_a(n), col_b(n);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      col_a[k] = sde[k * d + i];
      col_b[k] = direct[k * d + i];
    }
    w1 = std::max(w1, wasserstein_1d(col_a, col_b));
  }
  report.wasserstein1 = w1;

  if (d == 1) {
    report.energy_distance = energy_distance(std::span<const double>(sde),
                                             std::span<const double>(direct));
  } else {
    // Exact pairwise sums are quadratic; cap the sample count per side.
    const std::size_t cap = std::min<std::size_t>(n, 4096);
    std::vector<std::vector<double>> a(cap), b(cap);
    for (std::size_t k = 0; k < cap; ++k) {
      a[k].assign(sde.begin() + k * d, sde.begin() + (k + 1) * d);
      b[k].assign(direct.begin() + k * d, direct.begin() + (k + 1) * d);
    }
    report.energy_distance = energy_distance(a, b);
  }

  report.passed = report.wasserstein1 < threshold;
  return report;
}

std::string marginal_csv_header() {
  return "t_stop,kappa,n,steps,w1,energy,threshold,passed";
}

std::string marginal_csv_row(const MarginalReport& r) {
  std::string row;
  row += fmt_g17(r.t_stop);
  row += ',';
  row += fmt_g17(r.kappa);
  row += ',';
  row += std::to_string(r.n_samples);
  row += ',';
  row += std::to_string(r.steps);
  row += ',';
  row += fmt_g17(r.wasserstein1);
  row += ',';
  row += fmt_g17(r.energy_distance);
  row += ',';
  row += fmt_g17(r.threshold);
  row += ',';
  row += r.passed ? "true" : "false";
  return row;
}

}  // namespace sips
