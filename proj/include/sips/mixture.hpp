#pragma once

#include <span>
#include <utility>
#include <vector>

#include "sips/rng.hpp"
#include "sips/schedule.hpp"

namespace sips {

/// One mixture component: a per-dimension jointly Gaussian pair (S, Y) with
/// 2x2 covariance [[var_ss, cov_sy], [cov_sy, var_yy]] in every dimension.
struct GaussianPairComponent {
  double weight = 1.0;
  std::vector<double> mean_s;
  std::vector<double> mean_y;
  std::vector<double> var_ss;
  std::vector<double> var_yy;
  std::vector<double> cov_sy;
};

/// Mixture prior over paired endpoints (S, Y). Dimensions are independent
/// within a component; multimodality comes from mixing. All conditional
/// expectations below are closed forms, which is what makes this usable as
/// ground truth for the samplers and the trained denoiser.
struct GaussianPairMixture {
  std::vector<GaussianPairComponent> components;
  int dim = 0;

  /// Throws std::invalid_argument on any violated invariant: weights must be
  /// positive and sum to 1 within 1e-12, variances strictly positive,
  /// cov_sy^2 <= var_ss*var_yy, and all vectors of length dim.
  void validate() const;
};

/// Per-component marginal of X_t = t*S + (1-t)*Y + gamma(t)*Z:
/// mean[k][i] = t*mean_s + (1-t)*mean_y,
/// var[k][i]  = t^2*var_ss + 2t(1-t)*cov_sy + (1-t)^2*var_yy + gamma(t)^2.
struct MarginalParams {
  std::vector<std::vector<double>> mean;
  std::vector<std::vector<double>> var;
};

MarginalParams marginal_params(const GaussianPairMixture& mix,
                               const NoiseSchedule& sched, double t);

/// Conditional velocity E[S - Y | X_t = x].
std::vector<double> velocity(const GaussianPairMixture& mix,
                             const NoiseSchedule& sched, double t,
                             std::span<const double> x);

/// Conditional noise E[Z | X_t = x]; the zero vector wherever gamma(t)=0.
std::vector<double> eta(const GaussianPairMixture& mix,
                        const NoiseSchedule& sched, double t,
                        std::span<const double> x);

/// Score of the X_t marginal, grad_x log rho_t(x).
std::vector<double> score(const GaussianPairMixture& mix,
                          const NoiseSchedule& sched, double t,
                          std::span<const double> x);

/// log rho_t(x), evaluated with log-sum-exp over components.
double log_density(const GaussianPairMixture& mix, const NoiseSchedule& sched,
                   double t, std::span<const double> x);

/// Joint draw of a paired (s, y).
std::pair<std::vector<double>, std::vector<double>> sample_pair(
    const GaussianPairMixture& mix, Rng& rng);

/// Draw of the clean marginal S only. Consumes randomness independently of
/// the Y parameters, so degradation-agnostic training is bit-reproducible
/// under changes to the Y side of the prior.
std::vector<double> sample_clean(const GaussianPairMixture& mix, Rng& rng);

/// Posterior mean E[S | Y = y] under the pair mixture.
std::vector<double> mmse_predict(const GaussianPairMixture& mix,
                                 std::span<const double> y);

/// Velocity and eta in one pass (shared responsibilities). Used by the
/// forward SDE integrator; agrees with velocity() and eta() exactly up to
/// floating-point reassociation, which the tests pin down.
void conditional_fields(const GaussianPairMixture& mix,
                        const NoiseSchedule& sched, double t,
                        std::span<const double> x, std::span<double> v_out,
                        std::span<double> eta_out);

}  // namespace sips
