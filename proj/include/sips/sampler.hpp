#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "sips/denoiser.hpp"
#include "sips/mixture.hpp"
#include "sips/predictor.hpp"
#include "sips/rng.hpp"
#include "sips/schedule.hpp"

namespace sips {

/// Raised when an integration or training step produces a non-finite state;
/// carries the failing step index so instabilities are observable.
class DivergedError : public std::runtime_error {
 public:
  DivergedError(const std::string& what, std::size_t step)
      : std::runtime_error(what + " (step " + std::to_string(step) + ")"),
        step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

/// Integration times, strictly increasing from 0 to 1.
struct TimeGrid {
  std::vector<double> points;

  void validate() const;
  int steps() const { return static_cast<int>(points.size()) - 1; }
};

/// Uniform grid {i/M : i = 0..M}.
TimeGrid uniform_grid(int M);

struct SamplerConfig {
  double kappa = 0.0;
  int steps = 15;
  TimeGrid grid = uniform_grid(15);
  bool post_process = false;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Euler-Maruyama sampling of the inference dynamics: constant drift
/// vhat = predictor(y) - y plus the denoiser term (gamma_dot(t_i) - kappa)*zhat
/// and diffusion sqrt(2*dt*kappa*gamma(t_i)). Coefficients use the left
/// endpoint of each step. The constant drift is applied as vhat*t_i rather
/// than accumulated stepwise, so the kappa=0, zero-denoiser path returns the
/// predictor output exactly.
///
/// `context` is forwarded to the predictor (paired clean signal for the
/// test-only oracle predictor).
std::vector<double> sips_sample(std::span<const double> y,
                                const Predictor& predictor,
                                const Denoiser& denoiser,
                                const NoiseSchedule& sched,
                                const SamplerConfig& cfg, Rng& rng,
                                std::span<const double> context = {});

/// Euler-Maruyama integration of the oracle forward SDE
///   dX = [v(t,X) + (gamma_dot(t) - kappa) eta(t,X)] dt + sqrt(2 kappa gamma(t)) dW
/// from X_0 = y0 up to t_stop, which must be a grid point.
std::vector<double> forward_sde_sample(const GaussianPairMixture& prior,
                                       std::span<const double> y0,
                                       const NoiseSchedule& sched,
                                       const SamplerConfig& cfg, Rng& rng,
                                       double t_stop);

}  // namespace sips
