#include "sips/sampler.hpp"

#include <cmath>

namespace sips {

namespace {

bool all_finite(std::span<const double> x) {
  for (double v : x)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace

void TimeGrid::validate() const {
  if (points.size() < 2)
    throw std::invalid_argument("TimeGrid: needs at least two points");
  if (points.front() != 0.0 || points.back() != 1.0)
    throw std::invalid_argument("TimeGrid: must start at 0 and end at 1");
  for (std::size_t i = 0; i + 1 < points.size(); ++i)
    if (!(points[i] < points[i + 1]))
      throw std::invalid_argument("TimeGrid: points must be strictly increasing");
}

TimeGrid uniform_grid(int M) {
  if (M < 1) throw std::invalid_argument("uniform_grid: M must be >= 1");
  TimeGrid grid;
  grid.points.resize(M + 1);
  for (int i = 0; i <= M; ++i)
    grid.points[i] = static_cast<double>(i) / static_cast<double>(M);
  return grid;
}

void SamplerConfig::validate() const {
  if (!(kappa >= 0.0))
    throw std::invalid_argument("SamplerConfig: kappa must be nonnegative");
  grid.validate();
  if (steps != grid.steps())
    throw std::invalid_argument("SamplerConfig: steps must equal grid length - 1");
}

std::vector<double> sips_sample(std::span<const double> y,
                                const Predictor& predictor,
                                const Denoiser& denoiser,
                                const NoiseSchedule& sched,
                                const SamplerConfig& cfg, Rng& rng,
                                std::span<const double> context) {
  cfg.validate();
  if (!all_finite(y)) throw std::invalid_argument("sips_sample: y must be finite");
  const std::size_t d = y.size();
  if (denoiser.dim() > 0 && static_cast<std::size_t>(denoiser.dim()) != d)
    throw std::invalid_argument("sips_sample: denoiser dimension mismatch");

  const std::vector<double> pred = predictor.predict(y, context);
  if (pred.size() != d)
    throw std::invalid_argument("sips_sample: predictor output dimension mismatch");
  std::vector<double> vhat(d);
  for (std::size_t j = 0; j < d; ++j) vhat[j] = pred[j] - y[j];

  // State is kept as x_i = y + vhat*t_i + corr_i with corr accumulating the
  // denoiser and diffusion contributions; algebraically identical to the
  // stepwise update and telescopes the constant drift exactly.
  std::vector<double> corr(d, 0.0);
  std::vector<double> x(y.begin(), y.end());
  std::vector<double> zhat(d);

  const int M = cfg.steps;
  for (int i = 0; i < M; ++i) {
    const double t = cfg.grid.points[i];
    const double t_next = cfg.grid.points[i + 1];
    const double dt = t_next - t;
    denoiser.eval(t, x, zhat);
    const double coef = (sched.gamma_dot(t) - cfg.kappa) * dt;
    for (std::size_t j = 0; j < d; ++j) corr[j] += coef * zhat[j];
    if (cfg.kappa > 0.0) {
      const double sd = std::sqrt(2.0 * dt * cfg.kappa * sched.gamma(t));
      for (std::size_t j = 0; j < d; ++j) corr[j] += sd * rng.gauss();
    }
    if (i + 1 < M) {
      for (std::size_t j = 0; j < d; ++j)
        x[j] = y[j] + vhat[j] * t_next + corr[j];
    } else {
      // t_M = 1, so y + vhat*1 collapses to the predictor output.
      for (std::size_t j = 0; j < d; ++j) x[j] = pred[j] + corr[j];
    }
    if (!all_finite(x))
      throw DivergedError("sips_sample: state diverged", static_cast<std::size_t>(i));
  }

  if (cfg.post_process) {
    x = predictor.predict(x, context);
    if (!all_finite(x))
      throw DivergedError("sips_sample: post-processing diverged",
                          static_cast<std::size_t>(M));
  }
  return x;
}

std::vector<double> forward_sde_sample(const GaussianPairMixture& prior,
                                       std::span<const double> y0,
                                       const NoiseSchedule& sched,
                                       const SamplerConfig& cfg, Rng& rng,
                                       double t_stop) {
  cfg.validate();
  if (!(t_stop > 0.0 && t_stop <= 1.0))
    throw std::invalid_argument("forward_sde_sample: t_stop must lie in (0,1]");
  int stop_index = -1;
  for (std::size_t i = 0; i < cfg.grid.points.size(); ++i) {
    if (std::abs(cfg.grid.points[i] - t_stop) < 1e-12) {
      stop_index = static_cast<int>(i);
      break;
    }
  }
  if (stop_index < 0)
    throw std::invalid_argument("forward_sde_sample: t_stop must be a grid point");

  const std::size_t d = y0.size();
  if (static_cast<int>(d) != prior.dim)
    throw std::invalid_argument("forward_sde_sample: y0 dimension mismatch");

  std::vector<double> x(y0.begin(), y0.end());
  std::vector<double> v(d), e(d);
  for (int i = 0; i < stop_index; ++i) {
    const double t = cfg.grid.points[i];
    const double dt = cfg.grid.points[i + 1] - t;
    conditional_fields(prior, sched, t, x, v, e);
    const double coef = sched.gamma_dot(t) - cfg.kappa;
    for (std::size_t j = 0; j < d; ++j) x[j] += (v[j] + coef * e[j]) * dt;
    if (cfg.kappa > 0.0) {
      const double sd = std::sqrt(2.0 * dt * cfg.kappa * sched.gamma(t));
      for (std::size_t j = 0; j < d; ++j) x[j] += sd * rng.gauss();
    }
    if (!all_finite(x))
      throw DivergedError("forward_sde_sample: state diverged",
                          static_cast<std::size_t>(i));
  }
  return x;
}

}  // namespace sips
