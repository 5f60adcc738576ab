#include "sips/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sips {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2*pi)

void check_dim(const GaussianPairMixture& mix, std::span<const double> x) {
  if (static_cast<int>(x.size()) != mix.dim)
    throw std::invalid_argument("mixture: x has wrong dimension");
}

// Natural parameters of the X_t marginal for component k, one dimension.
struct ComponentMarginal {
  double mean;
  double var;
  double cross;  // Cov(S - Y, X_t) for the velocity formula
};

ComponentMarginal component_marginal(const GaussianPairComponent& comp, int i,
                                     double t, double gamma_sq) {
  ComponentMarginal out;
  const double u = 1.0 - t;
  out.mean = t * comp.mean_s[i] + u * comp.mean_y[i];
  out.var = t * t * comp.var_ss[i] + 2.0 * t * u * comp.cov_sy[i] +
            u * u * comp.var_yy[i] + gamma_sq;
  out.cross = t * comp.var_ss[i] + (1.0 - 2.0 * t) * comp.cov_sy[i] -
              u * comp.var_yy[i];
  return out;
}

// log w_k + sum_i log N(x_i; m_ki, s_ki) for every component, then
// normalized responsibilities via log-sum-exp.
std::vector<double> responsibilities(const GaussianPairMixture& mix,
                                     double t, double gamma_sq,
                                     std::span<const double> x) {
  const std::size_t K = mix.components.size();
  std::vector<double> logr(K);
  for (std::size_t k = 0; k < K; ++k) {
    const auto& comp = mix.components[k];
    double acc = std::log(comp.weight);
    for (int i = 0; i < mix.dim; ++i) {
      const auto cm = component_marginal(comp, i, t, gamma_sq);
      const double d = x[i] - cm.mean;
      acc -= 0.5 * (kLog2Pi + std::log(cm.var) + d * d / cm.var);
    }
    logr[k] = acc;
  }
  const double m = *std::max_element(logr.begin(), logr.end());
  double z = 0.0;
  for (auto& v : logr) {
    v = std::exp(v - m);
    z += v;
  }
  for (auto& v : logr) v /= z;
  return logr;
}

}  // namespace

void GaussianPairMixture::validate() const {
  if (dim <= 0) throw std::invalid_argument("mixture: dim must be positive");
  if (components.empty())
    throw std::invalid_argument("mixture: needs at least one component");
  double wsum = 0.0;
  for (const auto& comp : components) {
    if (!(comp.weight > 0.0 && comp.weight <= 1.0))
      throw std::invalid_argument("mixture: weights must lie in (0,1]");
    wsum += comp.weight;
    const auto d = static_cast<std::size_t>(dim);
    if (comp.mean_s.size() != d || comp.mean_y.size() != d ||
        comp.var_ss.size() != d || comp.var_yy.size() != d ||
        comp.cov_sy.size() != d)
      throw std::invalid_argument("mixture: component vectors must have length dim");
    for (int i = 0; i < dim; ++i) {
      if (!(comp.var_ss[i] > 0.0) || !(comp.var_yy[i] > 0.0))
        throw std::invalid_argument("mixture: variances must be strictly positive");
      if (comp.cov_sy[i] * comp.cov_sy[i] > comp.var_ss[i] * comp.var_yy[i])
        throw std::invalid_argument(
            "mixture: cov_sy^2 must not exceed var_ss*var_yy");
    }
  }
  if (std::abs(wsum - 1.0) > 1e-12)
    throw std::invalid_argument("mixture: weights must sum to 1");
}

MarginalParams marginal_params(const GaussianPairMixture& mix,
                               const NoiseSchedule& sched, double t) {
  NoiseSchedule::check_time(t);
  const double g = sched.gamma(t);
  const double g2 = g * g;
  MarginalParams out;
  out.mean.resize(mix.components.size());
  out.var.resize(mix.components.size());
  for (std::size_t k = 0; k < mix.components.size(); ++k) {
    out.mean[k].resize(mix.dim);
    out.var[k].resize(mix.dim);
    for (int i = 0; i < mix.dim; ++i) {
      const auto cm = component_marginal(mix.components[k], i, t, g2);
      out.mean[k][i] = cm.mean;
      out.var[k][i] = cm.var;
    }
  }
  return out;
}

std::vector<double> velocity(const GaussianPairMixture& mix,
                             const NoiseSchedule& sched, double t,
                             std::span<const double> x) {
  NoiseSchedule::check_time(t);
  check_dim(mix, x);
  const double g = sched.gamma(t);
  const double g2 = g * g;
  const auto r = responsibilities(mix, t, g2, x);
  std::vector<double> out(mix.dim, 0.0);
  for (std::size_t k = 0; k < mix.components.size(); ++k) {
    const auto& comp = mix.components[k];
    for (int i = 0; i < mix.dim; ++i) {
      const auto cm = component_marginal(comp, i, t, g2);
      const double mu_d = comp.mean_s[i] - comp.mean_y[i];
      out[i] += r[k] * (mu_d + cm.cross / cm.var * (x[i] - cm.mean));
    }
  }
  return out;
}

std::vector<double> eta(const GaussianPairMixture& mix,
                        const NoiseSchedule& sched, double t,
                        std::span<const double> x) {
  NoiseSchedule::check_time(t);
  check_dim(mix, x);
  const double g = sched.gamma(t);
  std::vector<double> out(mix.dim, 0.0);
  if (g == 0.0) return out;
  const double g2 = g * g;
  const auto r = responsibilities(mix, t, g2, x);
  for (std::size_t k = 0; k < mix.components.size(); ++k) {
    for (int i = 0; i < mix.dim; ++i) {
      const auto cm = component_marginal(mix.components[k], i, t, g2);
      out[i] += r[k] * g * (x[i] - cm.mean) / cm.var;
    }
  }
  return out;
}

std::vector<double> score(const GaussianPairMixture& mix,
                          const NoiseSchedule& sched, double t,
                          std::span<const double> x) {
  NoiseSchedule::check_time(t);
  check_dim(mix, x);
  const double g = sched.gamma(t);
  const double g2 = g * g;
  const auto r = responsibilities(mix, t, g2, x);
  std::vector<double> out(mix.dim, 0.0);
  for (std::size_t k = 0; k < mix.components.size(); ++k) {
    for (int i = 0; i < mix.dim; ++i) {
      const auto cm = component_marginal(mix.components[k], i, t, g2);
      out[i] -= r[k] * (x[i] - cm.mean) / cm.var;
    }
  }
  return out;
}

double log_density(const GaussianPairMixture& mix, const NoiseSchedule& sched,
                   double t, std::span<const double> x) {
  NoiseSchedule::check_time(t);
  check_dim(mix, x);
  const double g = sched.gamma(t);
  const double g2 = g * g;
  const std::size_t K = mix.components.size();
  std::vector<double> logp(K);
  for (std::size_t k = 0; k < K; ++k) {
    const auto& comp = mix.components[k];
    double acc = std::log(comp.weight);
    for (int i = 0; i < mix.dim; ++i) {
      const auto cm = component_marginal(comp, i, t, g2);
      const double d = x[i] - cm.mean;
      acc -= 0.5 * (kLog2Pi + std::log(cm.var) + d * d / cm.var);
    }
    logp[k] = acc;
  }
  const double m = *std::max_element(logp.begin(), logp.end());
  double z = 0.0;
  for (double v : logp) z += std::exp(v - m);
  return m + std::log(z);
}

std::pair<std::vector<double>, std::vector<double>> sample_pair(
    const GaussianPairMixture& mix, Rng& rng) {
  // Component draw by CDF walk, then per-dimension 2x2 Cholesky.
  const double u = rng.uniform();
  std::size_t k = 0;
  double acc = 0.0;
  for (; k + 1 < mix.components.size(); ++k) {
    acc += mix.components[k].weight;
    if (u < acc) break;
  }
  const auto& comp = mix.components[k];
  std::vector<double> s(mix.dim), y(mix.dim);
  for (int i = 0; i < mix.dim; ++i) {
    const double u1 = rng.gauss();
    const double u2 = rng.gauss();
    const double l11 = std::sqrt(comp.var_ss[i]);
    const double l21 = comp.cov_sy[i] / l11;
    const double l22 = std::sqrt(std::max(comp.var_yy[i] - l21 * l21, 0.0));
    s[i] = comp.mean_s[i] + l11 * u1;
    y[i] = comp.mean_y[i] + l21 * u1 + l22 * u2;
  }
  return {std::move(s), std::move(y)};
}

std::vector<double> sample_clean(const GaussianPairMixture& mix, Rng& rng) {
  const double u = rng.uniform();
  std::size_t k = 0;
  double acc = 0.0;
  for (; k + 1 < mix.components.size(); ++k) {
    acc += mix.components[k].weight;
    if (u < acc) break;
  }
  const auto& comp = mix.components[k];
  std::vector<double> s(mix.dim);
  for (int i = 0; i < mix.dim; ++i)
    s[i] = comp.mean_s[i] + std::sqrt(comp.var_ss[i]) * rng.gauss();
  return s;
}

std::vector<double> mmse_predict(const GaussianPairMixture& mix,
                                 std::span<const double> y) {
  check_dim(mix, y);
  const std::size_t K = mix.components.size();
  // Responsibilities under the Y marginal.
  std::vector<double> logw(K);
  for (std::size_t k = 0; k < K; ++k) {
    const auto& comp = mix.components[k];
    double acc = std::log(comp.weight);
    for (int i = 0; i < mix.dim; ++i) {
      const double d = y[i] - comp.mean_y[i];
      acc -= 0.5 * (kLog2Pi + std::log(comp.var_yy[i]) + d * d / comp.var_yy[i]);
    }
    logw[k] = acc;
  }
  const double m = *std::max_element(logw.begin(), logw.end());
  double z = 0.0;
  for (auto& v : logw) {
    v = std::exp(v - m);
    z += v;
  }
  std::vector<double> out(mix.dim, 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    const auto& comp = mix.components[k];
    const double w = logw[k] / z;
    for (int i = 0; i < mix.dim; ++i)
      out[i] += w * (comp.mean_s[i] +
                     comp.cov_sy[i] / comp.var_yy[i] * (y[i] - comp.mean_y[i]));
  }
  return out;
}

void conditional_fields(const GaussianPairMixture& mix,
                        const NoiseSchedule& sched, double t,
                        std::span<const double> x, std::span<double> v_out,
                        std::span<double> eta_out) {
  check_dim(mix, x);
  const double g = sched.gamma(t);
  const double g2 = g * g;
  const std::size_t K = mix.components.size();
  for (int i = 0; i < mix.dim; ++i) {
    v_out[i] = 0.0;
    eta_out[i] = 0.0;
  }
  if (K == 1) {
    const auto& comp = mix.components[0];
    for (int i = 0; i < mix.dim; ++i) {
      const auto cm = component_marginal(comp, i, t, g2);
      const double d = x[i] - cm.mean;
      v_out[i] = (comp.mean_s[i] - comp.mean_y[i]) + cm.cross / cm.var * d;
      if (g != 0.0) eta_out[i] = g * d / cm.var;
    }
    return;
  }

  // Same log-sum-exp arithmetic as responsibilities(), on a stack buffer to
  // keep the integrator's inner loop allocation-free.
  constexpr std::size_t kMaxStack = 32;
  double stack_buf[kMaxStack];
  std::vector<double> heap_buf;
  double* logr = K <= kMaxStack ? stack_buf : (heap_buf.resize(K), heap_buf.data());
  for (std::size_t k = 0; k < K; ++k) {
    const auto& comp = mix.components[k];
    double acc = std::log(comp.weight);
    for (int i = 0; i < mix.dim; ++i) {
      const auto cm = component_marginal(comp, i, t, g2);
      const double d = x[i] - cm.mean;
      acc -= 0.5 * (kLog2Pi + std::log(cm.var) + d * d / cm.var);
    }
    logr[k] = acc;
  }
  double m = logr[0];
  for (std::size_t k = 1; k < K; ++k) m = std::max(m, logr[k]);
  double z = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    logr[k] = std::exp(logr[k] - m);
    z += logr[k];
  }
  for (std::size_t k = 0; k < K; ++k) {
    const auto& comp = mix.components[k];
    const double r = logr[k] / z;
    for (int i = 0; i < mix.dim; ++i) {
      const auto cm = component_marginal(comp, i, t, g2);
      const double d = x[i] - cm.mean;
      v_out[i] += r * ((comp.mean_s[i] - comp.mean_y[i]) + cm.cross / cm.var * d);
      if (g != 0.0) eta_out[i] += r * g * d / cm.var;
    }
  }
}

}  // namespace sips
