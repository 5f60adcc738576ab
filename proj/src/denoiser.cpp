#include "sips/denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "sips/sampler.hpp"

namespace sips {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

// y = W x + b for a row-major [rows][cols] matrix.
void affine(const std::vector<double>& w, const std::vector<double>& b,
            std::span<const double> x, std::span<double> y) {
  const std::size_t rows = b.size();
  const std::size_t cols = x.size();
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = b[r];
    const double* row = &w[r * cols];
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
}

std::vector<double> features(const NoiseSchedule& sched, double t,
                             std::span<const double> x) {
  std::vector<double> f(x.size() + 2);
  std::copy(x.begin(), x.end(), f.begin());
  f[x.size()] = t;
  f[x.size() + 1] = sched.training_sigma(t);
  return f;
}

}  // namespace

void OracleEtaDenoiser::eval(double t, std::span<const double> x,
                             std::span<double> zhat) const {
  if (static_cast<int>(x.size()) != mix_.dim)
    throw std::invalid_argument("OracleEtaDenoiser: dimension mismatch");
  const double sigma = sched_.training_sigma(t);
  for (auto& v : zhat) v = 0.0;
  if (sigma == 0.0) return;
  const std::size_t K = mix_.components.size();
  if (K == 1) {
    const auto& comp = mix_.components[0];
    for (int i = 0; i < mix_.dim; ++i) {
      const double var = comp.var_ss[i] + sigma * sigma;
      zhat[i] = sigma * (x[i] - comp.mean_s[i]) / var;
    }
    return;
  }
  std::vector<double> logr(K);
  for (std::size_t k = 0; k < K; ++k) {
    const auto& comp = mix_.components[k];
    double acc = std::log(comp.weight);
    for (int i = 0; i < mix_.dim; ++i) {
      const double var = comp.var_ss[i] + sigma * sigma;
      const double d = x[i] - comp.mean_s[i];
      acc -= 0.5 * (kLog2Pi + std::log(var) + d * d / var);
    }
    logr[k] = acc;
  }
  const double m = *std::max_element(logr.begin(), logr.end());
  double z = 0.0;
  for (auto& v : logr) {
    v = std::exp(v - m);
    z += v;
  }
  for (std::size_t k = 0; k < K; ++k) {
    const auto& comp = mix_.components[k];
    const double r = logr[k] / z;
    for (int i = 0; i < mix_.dim; ++i) {
      const double var = comp.var_ss[i] + sigma * sigma;
      zhat[i] += r * sigma * (x[i] - comp.mean_s[i]) / var;
    }
  }
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0))
    throw std::invalid_argument("TrainConfig: learning_rate must be >= 0");
  if (batch_size <= 0 || iterations <= 0)
    throw std::invalid_argument("TrainConfig: batch_size and iterations must be positive");
  if (!(first_moment_decay > 0.0 && first_moment_decay < 1.0) ||
      !(second_moment_decay > 0.0 && second_moment_decay < 1.0))
    throw std::invalid_argument("TrainConfig: moment decays must lie in (0,1)");
  if (!(epsilon_stabilizer > 0.0))
    throw std::invalid_argument("TrainConfig: epsilon_stabilizer must be positive");
  for (int h : hidden)
    if (h <= 0) throw std::invalid_argument("TrainConfig: hidden widths must be positive");
}

MlpDenoiser mlp_init(const std::vector<int>& layer_sizes, std::uint64_t seed) {
  if (layer_sizes.size() < 2)
    throw std::invalid_argument("mlp_init: need at least input and output layers");
  for (int n : layer_sizes)
    if (n <= 0) throw std::invalid_argument("mlp_init: layer sizes must be positive");
  MlpDenoiser net;
  net.layer_sizes = layer_sizes;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const int fan_in = layer_sizes[l];
    const int fan_out = layer_sizes[l + 1];
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    std::vector<double> w(static_cast<std::size_t>(fan_in) * fan_out);
    for (auto& v : w) v = bound * (2.0 * rng.uniform() - 1.0);
    net.weights.push_back(std::move(w));
    net.biases.emplace_back(fan_out, 0.0);
  }
  return net;
}

std::vector<double> mlp_forward(const MlpDenoiser& net,
                                const NoiseSchedule& sched, double t,
                                std::span<const double> x) {
  NoiseSchedule::check_time(t);
  if (static_cast<int>(x.size()) + 2 != net.input_dim())
    throw std::invalid_argument("mlp_forward: dimension mismatch");
  std::vector<double> act = features(sched, t, x);
  const std::size_t L = net.weights.size();
  for (std::size_t l = 0; l < L; ++l) {
    std::vector<double> next(net.biases[l].size());
    affine(net.weights[l], net.biases[l], act, next);
    if (l + 1 < L)
      for (auto& v : next) v = std::tanh(v);
    act = std::move(next);
  }
  return act;
}

std::pair<double, MlpGradients> loss_and_grad(const MlpDenoiser& net,
                                              const NoiseSchedule& sched,
                                              const TrainingBatch& batch) {
  const std::size_t B = batch.s.size();
  if (B == 0 || batch.z.size() != B || batch.t.size() != B)
    throw std::invalid_argument("loss_and_grad: inconsistent batch");
  const std::size_t L = net.weights.size();
  const int d = net.data_dim();

  MlpGradients grad;
  grad.weights.reserve(L);
  grad.biases.reserve(L);
  for (std::size_t l = 0; l < L; ++l) {
    grad.weights.emplace_back(net.weights[l].size(), 0.0);
    grad.biases.emplace_back(net.biases[l].size(), 0.0);
  }

  double loss = 0.0;
  std::vector<std::vector<double>> act(L + 1);
  for (std::size_t b = 0; b < B; ++b) {
    NoiseSchedule::check_time(batch.t[b]);
    const double sigma = sched.training_sigma(batch.t[b]);
    if (static_cast<int>(batch.s[b].size()) != d ||
        static_cast<int>(batch.z[b].size()) != d)
      throw std::invalid_argument("loss_and_grad: sample dimension mismatch");
    std::vector<double> x(d);
    for (int i = 0; i < d; ++i) x[i] = batch.s[b][i] + sigma * batch.z[b][i];

    act[0] = features(sched, batch.t[b], x);
    for (std::size_t l = 0; l < L; ++l) {
      act[l + 1].assign(net.biases[l].size(), 0.0);
      affine(net.weights[l], net.biases[l], act[l], act[l + 1]);
      if (l + 1 < L)
        for (auto& v : act[l + 1]) v = std::tanh(v);
    }

    std::vector<double> delta(d);
    for (int i = 0; i < d; ++i) {
      const double r = act[L][i] - batch.z[b][i];
      loss += r * r;
      delta[i] = 2.0 * r / static_cast<double>(B);
    }

    for (std::size_t l = L; l-- > 0;) {
      const std::size_t rows = net.biases[l].size();
      const std::size_t cols = act[l].size();
      for (std::size_t r = 0; r < rows; ++r) {
        grad.biases[l][r] += delta[r];
        double* grow = &grad.weights[l][r * cols];
        const double dr = delta[r];
        for (std::size_t c = 0; c < cols; ++c) grow[c] += dr * act[l][c];
      }
      if (l == 0) break;
      std::vector<double> prev(cols, 0.0);
      for (std::size_t r = 0; r < rows; ++r) {
        const double dr = delta[r];
        const double* row = &net.weights[l][r * cols];
        for (std::size_t c = 0; c < cols; ++c) prev[c] += row[c] * dr;
      }
      // tanh'(pre) = 1 - act^2
      for (std::size_t c = 0; c < cols; ++c)
        prev[c] *= 1.0 - act[l][c] * act[l][c];
      delta = std::move(prev);
    }
  }
  loss /= static_cast<double>(B);
  if (!std::isfinite(loss)) throw std::runtime_error("loss_and_grad: non-finite loss");
  return {loss, std::move(grad)};
}

TrainResult train(MlpDenoiser net, const NoiseSchedule& sched,
                  const GaussianPairMixture& prior, const TrainConfig& cfg,
                  Rng& rng) {
  cfg.validate();
  prior.validate();
  const int d = net.data_dim();
  if (d != prior.dim)
    throw std::invalid_argument("train: network and prior dimension mismatch");
  const std::size_t L = net.weights.size();

  MlpGradients m, v;
  for (std::size_t l = 0; l < L; ++l) {
    m.weights.emplace_back(net.weights[l].size(), 0.0);
    m.biases.emplace_back(net.biases[l].size(), 0.0);
    v.weights.emplace_back(net.weights[l].size(), 0.0);
    v.biases.emplace_back(net.biases[l].size(), 0.0);
  }

  const double b1 = cfg.first_moment_decay;
  const double b2 = cfg.second_moment_decay;
  std::vector<double> trace;
  trace.reserve(cfg.iterations);

  TrainingBatch batch;
  batch.s.resize(cfg.batch_size);
  batch.z.resize(cfg.batch_size);
  batch.t.resize(cfg.batch_size);

  double b1t = 1.0, b2t = 1.0;
  for (int it = 0; it < cfg.iterations; ++it) {
    for (int b = 0; b < cfg.batch_size; ++b) {
      batch.s[b] = sample_clean(prior, rng);
      batch.z[b].resize(d);
      for (int i = 0; i < d; ++i) batch.z[b][i] = rng.gauss();
      batch.t[b] = rng.uniform();
    }
    auto [loss, grad] = loss_and_grad(net, sched, batch);
    if (!std::isfinite(loss))
      throw DivergedError("train: non-finite loss", static_cast<std::size_t>(it));
    trace.push_back(loss);

    b1t *= b1;
    b2t *= b2;
    const double mc = 1.0 / (1.0 - b1t);
    const double vc = 1.0 / (1.0 - b2t);
    for (std::size_t l = 0; l < L; ++l) {
      auto adam = [&](std::vector<double>& w, std::vector<double>& mw,
                      std::vector<double>& vw, const std::vector<double>& g) {
        for (std::size_t i = 0; i < w.size(); ++i) {
          mw[i] = b1 * mw[i] + (1.0 - b1) * g[i];
          vw[i] = b2 * vw[i] + (1.0 - b2) * g[i] * g[i];
          w[i] -= cfg.learning_rate * (mw[i] * mc) /
                  (std::sqrt(vw[i] * vc) + cfg.epsilon_stabilizer);
        }
      };
      adam(net.weights[l], m.weights[l], v.weights[l], grad.weights[l]);
      adam(net.biases[l], m.biases[l], v.biases[l], grad.biases[l]);
    }
  }
  return {std::move(net), std::move(trace)};
}

void save_mlp(const MlpDenoiser& net, const NoiseSchedule& sched,
              std::uint64_t seed, const std::string& path) {
  nlohmann::json j;
  j["format"] = "sips-mlp";
  j["version"] = 1;
  j["layer_sizes"] = net.layer_sizes;
  j["weights"] = net.weights;
  j["biases"] = net.biases;
  j["schedule"] = {{"a", sched.a}, {"c", sched.c}};
  j["seed"] = seed;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_mlp: cannot open " + path);
  out << j.dump(2) << '\n';
}

LoadedMlp load_mlp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_mlp: cannot open " + path);
  nlohmann::json j = nlohmann::json::parse(in);
  if (j.value("format", "") != "sips-mlp" || j.value("version", 0) != 1)
    throw std::runtime_error("load_mlp: unrecognized model format in " + path);
  LoadedMlp out;
  out.net.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
  out.net.weights = j.at("weights").get<std::vector<std::vector<double>>>();
  out.net.biases = j.at("biases").get<std::vector<std::vector<double>>>();
  out.sched = NoiseSchedule(j.at("schedule").at("c").get<double>(),
                            j.at("schedule").at("a").get<double>());
  out.seed = j.at("seed").get<std::uint64_t>();
  const std::size_t L = out.net.layer_sizes.size();
  if (L < 2 || out.net.weights.size() != L - 1 || out.net.biases.size() != L - 1)
    throw std::runtime_error("load_mlp: inconsistent layer data in " + path);
  for (std::size_t l = 0; l + 1 < L; ++l) {
    const auto rows = static_cast<std::size_t>(out.net.layer_sizes[l + 1]);
    const auto cols = static_cast<std::size_t>(out.net.layer_sizes[l]);
    if (out.net.weights[l].size() != rows * cols ||
        out.net.biases[l].size() != rows)
      throw std::runtime_error("load_mlp: weight shape mismatch in " + path);
  }
  return out;
}

void TrainedDenoiser::eval(double t, std::span<const double> x,
                           std::span<double> zhat) const {
  auto out = mlp_forward(net_, sched_, t, x);
  std::copy(out.begin(), out.end(), zhat.begin());
}

ElementwiseDenoiser::ElementwiseDenoiser(std::shared_ptr<const Denoiser> inner)
    : inner_(std::move(inner)) {
  if (inner_->dim() > 1)
    throw std::invalid_argument(
        "ElementwiseDenoiser: inner denoiser must be one-dimensional");
}

void ElementwiseDenoiser::eval(double t, std::span<const double> x,
                               std::span<double> zhat) const {
  for (std::size_t i = 0; i < x.size(); ++i)
    inner_->eval(t, x.subspan(i, 1), zhat.subspan(i, 1));
}

}  // namespace sips
