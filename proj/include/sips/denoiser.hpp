#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sips/mixture.hpp"
#include "sips/rng.hpp"
#include "sips/schedule.hpp"

namespace sips {

/// Map (t, x) -> zhat estimating the injected noise E[Z | X_t = x].
class Denoiser {
 public:
  virtual ~Denoiser() = default;

  /// Native data dimension; 0 means any.
  virtual int dim() const = 0;

  virtual void eval(double t, std::span<const double> x,
                    std::span<double> zhat) const = 0;
};

class ZeroDenoiser final : public Denoiser {
 public:
  int dim() const override { return 0; }
  void eval(double, std::span<const double>, std::span<double> zhat) const override {
    for (auto& v : zhat) v = 0.0;
  }
};

/// Closed-form optimum of the mirror training objective: E[Z | S + sigma(t)Z = x]
/// on the clean marginal of `mix`, with sigma(t) = a + gamma(t). This is what
/// a perfectly trained denoiser would compute.
class OracleEtaDenoiser final : public Denoiser {
 public:
  OracleEtaDenoiser(GaussianPairMixture mix, NoiseSchedule sched)
      : mix_(std::move(mix)), sched_(sched) {}

  int dim() const override { return mix_.dim; }
  void eval(double t, std::span<const double> x,
            std::span<double> zhat) const override;

 private:
  GaussianPairMixture mix_;
  NoiseSchedule sched_;
};

/// Fully connected network with tanh hidden layers and a linear output.
/// Input features are (x, t, a + gamma(t)); output width equals the data
/// dimension. Weight matrices are row-major [out][in].
struct MlpDenoiser {
  std::vector<int> layer_sizes;
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;

  int data_dim() const { return layer_sizes.back(); }
  int input_dim() const { return layer_sizes.front(); }
};

struct MlpGradients {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;
};

/// Deterministic init: weights uniform in +-sqrt(6/(fan_in+fan_out)), zero
/// biases. `layer_sizes` runs from input width (d+2) to output width (d).
MlpDenoiser mlp_init(const std::vector<int>& layer_sizes, std::uint64_t seed);

std::vector<double> mlp_forward(const MlpDenoiser& net,
                                const NoiseSchedule& sched, double t,
                                std::span<const double> x);

/// One training minibatch: clean samples, noise draws and times.
struct TrainingBatch {
  std::vector<std::vector<double>> s;
  std::vector<std::vector<double>> z;
  std::vector<double> t;
};

/// Batch-mean squared error || net(t, s + (a+gamma(t)) z) - z ||^2 and its
/// gradient by reverse-mode accumulation through the network.
std::pair<double, MlpGradients> loss_and_grad(const MlpDenoiser& net,
                                              const NoiseSchedule& sched,
                                              const TrainingBatch& batch);

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 256;
  int iterations = 20000;
  std::uint64_t seed = 1;
  double first_moment_decay = 0.9;
  double second_moment_decay = 0.999;
  double epsilon_stabilizer = 1e-8;
  std::vector<int> hidden = {64, 64};

  void validate() const;
};

struct TrainResult {
  MlpDenoiser net;
  std::vector<double> loss_trace;
};

/// Adam on freshly sampled (s, z, t) batches with t ~ Uniform[0,1]. Only the
/// clean marginal of `prior` is consumed.
TrainResult train(MlpDenoiser net, const NoiseSchedule& sched,
                  const GaussianPairMixture& prior, const TrainConfig& cfg,
                  Rng& rng);

void save_mlp(const MlpDenoiser& net, const NoiseSchedule& sched,
              std::uint64_t seed, const std::string& path);

struct LoadedMlp {
  MlpDenoiser net;
  NoiseSchedule sched;
  std::uint64_t seed = 0;
};

LoadedMlp load_mlp(const std::string& path);

class TrainedDenoiser final : public Denoiser {
 public:
  TrainedDenoiser(MlpDenoiser net, NoiseSchedule sched)
      : net_(std::move(net)), sched_(sched) {}

  int dim() const override { return net_.data_dim(); }
  void eval(double t, std::span<const double> x,
            std::span<double> zhat) const override;

  const MlpDenoiser& net() const { return net_; }

 private:
  MlpDenoiser net_;
  NoiseSchedule sched_;
};

/// Applies a one-dimensional denoiser independently to every coordinate.
/// Used when sampling in the spectrogram domain.
class ElementwiseDenoiser final : public Denoiser {
 public:
  explicit ElementwiseDenoiser(std::shared_ptr<const Denoiser> inner);

  int dim() const override { return 0; }
  void eval(double t, std::span<const double> x,
            std::span<double> zhat) const override;

 private:
  std::shared_ptr<const Denoiser> inner_;
};

}  // namespace sips
