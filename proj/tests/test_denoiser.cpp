#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "doctest.h"
#include "sips/denoiser.hpp"
#include "sips/mixture.hpp"

using namespace sips;

namespace {

GaussianPairMixture toy_mixture() {
  GaussianPairMixture mix;
  mix.dim = 1;
  GaussianPairComponent comp;
  comp.weight = 1.0;
  comp.mean_s = {0.0};
  comp.mean_y = {0.0};
  comp.var_ss = {1.0};
  comp.var_yy = {2.0};
  comp.cov_sy = {1.0};
  mix.components = {comp};
  return mix;
}

TrainingBatch make_batch(const GaussianPairMixture& prior,
                         const NoiseSchedule& sched, int size, Rng& rng) {
  (void)sched;
  TrainingBatch batch;
  batch.s.resize(size);
  batch.z.resize(size);
  batch.t.resize(size);
  for (int b = 0; b < size; ++b) {
    batch.s[b] = sample_clean(prior, rng);
    batch.z[b].resize(prior.dim);
    for (int i = 0; i < prior.dim; ++i) batch.z[b][i] = rng.gauss();
    batch.t[b] = rng.uniform();
  }
  return batch;
}

}  // namespace

TEST_CASE("oracle eta denoiser matches the mirror-interpolant closed form") {
  const NoiseSchedule sched(0.5, 0.1);
  OracleEtaDenoiser den(toy_mixture(), sched);
  for (double t : {0.0, 0.3, 0.5, 1.0}) {
    const double sigma = sched.training_sigma(t);
    for (double x : {-2.0, 0.0, 1.3}) {
      std::vector<double> out(1);
      den.eval(t, std::vector<double>{x}, out);
      const double expected = sigma * x / (1.0 + sigma * sigma);
      CHECK(out[0] == doctest::Approx(expected).epsilon(1e-14));
    }
  }
}

TEST_CASE("train config validation") {
  TrainConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.first_moment_decay = 1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = TrainConfig{};
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = TrainConfig{};
  cfg.epsilon_stabilizer = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("forward rejects dimension mismatches") {
  const NoiseSchedule sched(0.5, 0.1);
  MlpDenoiser net = mlp_init({3, 8, 1}, 1);
  CHECK_THROWS_AS(mlp_forward(net, sched, 0.5, std::vector<double>{1.0, 2.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(mlp_forward(net, sched, 1.5, std::vector<double>{1.0}),
                  std::domain_error);
}

TEST_CASE("zero network outputs zero everywhere") {
  const NoiseSchedule sched(0.5, 0.1);
  MlpDenoiser net = mlp_init({3, 8, 8, 1}, 1);
  for (auto& w : net.weights) std::fill(w.begin(), w.end(), 0.0);
  for (double t : {0.0, 0.4, 1.0})
    CHECK(mlp_forward(net, sched, t, std::vector<double>{2.5})[0] == 0.0);
}

TEST_CASE("output is linear in the final layer parameters") {
  const NoiseSchedule sched(0.5, 0.1);
  MlpDenoiser net = mlp_init({3, 8, 1}, 5);
  const std::vector<double> x = {0.7};
  const double base = mlp_forward(net, sched, 0.3, x)[0];
  auto doubled = net;
  for (auto& w : doubled.weights.back()) w *= 2.0;
  for (auto& b : doubled.biases.back()) b *= 2.0;
  CHECK(mlp_forward(doubled, sched, 0.3, x)[0] == doctest::Approx(2.0 * base).epsilon(1e-14));
}

TEST_CASE("deterministic init gives the frozen golden forward output") {
  const NoiseSchedule sched(0.5, 0.1);
  const MlpDenoiser net = mlp_init({3, 4, 1}, 20240612);
  const double out = mlp_forward(net, sched, 0.25, std::vector<double>{0.5})[0];
  // Golden value captured once from this deterministic configuration.
  CHECK(out == doctest::Approx(0.016964269820153637).epsilon(1e-15));
}

TEST_CASE("zero network loss equals the data dimension in expectation") {
  const NoiseSchedule sched(0.5, 0.1);

  SUBCASE("d = 1") {
    MlpDenoiser net = mlp_init({3, 8, 1}, 2);
    for (auto& w : net.weights) std::fill(w.begin(), w.end(), 0.0);
    Rng rng(3);
    const int B = 4096;
    auto batch = make_batch(toy_mixture(), sched, B, rng);
    const auto [loss, grad] = loss_and_grad(net, sched, batch);
    // loss = mean of chi^2_1 draws; sd of the mean is sqrt(2/B)
    CHECK(std::abs(loss - 1.0) < 3.0 * std::sqrt(2.0 / B));
  }

  SUBCASE("d = 4 by additivity") {
    GaussianPairMixture prior;
    prior.dim = 4;
    GaussianPairComponent comp;
    comp.weight = 1.0;
    comp.mean_s = {0.0, 0.0, 0.0, 0.0};
    comp.mean_y = {0.0, 0.0, 0.0, 0.0};
    comp.var_ss = {1.0, 1.0, 1.0, 1.0};
    comp.var_yy = {1.0, 1.0, 1.0, 1.0};
    comp.cov_sy = {0.0, 0.0, 0.0, 0.0};
    prior.components = {comp};
    MlpDenoiser net = mlp_init({6, 8, 4}, 2);
    for (auto& w : net.weights) std::fill(w.begin(), w.end(), 0.0);
    Rng rng(4);
    const int B = 4096;
    auto batch = make_batch(prior, sched, B, rng);
    const auto [loss, grad] = loss_and_grad(net, sched, batch);
    CHECK(std::abs(loss - 4.0) < 3.0 * std::sqrt(2.0 * 4.0 / B));
  }
}

TEST_CASE("gradients match central finite differences on every layer") {
  const NoiseSchedule sched(0.5, 0.1);
  MlpDenoiser net = mlp_init({3, 16, 16, 1}, 7);
  Rng rng(8);
  auto batch = make_batch(toy_mixture(), sched, 64, rng);
  const auto [loss, grad] = loss_and_grad(net, sched, batch);
  (void)loss;

  const double h = 1e-5;
  Rng pick(9);
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t idx =
          static_cast<std::size_t>(pick.uniform() * net.weights[l].size());
      auto perturbed = net;
      perturbed.weights[l][idx] += h;
      const double up = loss_and_grad(perturbed, sched, batch).first;
      perturbed.weights[l][idx] -= 2.0 * h;
      const double dn = loss_and_grad(perturbed, sched, batch).first;
      const double fd = (up - dn) / (2.0 * h);
      const double g = grad.weights[l][idx];
      const double rel = std::abs(fd - g) /
                         std::max({std::abs(g), std::abs(fd), 1e-6});
      CHECK(rel < 1e-4);
    }
    // A few bias entries per layer as well.
    for (int trial = 0; trial < 8; ++trial) {
      const std::size_t idx =
          static_cast<std::size_t>(pick.uniform() * net.biases[l].size());
      auto perturbed = net;
      perturbed.biases[l][idx] += h;
      const double up = loss_and_grad(perturbed, sched, batch).first;
      perturbed.biases[l][idx] -= 2.0 * h;
      const double dn = loss_and_grad(perturbed, sched, batch).first;
      const double fd = (up - dn) / (2.0 * h);
      const double g = grad.biases[l][idx];
      const double rel = std::abs(fd - g) /
                         std::max({std::abs(g), std::abs(fd), 1e-6});
      CHECK(rel < 1e-4);
    }
  }
}

TEST_CASE("zero learning rate leaves the loss trace constant") {
  const NoiseSchedule sched(0.5, 0.1);
  MlpDenoiser net = mlp_init({3, 8, 1}, 10);
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.batch_size = 32;
  cfg.iterations = 20;
  Rng rng_a(11), rng_b(11);
  const auto result = train(net, sched, toy_mixture(), cfg, rng_a);
  // Same batches, same (unchanged) weights: the trace replays exactly.
  const auto replay = train(net, sched, toy_mixture(), cfg, rng_b);
  CHECK(result.loss_trace == replay.loss_trace);
  CHECK(result.net.weights == net.weights);
}

TEST_CASE("a short training run reduces the loss below the zero predictor") {
  const NoiseSchedule sched(0.5, 0.1);
  MlpDenoiser net = mlp_init({3, 32, 32, 1}, 12);
  TrainConfig cfg;
  cfg.iterations = 1200;
  cfg.batch_size = 128;
  Rng rng(13);
  const auto result = train(std::move(net), sched, toy_mixture(), cfg, rng);
  double tail = 0.0;
  for (int i = 0; i < 100; ++i)
    tail += result.loss_trace[result.loss_trace.size() - 1 - i];
  tail /= 100.0;
  CHECK(tail < 0.95);  // zero network sits at 1.0
}

TEST_CASE("training consumes only the clean marginal") {
  const NoiseSchedule sched(0.5, 0.1);
  TrainConfig cfg;
  cfg.iterations = 40;
  cfg.batch_size = 64;

  auto prior_a = toy_mixture();
  auto prior_b = toy_mixture();
  prior_b.components[0].mean_y = {5.0};
  prior_b.components[0].var_yy = {0.25};
  prior_b.components[0].cov_sy = {-0.3};

  MlpDenoiser net = mlp_init({3, 16, 1}, 14);
  Rng rng_a(15), rng_b(15);
  const auto res_a = train(net, sched, prior_a, cfg, rng_a);
  const auto res_b = train(net, sched, prior_b, cfg, rng_b);
  CHECK(res_a.net.weights == res_b.net.weights);
  CHECK(res_a.net.biases == res_b.net.biases);
  CHECK(res_a.loss_trace == res_b.loss_trace);
}

TEST_CASE("model serialization round trip") {
  const NoiseSchedule sched(0.7, 0.05);
  MlpDenoiser net = mlp_init({3, 8, 8, 1}, 16);
  const auto path = std::filesystem::temp_directory_path() / "sips_model_test.json";
  save_mlp(net, sched, 16, path.string());
  const auto loaded = load_mlp(path.string());
  CHECK(loaded.net.layer_sizes == net.layer_sizes);
  CHECK(loaded.net.weights == net.weights);
  CHECK(loaded.net.biases == net.biases);
  CHECK(loaded.sched.a == sched.a);
  CHECK(loaded.sched.c == sched.c);
  CHECK(loaded.seed == 16);
  std::filesystem::remove(path);
}

TEST_CASE("trained denoiser wrapper evaluates the network") {
  const NoiseSchedule sched(0.5, 0.1);
  MlpDenoiser net = mlp_init({3, 8, 1}, 17);
  TrainedDenoiser den(net, sched);
  CHECK(den.dim() == 1);
  std::vector<double> out(1);
  den.eval(0.4, std::vector<double>{0.2}, out);
  CHECK(out[0] == mlp_forward(net, sched, 0.4, std::vector<double>{0.2})[0]);
}

TEST_CASE("elementwise wrapper broadcasts a scalar denoiser") {
  const NoiseSchedule sched(0.5, 0.1);
  auto inner = std::make_shared<OracleEtaDenoiser>(toy_mixture(), sched);
  ElementwiseDenoiser den(inner);
  const std::vector<double> x = {0.5, -1.0, 2.0};
  std::vector<double> out(3);
  den.eval(0.3, x, out);
  for (int i = 0; i < 3; ++i) {
    std::vector<double> expect(1);
    inner->eval(0.3, std::span<const double>(&x[i], 1), expect);
    CHECK(out[i] == expect[0]);
  }
}
