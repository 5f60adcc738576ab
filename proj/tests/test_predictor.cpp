#include <memory>
#include <vector>

#include "doctest.h"
#include "sips/predictor.hpp"
#include "sips/sampler.hpp"

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

}  // namespace

TEST_CASE("identity predictor returns its input") {
  IdentityPredictor pred;
  const std::vector<double> y = {1.0, 2.0, 3.0};
  CHECK(pred.predict(y) == y);
}

TEST_CASE("oracle clean predictor requires context") {
  OracleCleanPredictor pred;
  const std::vector<double> y = {1.0};
  const std::vector<double> s = {0.25};
  CHECK(pred.predict(y, s) == s);
  CHECK_THROWS_AS(pred.predict(y), std::invalid_argument);
}

TEST_CASE("mmse predictor matches the conditional-Gaussian formula") {
  MmsePredictor pred(toy_mixture());
  const std::vector<double> y = {1.0};
  CHECK(pred.predict(y)[0] == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("perturbed with alpha=1, beta=0 equals its inner predictor") {
  auto inner = std::make_shared<MmsePredictor>(toy_mixture());
  PerturbedPredictor pred(inner, 1.0, {});
  Rng rng(9);
  for (int i = 0; i < 1000; ++i) {
    const std::vector<double> y = {3.0 * rng.gauss()};
    CHECK(pred.predict(y) == inner->predict(y));
  }
}

TEST_CASE("perturbed applies gain and bias") {
  auto inner = std::make_shared<IdentityPredictor>();
  PerturbedPredictor pred(inner, 2.0, {0.5, -0.5});
  const std::vector<double> y = {1.0, 3.0};
  const auto out = pred.predict(y);
  CHECK(out[0] == doctest::Approx(2.5));
  CHECK(out[1] == doctest::Approx(5.5));
}

TEST_CASE("drift identity: kappa=0 with zero denoiser returns the prediction exactly") {
  const NoiseSchedule sched(0.5, 0.1);
  SamplerConfig cfg;
  cfg.kappa = 0.0;
  cfg.steps = 15;
  cfg.grid = uniform_grid(15);
  ZeroDenoiser zero;
  Rng rng(101);

  const std::vector<double> y = {0.37};
  const std::vector<double> s = {-1.13};

  std::vector<std::shared_ptr<Predictor>> kinds = {
      std::make_shared<IdentityPredictor>(),
      std::make_shared<OracleCleanPredictor>(),
      std::make_shared<MmsePredictor>(toy_mixture()),
      std::make_shared<PerturbedPredictor>(std::make_shared<IdentityPredictor>(),
                                           0.8, std::vector<double>{0.1}),
  };
  for (const auto& kind : kinds) {
    const auto expected = kind->predict(y, s);
    const auto got = sips_sample(y, *kind, zero, sched, cfg, rng, s);
    CHECK(got == expected);
  }
}
