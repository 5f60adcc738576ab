#pragma once

#include <memory>
#include <span>
#include <vector>

#include "sips/mixture.hpp"

namespace sips {

/// Deterministic map from a degraded observation to a clean estimate. The
/// residual predict(y) - y supplies the constant drift of the sampler.
/// `context` optionally carries the paired clean signal for test-only
/// predictors; ordinary predictors ignore it.
class Predictor {
 public:
  virtual ~Predictor() = default;

  std::vector<double> predict(std::span<const double> y,
                              std::span<const double> context = {}) const {
    return do_predict(y, context);
  }

 private:
  virtual std::vector<double> do_predict(std::span<const double> y,
                                         std::span<const double> context) const = 0;
};

class IdentityPredictor final : public Predictor {
 private:
  std::vector<double> do_predict(std::span<const double> y,
                                 std::span<const double>) const override {
    return {y.begin(), y.end()};
  }
};

/// Returns the paired clean signal; test-only, requires context.
class OracleCleanPredictor final : public Predictor {
 private:
  std::vector<double> do_predict(std::span<const double> y,
                                 std::span<const double> context) const override;
};

/// Posterior mean E[S | Y = y] under a pair mixture.
class MmsePredictor final : public Predictor {
 public:
  explicit MmsePredictor(GaussianPairMixture mix) : mix_(std::move(mix)) {}

 private:
  std::vector<double> do_predict(std::span<const double> y,
                                 std::span<const double>) const override {
    return mmse_predict(mix_, y);
  }

  GaussianPairMixture mix_;
};

/// alpha * inner(y) + beta, for studying miscalibrated predictors.
class PerturbedPredictor final : public Predictor {
 public:
  PerturbedPredictor(std::shared_ptr<const Predictor> inner, double alpha,
                     std::vector<double> beta)
      : inner_(std::move(inner)), alpha_(alpha), beta_(std::move(beta)) {}

 private:
  std::vector<double> do_predict(std::span<const double> y,
                                 std::span<const double> context) const override;

  std::shared_ptr<const Predictor> inner_;
  double alpha_ = 1.0;
  std::vector<double> beta_;
};

}  // namespace sips
