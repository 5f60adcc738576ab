#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "sips/denoiser.hpp"
#include "sips/mixture.hpp"
#include "sips/predictor.hpp"
#include "sips/sampler.hpp"
#include "sips/schedule.hpp"

namespace sips {

/// Malformed configuration; the message carries file:line for parse errors
/// and the offending field path for semantic errors.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct VerifySpec {
  std::int64_t n_samples = 100000;
  int steps = 2000;
  std::vector<double> t_stops = {0.25, 0.5, 0.75, 1.0};
  std::vector<double> kappas = {0.0, 0.4, 1.0};
  double threshold = 0.02;
};

struct EnhanceSpec {
  double floor = 0.05;
  double noise_percentile = 50.0;
};

struct SweepSpec {
  std::vector<double> kappas = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5,
                                0.6, 0.7, 0.8, 0.9, 1.0};
  std::vector<int> steps = {1, 2, 4, 8, 15, 30, 60};
};

struct ExperimentConfig {
  NoiseSchedule schedule;
  SamplerConfig sampler;
  GaussianPairMixture prior;
  nlohmann::json predictor;  // kind + parameters, possibly nested
  nlohmann::json denoiser;   // kind + optional model path
  VerifySpec verify;
  TrainConfig train;
  EnhanceSpec enhance;
  SweepSpec sweep;
  std::string output_dir = "out";
};

ExperimentConfig default_config();

/// Parses and validates; every numeric constraint of the owning modules is
/// re-checked and referenced files must exist.
ExperimentConfig load_config(const std::string& path);

/// Effective configuration as JSON; reloading this reproduces the run.
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const nlohmann::json& j);

std::shared_ptr<Predictor> make_predictor(const ExperimentConfig& cfg);
std::shared_ptr<Denoiser> make_denoiser(const ExperimentConfig& cfg);

}  // namespace sips
