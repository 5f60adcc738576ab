#include "sips/config.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace sips {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

void expect_keys(const json& j, const std::string& where,
                 std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(where, "expected an object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* k) {
          return key == k;
        }) == allowed.end())
      fail(where, "unknown key '" + key + "'");
  }
}

double get_num(const json& j, const std::string& where, const char* key,
               double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) fail(where, std::string(key) + " must be a number");
  return j.at(key).get<double>();
}

std::vector<double> get_dim_vector(const json& j, const std::string& where,
                                   const char* key, int dim) {
  if (!j.contains(key)) fail(where, std::string("missing ") + key);
  const auto& v = j.at(key);
  if (v.is_number()) return std::vector<double>(dim, v.get<double>());
  if (!v.is_array()) fail(where, std::string(key) + " must be a number or array");
  auto out = v.get<std::vector<double>>();
  if (static_cast<int>(out.size()) != dim)
    fail(where, std::string(key) + " must have length dim");
  return out;
}

GaussianPairMixture parse_prior(const json& j) {
  expect_keys(j, "prior", {"dim", "components"});
  GaussianPairMixture mix;
  if (!j.contains("dim") || !j.at("dim").is_number_integer())
    fail("prior", "dim must be an integer");
  mix.dim = j.at("dim").get<int>();
  if (!j.contains("components") || !j.at("components").is_array())
    fail("prior", "components must be an array");
  int idx = 0;
  for (const auto& cj : j.at("components")) {
    const std::string where = "prior.components[" + std::to_string(idx++) + "]";
    expect_keys(cj, where,
                {"weight", "mean_s", "mean_y", "var_ss", "var_yy", "cov_sy"});
    GaussianPairComponent comp;
    comp.weight = get_num(cj, where, "weight", 1.0);
    comp.mean_s = get_dim_vector(cj, where, "mean_s", mix.dim);
    comp.mean_y = get_dim_vector(cj, where, "mean_y", mix.dim);
    comp.var_ss = get_dim_vector(cj, where, "var_ss", mix.dim);
    comp.var_yy = get_dim_vector(cj, where, "var_yy", mix.dim);
    comp.cov_sy = get_dim_vector(cj, where, "cov_sy", mix.dim);
    mix.components.push_back(std::move(comp));
  }
  try {
    mix.validate();
  } catch (const std::exception& e) {
    fail("prior", e.what());
  }
  return mix;
}

json prior_to_json(const GaussianPairMixture& mix) {
  json out;
  out["dim"] = mix.dim;
  out["components"] = json::array();
  for (const auto& comp : mix.components) {
    json cj;
    cj["weight"] = comp.weight;
    cj["mean_s"] = comp.mean_s;
    cj["mean_y"] = comp.mean_y;
    cj["var_ss"] = comp.var_ss;
    cj["var_yy"] = comp.var_yy;
    cj["cov_sy"] = comp.cov_sy;
    out["components"].push_back(std::move(cj));
  }
  return out;
}

void validate_predictor_spec(const json& j, const std::string& where) {
  expect_keys(j, where, {"kind", "alpha", "beta", "inner"});
  if (!j.contains("kind") || !j.at("kind").is_string())
    fail(where, "kind must be a string");
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "identity" || kind == "oracle_clean" || kind == "mmse") {
    if (j.contains("alpha") || j.contains("beta") || j.contains("inner"))
      fail(where, "alpha/beta/inner only apply to kind 'perturbed'");
    return;
  }
  if (kind == "perturbed") {
    if (!j.contains("inner")) fail(where, "perturbed predictor needs 'inner'");
    validate_predictor_spec(j.at("inner"), where + ".inner");
    if (j.contains("beta") && !j.at("beta").is_number() && !j.at("beta").is_array())
      fail(where, "beta must be a number or array");
    return;
  }
  fail(where, "unknown predictor kind '" + kind + "'");
}

std::shared_ptr<Predictor> build_predictor(const json& j,
                                           const GaussianPairMixture& prior) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "identity") return std::make_shared<IdentityPredictor>();
  if (kind == "oracle_clean") return std::make_shared<OracleCleanPredictor>();
  if (kind == "mmse") return std::make_shared<MmsePredictor>(prior);
  // perturbed
  auto inner = build_predictor(j.at("inner"), prior);
  const double alpha = j.value("alpha", 1.0);
  std::vector<double> beta;
  if (j.contains("beta")) {
    if (j.at("beta").is_number())
      beta = {j.at("beta").get<double>()};
    else
      beta = j.at("beta").get<std::vector<double>>();
  }
  return std::make_shared<PerturbedPredictor>(std::move(inner), alpha,
                                              std::move(beta));
}

void validate_denoiser_spec(const json& j) {
  expect_keys(j, "denoiser", {"kind", "model"});
  if (!j.contains("kind") || !j.at("kind").is_string())
    fail("denoiser", "kind must be a string");
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "zero" || kind == "oracle_eta") {
    if (j.contains("model")) fail("denoiser", "model only applies to kind 'trained'");
    return;
  }
  if (kind == "trained") {
    if (!j.contains("model") || !j.at("model").is_string())
      fail("denoiser", "trained denoiser needs a 'model' path");
    const auto path = j.at("model").get<std::string>();
    if (!std::filesystem::exists(path))
      fail("denoiser", "model file does not exist: " + path);
    return;
  }
  fail("denoiser", "unknown denoiser kind '" + kind + "'");
}

}  // namespace

ExperimentConfig default_config() {
  ExperimentConfig cfg;
  cfg.schedule = NoiseSchedule(0.5, 0.1);
  cfg.sampler.kappa = 0.0;
  cfg.sampler.steps = 15;
  cfg.sampler.grid = uniform_grid(15);
  cfg.sampler.post_process = false;
  cfg.sampler.seed = 1;
  cfg.prior.dim = 1;
  GaussianPairComponent comp;
  comp.weight = 1.0;
  comp.mean_s = {0.0};
  comp.mean_y = {0.0};
  comp.var_ss = {1.0};
  comp.var_yy = {2.0};
  comp.cov_sy = {1.0};
  cfg.prior.components = {comp};
  cfg.predictor = {{"kind", "mmse"}};
  cfg.denoiser = {{"kind", "oracle_eta"}};
  return cfg;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  expect_keys(j, "config",
              {"schedule", "sampler", "prior", "predictor", "denoiser", "verify",
               "train", "enhance", "sweep", "output_dir"});
  ExperimentConfig cfg = default_config();

  if (j.contains("schedule")) {
    const auto& sj = j.at("schedule");
    expect_keys(sj, "schedule", {"a", "c"});
    const double c = get_num(sj, "schedule", "c", cfg.schedule.c);
    const double a = get_num(sj, "schedule", "a", cfg.schedule.a);
    try {
      cfg.schedule = NoiseSchedule(c, a);
    } catch (const std::exception& e) {
      fail("schedule", e.what());
    }
  }

  if (j.contains("sampler")) {
    const auto& sj = j.at("sampler");
    expect_keys(sj, "sampler", {"kappa", "steps", "post_process", "seed"});
    cfg.sampler.kappa = get_num(sj, "sampler", "kappa", cfg.sampler.kappa);
    if (sj.contains("steps")) {
      if (!sj.at("steps").is_number_integer())
        fail("sampler", "steps must be an integer");
      cfg.sampler.steps = sj.at("steps").get<int>();
    }
    if (sj.contains("post_process")) {
      if (!sj.at("post_process").is_boolean())
        fail("sampler", "post_process must be a boolean");
      cfg.sampler.post_process = sj.at("post_process").get<bool>();
    }
    if (sj.contains("seed")) cfg.sampler.seed = sj.at("seed").get<std::uint64_t>();
    if (cfg.sampler.steps < 1) fail("sampler", "steps must be >= 1");
    cfg.sampler.grid = uniform_grid(cfg.sampler.steps);
    try {
      cfg.sampler.validate();
    } catch (const std::exception& e) {
      fail("sampler", e.what());
    }
  }

  if (j.contains("prior")) cfg.prior = parse_prior(j.at("prior"));

  if (j.contains("predictor")) {
    validate_predictor_spec(j.at("predictor"), "predictor");
    cfg.predictor = j.at("predictor");
  }
  if (j.contains("denoiser")) {
    validate_denoiser_spec(j.at("denoiser"));
    cfg.denoiser = j.at("denoiser");
  }

  if (j.contains("verify")) {
    const auto& vj = j.at("verify");
    expect_keys(vj, "verify", {"n_samples", "steps", "t_stops", "kappas", "threshold"});
    if (vj.contains("n_samples")) cfg.verify.n_samples = vj.at("n_samples").get<std::int64_t>();
    if (vj.contains("steps")) cfg.verify.steps = vj.at("steps").get<int>();
    if (vj.contains("t_stops"))
      cfg.verify.t_stops = vj.at("t_stops").get<std::vector<double>>();
    if (vj.contains("kappas"))
      cfg.verify.kappas = vj.at("kappas").get<std::vector<double>>();
    if (vj.contains("threshold")) cfg.verify.threshold = vj.at("threshold").get<double>();
    if (cfg.verify.n_samples < 1) fail("verify", "n_samples must be positive");
    if (cfg.verify.steps < 1) fail("verify", "steps must be >= 1");
    for (double t : cfg.verify.t_stops)
      if (!(t > 0.0 && t <= 1.0)) fail("verify", "t_stops must lie in (0,1]");
    for (double k : cfg.verify.kappas)
      if (!(k >= 0.0)) fail("verify", "kappas must be nonnegative");
    if (!(cfg.verify.threshold >= 0.0)) fail("verify", "threshold must be nonnegative");
  }

  if (j.contains("train")) {
    const auto& tj = j.at("train");
    expect_keys(tj, "train",
                {"learning_rate", "batch_size", "iterations", "seed",
                 "first_moment_decay", "second_moment_decay",
                 "epsilon_stabilizer", "hidden"});
    cfg.train.learning_rate = get_num(tj, "train", "learning_rate", cfg.train.learning_rate);
    if (tj.contains("batch_size")) cfg.train.batch_size = tj.at("batch_size").get<int>();
    if (tj.contains("iterations")) cfg.train.iterations = tj.at("iterations").get<int>();
    if (tj.contains("seed")) cfg.train.seed = tj.at("seed").get<std::uint64_t>();
    cfg.train.first_moment_decay =
        get_num(tj, "train", "first_moment_decay", cfg.train.first_moment_decay);
    cfg.train.second_moment_decay =
        get_num(tj, "train", "second_moment_decay", cfg.train.second_moment_decay);
    cfg.train.epsilon_stabilizer =
        get_num(tj, "train", "epsilon_stabilizer", cfg.train.epsilon_stabilizer);
    if (tj.contains("hidden")) cfg.train.hidden = tj.at("hidden").get<std::vector<int>>();
    try {
      cfg.train.validate();
    } catch (const std::exception& e) {
      fail("train", e.what());
    }
  }

  if (j.contains("enhance")) {
    const auto& ej = j.at("enhance");
    expect_keys(ej, "enhance", {"floor", "noise_percentile"});
    cfg.enhance.floor = get_num(ej, "enhance", "floor", cfg.enhance.floor);
    cfg.enhance.noise_percentile =
        get_num(ej, "enhance", "noise_percentile", cfg.enhance.noise_percentile);
    if (!(cfg.enhance.floor >= 0.0 && cfg.enhance.floor <= 1.0))
      fail("enhance", "floor must lie in [0,1]");
    if (!(cfg.enhance.noise_percentile >= 0.0 && cfg.enhance.noise_percentile <= 100.0))
      fail("enhance", "noise_percentile must lie in [0,100]");
  }

  if (j.contains("sweep")) {
    const auto& sj = j.at("sweep");
    expect_keys(sj, "sweep", {"kappas", "steps"});
    if (sj.contains("kappas"))
      cfg.sweep.kappas = sj.at("kappas").get<std::vector<double>>();
    if (sj.contains("steps")) cfg.sweep.steps = sj.at("steps").get<std::vector<int>>();
    for (double k : cfg.sweep.kappas)
      if (!(k >= 0.0)) fail("sweep", "kappas must be nonnegative");
    for (int m : cfg.sweep.steps)
      if (m < 1) fail("sweep", "steps must be >= 1");
  }

  if (j.contains("output_dir")) {
    if (!j.at("output_dir").is_string()) fail("output_dir", "must be a string");
    cfg.output_dir = j.at("output_dir").get<std::string>();
  }

  // Cross-module consistency re-checks.
  if (cfg.prior.dim < 1) fail("prior", "dim must be positive");
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const std::size_t byte = e.byte > 0 ? e.byte - 1 : 0;
    const std::size_t line =
        1 + static_cast<std::size_t>(
                std::count(text.begin(),
                           text.begin() + std::min(byte, text.size()), '\n'));
    throw ConfigError(path + ":" + std::to_string(line) + ": " + e.what());
  }
  try {
    return config_from_json(j);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["schedule"] = {{"a", cfg.schedule.a}, {"c", cfg.schedule.c}};
  j["sampler"] = {{"kappa", cfg.sampler.kappa},
                  {"steps", cfg.sampler.steps},
                  {"post_process", cfg.sampler.post_process},
                  {"seed", cfg.sampler.seed}};
  j["prior"] = prior_to_json(cfg.prior);
  j["predictor"] = cfg.predictor;
  j["denoiser"] = cfg.denoiser;
  j["verify"] = {{"n_samples", cfg.verify.n_samples},
                 {"steps", cfg.verify.steps},
                 {"t_stops", cfg.verify.t_stops},
                 {"kappas", cfg.verify.kappas},
                 {"threshold", cfg.verify.threshold}};
  j["train"] = {{"learning_rate", cfg.train.learning_rate},
                {"batch_size", cfg.train.batch_size},
                {"iterations", cfg.train.iterations},
                {"seed", cfg.train.seed},
                {"first_moment_decay", cfg.train.first_moment_decay},
                {"second_moment_decay", cfg.train.second_moment_decay},
                {"epsilon_stabilizer", cfg.train.epsilon_stabilizer},
                {"hidden", cfg.train.hidden}};
  j["enhance"] = {{"floor", cfg.enhance.floor},
                  {"noise_percentile", cfg.enhance.noise_percentile}};
  j["sweep"] = {{"kappas", cfg.sweep.kappas}, {"steps", cfg.sweep.steps}};
  j["output_dir"] = cfg.output_dir;
  return j;
}

std::shared_ptr<Predictor> make_predictor(const ExperimentConfig& cfg) {
  return build_predictor(cfg.predictor, cfg.prior);
}

std::shared_ptr<Denoiser> make_denoiser(const ExperimentConfig& cfg) {
  const auto kind = cfg.denoiser.at("kind").get<std::string>();
  if (kind == "zero") return std::make_shared<ZeroDenoiser>();
  if (kind == "oracle_eta")
    return std::make_shared<OracleEtaDenoiser>(cfg.prior, cfg.schedule);
  auto loaded = load_mlp(cfg.denoiser.at("model").get<std::string>());
  return std::make_shared<TrainedDenoiser>(std::move(loaded.net), loaded.sched);
}

}  // namespace sips
