#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "sips/cli.hpp"
#include "sips/config.hpp"
#include "sips/signal.hpp"

using namespace sips;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

nlohmann::json small_config(const fs::path& out_dir) {
  nlohmann::json j;
  j["schedule"] = {{"a", 0.1}, {"c", 0.5}};
  j["sampler"] = {{"kappa", 0.0}, {"steps", 15}, {"post_process", false}, {"seed", 7}};
  j["prior"] = {{"dim", 1},
                {"components",
                 {{{"weight", 1.0},
                   {"mean_s", 0.0},
                   {"mean_y", 0.0},
                   {"var_ss", 1.0},
                   {"var_yy", 2.0},
                   {"cov_sy", 1.0}}}}};
  j["predictor"] = {{"kind", "mmse"}};
  j["denoiser"] = {{"kind", "oracle_eta"}};
  j["verify"] = {{"n_samples", 4000},
                 {"steps", 200},
                 {"t_stops", {0.5, 1.0}},
                 {"kappas", {0.0, 0.4}},
                 {"threshold", 0.05}};
  j["train"] = {{"iterations", 50}, {"batch_size", 32}, {"seed", 3}};
  j["output_dir"] = out_dir.string();
  return j;
}

fs::path write_config(const fs::path& dir, const nlohmann::json& j) {
  const auto path = dir / "config.json";
  std::ofstream out(path);
  out << j.dump(2) << '\n';
  return path;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(std::initializer_list<std::string> args) {
  return cli::run(std::vector<std::string>(args));
}

}  // namespace

TEST_CASE("config loading") {
  const auto dir = fresh_dir("sips_cli_config");

  SUBCASE("defaults round trip through JSON") {
    const auto cfg = default_config();
    const auto cfg2 = config_from_json(config_to_json(cfg));
    CHECK(config_to_json(cfg2) == config_to_json(cfg));
  }

  SUBCASE("parse errors carry a line number") {
    const auto path = dir / "broken.json";
    std::ofstream(path) << "{\n  \"schedule\": {\n  \"a\": oops\n}\n}\n";
    try {
      load_config(path.string());
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find(":3:") != std::string::npos);
    }
  }

  SUBCASE("unknown keys are rejected") {
    auto j = small_config(dir);
    j["schedle"] = {{"a", 0.1}};
    CHECK_THROWS_AS(config_from_json(j), ConfigError);
  }

  SUBCASE("numeric constraints are re-validated") {
    auto j = small_config(dir);
    j["schedule"]["c"] = -1.0;
    CHECK_THROWS_AS(config_from_json(j), ConfigError);

    j = small_config(dir);
    j["prior"]["components"][0]["var_ss"] = 0.0;
    CHECK_THROWS_AS(config_from_json(j), ConfigError);

    j = small_config(dir);
    j["sampler"]["steps"] = 0;
    CHECK_THROWS_AS(config_from_json(j), ConfigError);
  }

  SUBCASE("trained denoiser requires an existing model file") {
    auto j = small_config(dir);
    j["denoiser"] = {{"kind", "trained"}, {"model", (dir / "missing.json").string()}};
    CHECK_THROWS_AS(config_from_json(j), ConfigError);
  }
}

TEST_CASE("cli: missing or malformed config exits with 2") {
  const auto dir = fresh_dir("sips_cli_badcfg");
  CHECK(run_cli({"sample", "--config", (dir / "nope.json").string()}) == 2);
  const auto path = dir / "broken.json";
  std::ofstream(path) << "{ not json";
  CHECK(run_cli({"sample", "--config", path.string()}) == 2);
}

TEST_CASE("cli: verify-marginals writes a CSV row per grid point") {
  const auto dir = fresh_dir("sips_cli_marg");
  const auto cfg_path = write_config(dir, small_config(dir / "out"));
  CHECK(run_cli({"verify-marginals", "--config", cfg_path.string()}) == 0);

  const auto csv = slurp(dir / "out" / "marginals.csv");
  // header + 2 t_stops x 2 kappas
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
  CHECK(fs::exists(dir / "out" / "marginals.json"));
  CHECK(fs::exists(dir / "out" / "resolved_config.json"));
}

TEST_CASE("cli: resolved config reproduces the run") {
  const auto dir = fresh_dir("sips_cli_resolved");
  auto j = small_config(dir / "a");
  j["verify"]["n_samples"] = 500;
  const auto cfg_path = write_config(dir, j);
  CHECK(run_cli({"sample", "--config", cfg_path.string(), "--seed", "11"}) == 0);

  // Re-run from the echoed config, pointing the output elsewhere.
  CHECK(run_cli({"sample", "--config", (dir / "a" / "resolved_config.json").string(),
                 "--out", (dir / "b").string()}) == 0);
  CHECK(slurp(dir / "a" / "samples.csv") == slurp(dir / "b" / "samples.csv"));
  CHECK(slurp(dir / "a" / "summary.csv") == slurp(dir / "b" / "summary.csv"));
}

TEST_CASE("cli: sample is byte-identical across reruns with a fixed seed") {
  const auto dir = fresh_dir("sips_cli_repro");
  auto j = small_config(dir / "a");
  j["verify"]["n_samples"] = 800;
  j["sampler"]["kappa"] = 0.4;  // stochastic path
  const auto cfg_path = write_config(dir, j);

  CHECK(run_cli({"sample", "--config", cfg_path.string(), "--seed", "7"}) == 0);
  const auto first = slurp(dir / "a" / "samples.csv");
  CHECK(run_cli({"sample", "--config", cfg_path.string(), "--seed", "7"}) == 0);
  CHECK(slurp(dir / "a" / "samples.csv") == first);

  CHECK(run_cli({"sample", "--config", cfg_path.string(), "--seed", "8"}) == 0);
  CHECK(slurp(dir / "a" / "samples.csv") != first);
}

TEST_CASE("cli: train writes a loadable model and a loss trace") {
  const auto dir = fresh_dir("sips_cli_train");
  const auto cfg_path = write_config(dir, small_config(dir / "out"));
  CHECK(run_cli({"train", "--config", cfg_path.string()}) == 0);
  const auto model_path = dir / "out" / "model.json";
  REQUIRE(fs::exists(model_path));
  const auto loaded = load_mlp(model_path.string());
  CHECK(loaded.net.layer_sizes == std::vector<int>{3, 64, 64, 1});

  const auto trace = slurp(dir / "out" / "loss_trace.csv");
  CHECK(std::count(trace.begin(), trace.end(), '\n') == 51);  // header + 50

  // A sample run can consume the trained model.
  auto j = small_config(dir / "out2");
  j["verify"]["n_samples"] = 200;
  j["denoiser"] = {{"kind", "trained"}, {"model", model_path.string()}};
  const auto cfg2 = write_config(fresh_dir("sips_cli_train2"), j);
  CHECK(run_cli({"sample", "--config", cfg2.string()}) == 0);
}

TEST_CASE("cli: sweeps emit one row per setting") {
  const auto dir = fresh_dir("sips_cli_sweep");
  auto j = small_config(dir / "out");
  j["verify"]["n_samples"] = 500;
  j["sweep"] = {{"kappas", {0.0, 0.5}}, {"steps", {1, 4, 15}}};
  const auto cfg_path = write_config(dir, j);

  CHECK(run_cli({"sweep-kappa", "--config", cfg_path.string()}) == 0);
  const auto kappa_csv = slurp(dir / "out" / "sweep_kappa.csv");
  CHECK(std::count(kappa_csv.begin(), kappa_csv.end(), '\n') == 3);

  CHECK(run_cli({"sweep-steps", "--config", cfg_path.string()}) == 0);
  const auto steps_csv = slurp(dir / "out" / "sweep_steps.csv");
  CHECK(std::count(steps_csv.begin(), steps_csv.end(), '\n') == 4);
}

TEST_CASE("cli: numerical divergence exits with 3") {
  const auto dir = fresh_dir("sips_cli_diverge");
  auto j = small_config(dir / "out");
  j["verify"]["n_samples"] = 10;
  j["predictor"] = {{"kind", "perturbed"},
                    {"alpha", 1e200},
                    {"inner", {{"kind", "perturbed"},
                               {"alpha", 1e200},
                               {"inner", {{"kind", "identity"}}}}}};
  const auto cfg_path = write_config(dir, j);
  CHECK(run_cli({"sample", "--config", cfg_path.string()}) == 3);
}

TEST_CASE("cli: enhance with zero denoiser and kappa=0 equals the gate alone") {
  const auto dir = fresh_dir("sips_cli_enhance");
  auto j = small_config(dir / "out");
  j["denoiser"] = {{"kind", "zero"}};
  j["sampler"]["kappa"] = 0.0;
  j["enhance"] = {{"floor", 0.05}, {"noise_percentile", 50.0}};
  const auto cfg_path = write_config(dir, j);

  Waveform in;
  in.sample_rate = 16000;
  in.samples.resize(6000);
  Rng rng(12);
  for (std::size_t n = 0; n < in.samples.size(); ++n)
    in.samples[n] = 0.4 * std::sin(2.0 * std::numbers::pi * 440.0 * n / 16000.0) +
                    0.05 * rng.gauss();
  const auto in_path = dir / "in.wav";
  write_wav(in_path.string(), in);

  const auto out_path = dir / "enhanced.wav";
  CHECK(run_cli({"enhance", "--config", cfg_path.string(), "--in",
                 in_path.string(), "--out", out_path.string()}) == 0);

  const auto direct = spectral_gate_predict(read_wav(in_path.string()), 0.05, 50.0);
  const auto gate_path = dir / "gate.wav";
  write_wav(gate_path.string(), direct);

  const auto a = read_wav(out_path.string());
  const auto b = read_wav(gate_path.string());
  REQUIRE(a.samples.size() == b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i)
    CHECK(std::abs(a.samples[i] - b.samples[i]) <= 1.0 / 32768.0 + 1e-12);
}
