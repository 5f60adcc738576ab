#include "sips/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "sips/config.hpp"
#include "sips/signal.hpp"
#include "sips/text.hpp"
#include "sips/threading.hpp"
#include "sips/verify.hpp"

namespace sips::cli {

namespace {

namespace fs = std::filesystem;

struct CommonOpts {
  std::string config_path;
  std::optional<double> kappa;
  std::optional<int> steps;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

void add_common(CLI::App* sub, CommonOpts& opts) {
  sub->add_option("--config", opts.config_path, "Experiment config (JSON)")
      ->required();
  sub->add_option("--kappa", opts.kappa, "Override sampler noise scale");
  sub->add_option("--steps", opts.steps, "Override sampler step count");
  sub->add_option("--seed", opts.seed, "Override sampler seed");
}

ExperimentConfig resolve(const CommonOpts& opts) {
  ExperimentConfig cfg = load_config(opts.config_path);
  if (opts.kappa) {
    if (*opts.kappa < 0.0) throw ConfigError("--kappa must be nonnegative");
    cfg.sampler.kappa = *opts.kappa;
  }
  if (opts.steps) {
    if (*opts.steps < 1) throw ConfigError("--steps must be >= 1");
    cfg.sampler.steps = *opts.steps;
    cfg.sampler.grid = uniform_grid(*opts.steps);
  }
  if (opts.seed) cfg.sampler.seed = *opts.seed;
  if (opts.out) cfg.output_dir = *opts.out;
  return cfg;
}

void echo_config(const ExperimentConfig& cfg) {
  fs::create_directories(cfg.output_dir);
  std::ofstream out(fs::path(cfg.output_dir) / "resolved_config.json");
  out << config_to_json(cfg).dump(2) << '\n';
}

nlohmann::json report_to_json(const MarginalReport& r) {
  return {{"t_stop", r.t_stop},       {"kappa", r.kappa},
          {"n_samples", r.n_samples}, {"steps", r.steps},
          {"w1", r.wasserstein1},     {"energy", r.energy_distance},
          {"threshold", r.threshold}, {"passed", r.passed}};
}

int cmd_verify_marginals(const ExperimentConfig& cfg) {
  echo_config(cfg);
  Rng rng(cfg.sampler.seed);
  std::ofstream csv(fs::path(cfg.output_dir) / "marginals.csv");
  csv << marginal_csv_header() << '\n';
  nlohmann::json summary = nlohmann::json::array();
  bool all_passed = true;
  for (double t_stop : cfg.verify.t_stops) {
    for (double kappa : cfg.verify.kappas) {
      const auto report =
          marginal_check(cfg.prior, cfg.schedule, kappa, t_stop,
                         cfg.verify.n_samples, cfg.verify.steps,
                         cfg.verify.threshold, rng);
      csv << marginal_csv_row(report) << '\n';
      summary.push_back(report_to_json(report));
      all_passed = all_passed && report.passed;
      std::cout << "verify-marginals: t_stop=" << fmt_g17(t_stop)
                << " kappa=" << fmt_g17(kappa)
                << " w1=" << fmt_g17(report.wasserstein1)
                << " energy=" << fmt_g17(report.energy_distance)
                << (report.passed ? " pass" : " FAIL") << '\n';
    }
  }
  std::ofstream js(fs::path(cfg.output_dir) / "marginals.json");
  js << summary.dump(2) << '\n';
  return all_passed ? 0 : 1;
}

int cmd_verify_score(const ExperimentConfig& cfg) {
  echo_config(cfg);
  Rng rng(cfg.sampler.seed);
  const int n = 1000;
  const double gamma_min = 1e-3;
  const double identity_tol = 1e-10;
  const double fd_tol = 1e-5;
  const double h = 1e-5;
  const int d = cfg.prior.dim;

  auto draw_state = [&](double t) {
    auto [s, y] = sample_pair(cfg.prior, rng);
    const double g = cfg.schedule.gamma(t);
    std::vector<double> x(d);
    for (int i = 0; i < d; ++i)
      x[i] = t * s[i] + (1.0 - t) * y[i] + g * rng.gauss();
    return x;
  };

  double max_identity = 0.0;
  for (int it = 0; it < n; ++it) {
    double t = rng.uniform();
    while (cfg.schedule.gamma(t) <= gamma_min) t = rng.uniform();
    const auto x = draw_state(t);
    const auto e = eta(cfg.prior, cfg.schedule, t, x);
    const auto sc = score(cfg.prior, cfg.schedule, t, x);
    const double g = cfg.schedule.gamma(t);
    double norm2 = 0.0;
    for (int i = 0; i < d; ++i) {
      const double r = e[i] + g * sc[i];
      norm2 += r * r;
    }
    max_identity = std::max(max_identity, std::sqrt(norm2));
  }

  double max_fd_rel = 0.0;
  for (int it = 0; it < n; ++it) {
    const double t = rng.uniform();
    auto x = draw_state(t);
    const auto sc = score(cfg.prior, cfg.schedule, t, x);
    double num2 = 0.0, den2 = 0.0;
    for (int i = 0; i < d; ++i) {
      const double orig = x[i];
      x[i] = orig + h;
      const double up = log_density(cfg.prior, cfg.schedule, t, x);
      x[i] = orig - h;
      const double dn = log_density(cfg.prior, cfg.schedule, t, x);
      x[i] = orig;
      const double fd = (up - dn) / (2.0 * h);
      num2 += (fd - sc[i]) * (fd - sc[i]);
      den2 += sc[i] * sc[i];
    }
    // Relative to the score magnitude, floored so a draw at the mixture
    // mode (score ~ 0) cannot blow up the ratio.
    max_fd_rel = std::max(max_fd_rel, std::sqrt(num2) / std::max(std::sqrt(den2), 1e-3));
  }

  const bool passed = max_identity < identity_tol && max_fd_rel < fd_tol;
  nlohmann::json j = {{"n", n},
                      {"max_identity_error", max_identity},
                      {"identity_tolerance", identity_tol},
                      {"max_fd_relative_error", max_fd_rel},
                      {"fd_tolerance", fd_tol},
                      {"passed", passed}};
  std::ofstream js(fs::path(cfg.output_dir) / "score_check.json");
  js << j.dump(2) << '\n';
  std::cout << "verify-score: identity=" << fmt_g17(max_identity)
            << " fd_rel=" << fmt_g17(max_fd_rel)
            << (passed ? " pass" : " FAIL") << '\n';
  return passed ? 0 : 1;
}

int cmd_train(const ExperimentConfig& cfg) {
  echo_config(cfg);
  std::vector<int> sizes;
  sizes.push_back(cfg.prior.dim + 2);
  for (int hdim : cfg.train.hidden) sizes.push_back(hdim);
  sizes.push_back(cfg.prior.dim);
  MlpDenoiser net = mlp_init(sizes, cfg.train.seed);
  Rng rng = Rng::stream(cfg.train.seed, 1);
  auto result = train(std::move(net), cfg.schedule, cfg.prior, cfg.train, rng);

  const auto model_path = fs::path(cfg.output_dir) / "model.json";
  save_mlp(result.net, cfg.schedule, cfg.train.seed, model_path.string());
  std::ofstream csv(fs::path(cfg.output_dir) / "loss_trace.csv");
  csv << "iteration,loss\n";
  for (std::size_t i = 0; i < result.loss_trace.size(); ++i)
    csv << i << ',' << fmt_g17(result.loss_trace[i]) << '\n';
  std::cout << "train: " << result.loss_trace.size()
            << " iterations, final loss "
            << fmt_g17(result.loss_trace.empty() ? 0.0 : result.loss_trace.back())
            << ", model written to " << model_path.string() << '\n';
  return 0;
}

struct SampleStats {
  std::int64_t n = 0;
  double mse = 0.0;
  double w1_to_clean = 0.0;
  double energy_to_clean = 0.0;
};

/// Paired draws from the prior pushed through the sampler; outputs are
/// compared against the paired clean samples as a draw of the S marginal.
SampleStats run_sampling(const ExperimentConfig& cfg, std::ostream* per_sample) {
  const auto predictor = make_predictor(cfg);
  const auto denoiser = make_denoiser(cfg);
  const std::size_t n = static_cast<std::size_t>(cfg.verify.n_samples);
  const std::size_t d = static_cast<std::size_t>(cfg.prior.dim);

  std::vector<double> ys(n * d), ss(n * d), xs(n * d);
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      Rng stream = Rng::stream(cfg.sampler.seed, k);
      auto [s, y] = sample_pair(cfg.prior, stream);
      auto x = sips_sample(y, *predictor, *denoiser, cfg.schedule, cfg.sampler,
                           stream, s);
      std::copy(y.begin(), y.end(), ys.begin() + k * d);
      std::copy(s.begin(), s.end(), ss.begin() + k * d);
      std::copy(x.begin(), x.end(), xs.begin() + k * d);
    }
  });

  SampleStats stats;
  stats.n = static_cast<std::int64_t>(n);
  double sq = 0.0;
  for (std::size_t i = 0; i < n * d; ++i) {
    const double r = xs[i] - ss[i];
    sq += r * r;
  }
  stats.mse = sq / static_cast<double>(n * d);

  std::vector<double> col_x(n), col_s(n);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      col_x[k] = xs[k * d + i];
      col_s[k] = ss[k * d + i];
    }
    stats.w1_to_clean = std::max(stats.w1_to_clean, wasserstein_1d(col_x, col_s));
    if (i == 0 && d == 1)
      stats.energy_to_clean = energy_distance(std::span<const double>(col_x),
                                              std::span<const double>(col_s));
  }

  if (per_sample) {
    *per_sample << "id";
    for (std::size_t i = 0; i < d; ++i) *per_sample << ",y" << i;
    for (std::size_t i = 0; i < d; ++i) *per_sample << ",s" << i;
    for (std::size_t i = 0; i < d; ++i) *per_sample << ",x" << i;
    *per_sample << ",sq_err\n";
    for (std::size_t k = 0; k < n; ++k) {
      *per_sample << k;
      for (std::size_t i = 0; i < d; ++i) *per_sample << ',' << fmt_g17(ys[k * d + i]);
      for (std::size_t i = 0; i < d; ++i) *per_sample << ',' << fmt_g17(ss[k * d + i]);
      for (std::size_t i = 0; i < d; ++i) *per_sample << ',' << fmt_g17(xs[k * d + i]);
      double e = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        const double r = xs[k * d + i] - ss[k * d + i];
        e += r * r;
      }
      *per_sample << ',' << fmt_g17(e) << '\n';
    }
  }
  return stats;
}

std::string stats_csv_header() { return "kappa,steps,n,mse,w1_to_clean,energy_to_clean"; }

std::string stats_csv_row(const ExperimentConfig& cfg, const SampleStats& s) {
  return fmt_g17(cfg.sampler.kappa) + ',' + std::to_string(cfg.sampler.steps) +
         ',' + std::to_string(s.n) + ',' + fmt_g17(s.mse) + ',' +
         fmt_g17(s.w1_to_clean) + ',' + fmt_g17(s.energy_to_clean);
}

int cmd_sample(const ExperimentConfig& cfg) {
  echo_config(cfg);
  std::ofstream per_sample(fs::path(cfg.output_dir) / "samples.csv");
  const auto stats = run_sampling(cfg, &per_sample);
  std::ofstream csv(fs::path(cfg.output_dir) / "summary.csv");
  csv << stats_csv_header() << '\n' << stats_csv_row(cfg, stats) << '\n';
  std::cout << "sample: n=" << stats.n << " mse=" << fmt_g17(stats.mse)
            << " w1_to_clean=" << fmt_g17(stats.w1_to_clean) << '\n';
  return 0;
}

int cmd_sweep(const ExperimentConfig& base, bool over_kappa) {
  echo_config(base);
  const std::string name = over_kappa ? "sweep_kappa.csv" : "sweep_steps.csv";
  std::ofstream csv(fs::path(base.output_dir) / name);
  csv << stats_csv_header() << '\n';
  const std::size_t count =
      over_kappa ? base.sweep.kappas.size() : base.sweep.steps.size();
  for (std::size_t i = 0; i < count; ++i) {
    ExperimentConfig cfg = base;
    if (over_kappa) {
      cfg.sampler.kappa = base.sweep.kappas[i];
    } else {
      cfg.sampler.steps = base.sweep.steps[i];
      cfg.sampler.grid = uniform_grid(cfg.sampler.steps);
    }
    const auto stats = run_sampling(cfg, nullptr);
    csv << stats_csv_row(cfg, stats) << '\n';
    std::cout << (over_kappa ? "sweep-kappa: kappa=" : "sweep-steps: M=")
              << (over_kappa ? fmt_g17(cfg.sampler.kappa)
                             : std::to_string(cfg.sampler.steps))
              << " mse=" << fmt_g17(stats.mse)
              << " w1_to_clean=" << fmt_g17(stats.w1_to_clean) << '\n';
  }
  return 0;
}

/// Spectral gate acting on the packed, amplitude-compressed representation;
/// pipeline-equivalent to spectral_gate_predict on the waveform.
class CompressedGatePredictor final : public Predictor {
 public:
  CompressedGatePredictor(int freqs, int frames, StftParams params,
                          double floor_gain, double percentile)
      : freqs_(freqs), frames_(frames), params_(params),
        floor_gain_(floor_gain), percentile_(percentile) {}

 private:
  std::vector<double> do_predict(std::span<const double> y,
                                 std::span<const double>) const override {
    Spectrogram packed;
    packed.freqs = freqs_;
    packed.frames = frames_;
    packed.data.assign(y.begin(), y.end());
    ComplexSpec spec = decompress_spec(unpack_channels(packed), params_);
    apply_spectral_gate(spec, floor_gain_, percentile_);
    return pack_channels(compress_spec(std::move(spec), params_)).data;
  }

  int freqs_;
  int frames_;
  StftParams params_;
  double floor_gain_;
  double percentile_;
};

int cmd_enhance(const ExperimentConfig& cfg, const std::string& in_path,
                const std::string& out_path) {
  echo_config(cfg);
  const Waveform input = read_wav(in_path);
  if (input.samples.empty()) throw std::runtime_error("enhance: empty input WAV");
  const StftParams params;

  const ComplexSpec spec = stft(input.samples, params);
  const Spectrogram packed = pack_channels(compress_spec(spec, params));

  CompressedGatePredictor predictor(packed.freqs, packed.frames, params,
                                    cfg.enhance.floor, cfg.enhance.noise_percentile);
  std::shared_ptr<Denoiser> denoiser = make_denoiser(cfg);
  if (denoiser->dim() == 1)
    denoiser = std::make_shared<ElementwiseDenoiser>(denoiser);
  else if (denoiser->dim() > 1)
    throw std::runtime_error(
        "enhance: denoiser dimension incompatible with per-bin sampling");

  Rng rng(cfg.sampler.seed);
  const auto out_vec =
      sips_sample(packed.data, predictor, *denoiser, cfg.schedule, cfg.sampler, rng);

  Spectrogram out_packed;
  out_packed.freqs = packed.freqs;
  out_packed.frames = packed.frames;
  out_packed.data = out_vec;
  ComplexSpec out_spec = decompress_spec(unpack_channels(out_packed), params);

  Waveform out;
  out.sample_rate = input.sample_rate;
  out.samples = istft(out_spec, static_cast<std::int64_t>(input.samples.size()), params);
  write_wav(out_path, out);
  std::cout << "enhance: wrote " << out_path << " (" << out.samples.size()
            << " samples at " << out.sample_rate << " Hz)\n";
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"SIPS: stochastic-interpolant sampling with a predictive-generative drift split"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string in_path, out_wav;

  auto* vm = app.add_subcommand(
      "verify-marginals",
      "Forward-SDE vs direct-interpolant marginals over the configured "
      "(t_stop, kappa) grid. CSV columns: t_stop,kappa,n,steps,w1,energy,"
      "threshold,passed");
  add_common(vm, opts);
  vm->add_option("--out", opts.out, "Output directory");

  auto* vs = app.add_subcommand(
      "verify-score",
      "Denoiser-score relation and finite-difference score check; writes "
      "score_check.json");
  add_common(vs, opts);
  vs->add_option("--out", opts.out, "Output directory");

  auto* tr = app.add_subcommand(
      "train", "Train the MLP denoiser; writes model.json and loss_trace.csv "
               "(columns: iteration,loss)");
  add_common(tr, opts);
  tr->add_option("--out", opts.out, "Output directory");

  auto* sa = app.add_subcommand(
      "sample",
      "Run the sampler on draws from the prior's Y marginal; writes "
      "samples.csv (id,y*,s*,x*,sq_err) and summary.csv (columns: "
      "kappa,steps,n,mse,w1_to_clean,energy_to_clean)");
  add_common(sa, opts);
  sa->add_option("--out", opts.out, "Output directory");

  auto* sk = app.add_subcommand(
      "sweep-kappa",
      "Repeat `sample` over the kappa grid; one sweep_kappa.csv row per "
      "setting (columns: kappa,steps,n,mse,w1_to_clean,energy_to_clean)");
  add_common(sk, opts);
  sk->add_option("--out", opts.out, "Output directory");

  auto* sw = app.add_subcommand(
      "sweep-steps",
      "Repeat `sample` over the step-count grid; one sweep_steps.csv row per "
      "setting (columns: kappa,steps,n,mse,w1_to_clean,energy_to_clean)");
  add_common(sw, opts);
  sw->add_option("--out", opts.out, "Output directory");

  auto* en = app.add_subcommand(
      "enhance",
      "Enhance a WAV file: spectral-gate predictor plus the configured "
      "denoiser, sampled per time-frequency bin in the compressed STFT "
      "domain");
  add_common(en, opts);
  en->add_option("--in", in_path, "Input WAV (16-bit PCM mono)")->required();
  en->add_option("--out", out_wav, "Output WAV path")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  std::string active = "?";
  try {
    if (vm->parsed()) {
      active = "verify-marginals";
      return cmd_verify_marginals(resolve(opts));
    }
    if (vs->parsed()) {
      active = "verify-score";
      return cmd_verify_score(resolve(opts));
    }
    if (tr->parsed()) {
      active = "train";
      return cmd_train(resolve(opts));
    }
    if (sa->parsed()) {
      active = "sample";
      return cmd_sample(resolve(opts));
    }
    if (sk->parsed()) {
      active = "sweep-kappa";
      return cmd_sweep(resolve(opts), true);
    }
    if (sw->parsed()) {
      active = "sweep-steps";
      return cmd_sweep(resolve(opts), false);
    }
    if (en->parsed()) {
      active = "enhance";
      return cmd_enhance(resolve(opts), in_path, out_wav);
    }
  } catch (const ConfigError& e) {
    std::cerr << "sips " << active << ": config error: " << e.what() << '\n';
    return 2;
  } catch (const DivergedError& e) {
    std::cerr << "sips " << active << ": diverged: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "sips " << active << ": " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace sips::cli
