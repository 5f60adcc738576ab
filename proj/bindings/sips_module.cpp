#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <complex>
#include <memory>

#include "sips/cli.hpp"
#include "sips/config.hpp"
#include "sips/denoiser.hpp"
#include "sips/mixture.hpp"
#include "sips/predictor.hpp"
#include "sips/sampler.hpp"
#include "sips/schedule.hpp"
#include "sips/signal.hpp"
#include "sips/verify.hpp"

namespace py = pybind11;
using namespace sips;

namespace {

std::vector<double> to_vec(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  return {a.data(), a.data() + a.size()};
}

py::array_t<double> to_array(const std::vector<double>& v) {
  // The (count, ptr) form copies into a fresh owned array.
  return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
}

py::array_t<std::complex<double>> spec_to_array(const ComplexSpec& spec) {
  std::vector<std::complex<double>> buf(spec.data.size());
  for (int f = 0; f < spec.freqs; ++f)
    for (int k = 0; k < spec.frames; ++k)
      buf[static_cast<std::size_t>(f) * spec.frames + k] = spec.at(f, k);
  return py::array_t<std::complex<double>>(
      {static_cast<py::ssize_t>(spec.freqs), static_cast<py::ssize_t>(spec.frames)},
      buf.data());
}

ComplexSpec array_to_spec(const py::array_t<std::complex<double>,
                                            py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw std::invalid_argument("expected a 2-D complex array");
  ComplexSpec spec;
  spec.freqs = static_cast<int>(a.shape(0));
  spec.frames = static_cast<int>(a.shape(1));
  spec.data.resize(static_cast<std::size_t>(spec.freqs) * spec.frames);
  auto r = a.unchecked<2>();
  for (int f = 0; f < spec.freqs; ++f)
    for (int k = 0; k < spec.frames; ++k) spec.at(f, k) = r(f, k);
  return spec;
}

}  // namespace

PYBIND11_MODULE(_sips, m) {
  m.doc() = "Stochastic-interpolant sampling with a predictive-generative drift split";

  py::class_<NoiseSchedule>(m, "NoiseSchedule")
      .def(py::init<double, double>(), py::arg("c") = 0.5, py::arg("a") = 0.1)
      .def_readonly("c", &NoiseSchedule::c)
      .def_readonly("a", &NoiseSchedule::a)
      .def("gamma", &NoiseSchedule::gamma, py::arg("t"))
      .def("gamma_dot", &NoiseSchedule::gamma_dot, py::arg("t"))
      .def("training_sigma", &NoiseSchedule::training_sigma, py::arg("t"));

  py::class_<Rng>(m, "Rng")
      .def(py::init<std::uint64_t>(), py::arg("seed"))
      .def_static("stream", &Rng::stream, py::arg("seed"), py::arg("index"))
      .def("uniform", &Rng::uniform)
      .def("gauss", &Rng::gauss);

  py::class_<GaussianPairComponent>(m, "GaussianPairComponent")
      .def(py::init([](double weight, std::vector<double> mean_s,
                       std::vector<double> mean_y, std::vector<double> var_ss,
                       std::vector<double> var_yy, std::vector<double> cov_sy) {
             GaussianPairComponent comp;
             comp.weight = weight;
             comp.mean_s = std::move(mean_s);
             comp.mean_y = std::move(mean_y);
             comp.var_ss = std::move(var_ss);
             comp.var_yy = std::move(var_yy);
             comp.cov_sy = std::move(cov_sy);
             return comp;
           }),
           py::arg("weight"), py::arg("mean_s"), py::arg("mean_y"),
           py::arg("var_ss"), py::arg("var_yy"), py::arg("cov_sy"))
      .def_readwrite("weight", &GaussianPairComponent::weight)
      .def_readwrite("mean_s", &GaussianPairComponent::mean_s)
      .def_readwrite("mean_y", &GaussianPairComponent::mean_y)
      .def_readwrite("var_ss", &GaussianPairComponent::var_ss)
      .def_readwrite("var_yy", &GaussianPairComponent::var_yy)
      .def_readwrite("cov_sy", &GaussianPairComponent::cov_sy);

  py::class_<GaussianPairMixture>(m, "GaussianPairMixture")
      .def(py::init([](std::vector<GaussianPairComponent> components, int dim) {
             GaussianPairMixture mix;
             mix.components = std::move(components);
             mix.dim = dim;
             mix.validate();
             return mix;
           }),
           py::arg("components"), py::arg("dim"))
      .def_readonly("dim", &GaussianPairMixture::dim)
      .def("validate", &GaussianPairMixture::validate);

  m.def("velocity",
        [](const GaussianPairMixture& mix, const NoiseSchedule& sched, double t,
           const py::array_t<double>& x) { return to_array(velocity(mix, sched, t, to_vec(x))); },
        py::arg("mix"), py::arg("sched"), py::arg("t"), py::arg("x"));
  m.def("eta",
        [](const GaussianPairMixture& mix, const NoiseSchedule& sched, double t,
           const py::array_t<double>& x) { return to_array(eta(mix, sched, t, to_vec(x))); },
        py::arg("mix"), py::arg("sched"), py::arg("t"), py::arg("x"));
  m.def("score",
        [](const GaussianPairMixture& mix, const NoiseSchedule& sched, double t,
           const py::array_t<double>& x) { return to_array(score(mix, sched, t, to_vec(x))); },
        py::arg("mix"), py::arg("sched"), py::arg("t"), py::arg("x"));
  m.def("log_density",
        [](const GaussianPairMixture& mix, const NoiseSchedule& sched, double t,
           const py::array_t<double>& x) { return log_density(mix, sched, t, to_vec(x)); },
        py::arg("mix"), py::arg("sched"), py::arg("t"), py::arg("x"));
  m.def("marginal_params",
        [](const GaussianPairMixture& mix, const NoiseSchedule& sched, double t) {
          const auto p = marginal_params(mix, sched, t);
          return py::make_tuple(p.mean, p.var);
        },
        py::arg("mix"), py::arg("sched"), py::arg("t"));
  m.def("sample_pair",
        [](const GaussianPairMixture& mix, Rng& rng) {
          auto [s, y] = sample_pair(mix, rng);
          return py::make_tuple(to_array(s), to_array(y));
        },
        py::arg("mix"), py::arg("rng"));
  m.def("mmse_predict",
        [](const GaussianPairMixture& mix, const py::array_t<double>& y) {
          return to_array(mmse_predict(mix, to_vec(y)));
        },
        py::arg("mix"), py::arg("y"));

  py::class_<TimeGrid>(m, "TimeGrid")
      .def_readonly("points", &TimeGrid::points);
  m.def("uniform_grid", &uniform_grid, py::arg("steps"));

  py::class_<SamplerConfig>(m, "SamplerConfig")
      .def(py::init([](double kappa, int steps, bool post_process, std::uint64_t seed) {
             SamplerConfig cfg;
             cfg.kappa = kappa;
             cfg.steps = steps;
             cfg.grid = uniform_grid(steps);
             cfg.post_process = post_process;
             cfg.seed = seed;
             return cfg;
           }),
           py::arg("kappa") = 0.0, py::arg("steps") = 15,
           py::arg("post_process") = false, py::arg("seed") = 0)
      .def_readonly("kappa", &SamplerConfig::kappa)
      .def_readonly("steps", &SamplerConfig::steps)
      .def_readonly("post_process", &SamplerConfig::post_process)
      .def_readonly("seed", &SamplerConfig::seed);

  py::class_<Predictor, std::shared_ptr<Predictor>>(m, "Predictor")
      .def("predict",
           [](const Predictor& p, const py::array_t<double>& y) {
             return to_array(p.predict(to_vec(y)));
           },
           py::arg("y"));
  py::class_<IdentityPredictor, Predictor, std::shared_ptr<IdentityPredictor>>(
      m, "IdentityPredictor")
      .def(py::init<>());
  py::class_<MmsePredictor, Predictor, std::shared_ptr<MmsePredictor>>(m, "MmsePredictor")
      .def(py::init<GaussianPairMixture>(), py::arg("mix"));
  py::class_<PerturbedPredictor, Predictor, std::shared_ptr<PerturbedPredictor>>(
      m, "PerturbedPredictor")
      .def(py::init<std::shared_ptr<const Predictor>, double, std::vector<double>>(),
           py::arg("inner"), py::arg("alpha") = 1.0,
           py::arg("beta") = std::vector<double>{});

  py::class_<Denoiser, std::shared_ptr<Denoiser>>(m, "Denoiser")
      .def("dim", &Denoiser::dim)
      .def("eval",
           [](const Denoiser& d, double t, const py::array_t<double>& x) {
             auto xv = to_vec(x);
             std::vector<double> out(xv.size());
             d.eval(t, xv, out);
             return to_array(out);
           },
           py::arg("t"), py::arg("x"));
  py::class_<ZeroDenoiser, Denoiser, std::shared_ptr<ZeroDenoiser>>(m, "ZeroDenoiser")
      .def(py::init<>());
  py::class_<OracleEtaDenoiser, Denoiser, std::shared_ptr<OracleEtaDenoiser>>(
      m, "OracleEtaDenoiser")
      .def(py::init<GaussianPairMixture, NoiseSchedule>(), py::arg("mix"), py::arg("sched"));
  py::class_<TrainedDenoiser, Denoiser, std::shared_ptr<TrainedDenoiser>>(
      m, "TrainedDenoiser")
      .def_static("load", [](const std::string& path) {
        auto loaded = load_mlp(path);
        return std::make_shared<TrainedDenoiser>(std::move(loaded.net), loaded.sched);
      });

  m.def("sips_sample",
        [](const py::array_t<double>& y, const Predictor& predictor,
           const Denoiser& denoiser, const NoiseSchedule& sched,
           const SamplerConfig& cfg, Rng& rng, const py::object& context) {
          std::vector<double> ctx;
          if (!context.is_none())
            ctx = to_vec(context.cast<py::array_t<double>>());
          return to_array(sips_sample(to_vec(y), predictor, denoiser, sched, cfg,
                                      rng, ctx));
        },
        py::arg("y"), py::arg("predictor"), py::arg("denoiser"), py::arg("sched"),
        py::arg("cfg"), py::arg("rng"), py::arg("context") = py::none());
  m.def("forward_sde_sample",
        [](const GaussianPairMixture& prior, const py::array_t<double>& y0,
           const NoiseSchedule& sched, const SamplerConfig& cfg, Rng& rng,
           double t_stop) {
          return to_array(forward_sde_sample(prior, to_vec(y0), sched, cfg, rng, t_stop));
        },
        py::arg("prior"), py::arg("y0"), py::arg("sched"), py::arg("cfg"),
        py::arg("rng"), py::arg("t_stop"));

  py::class_<MarginalReport>(m, "MarginalReport")
      .def_readonly("t_stop", &MarginalReport::t_stop)
      .def_readonly("kappa", &MarginalReport::kappa)
      .def_readonly("n_samples", &MarginalReport::n_samples)
      .def_readonly("steps", &MarginalReport::steps)
      .def_readonly("wasserstein1", &MarginalReport::wasserstein1)
      .def_readonly("energy_distance", &MarginalReport::energy_distance)
      .def_readonly("threshold", &MarginalReport::threshold)
      .def_readonly("passed", &MarginalReport::passed);
  m.def("marginal_check",
        [](const GaussianPairMixture& prior, const NoiseSchedule& sched,
           double kappa, double t_stop, std::int64_t n_samples, int steps,
           double threshold, Rng& rng) {
          return marginal_check(prior, sched, kappa, t_stop, n_samples, steps,
                                threshold, rng);
        },
        py::arg("prior"), py::arg("sched"), py::arg("kappa"), py::arg("t_stop"),
        py::arg("n_samples"), py::arg("steps"), py::arg("threshold"), py::arg("rng"));

  m.def("wasserstein_1d",
        [](const py::array_t<double>& a, const py::array_t<double>& b) {
          return wasserstein_1d(to_vec(a), to_vec(b));
        },
        py::arg("a"), py::arg("b"));
  m.def("energy_distance",
        [](const py::array_t<double>& a, const py::array_t<double>& b) {
          return energy_distance(std::span<const double>(to_vec(a)),
                                 std::span<const double>(to_vec(b)));
        },
        py::arg("a"), py::arg("b"));

  m.def("stft",
        [](const py::array_t<double>& samples) { return spec_to_array(stft(to_vec(samples))); },
        py::arg("samples"));
  m.def("istft",
        [](const py::array_t<std::complex<double>>& spec, std::int64_t length) {
          return to_array(istft(array_to_spec(spec), length));
        },
        py::arg("spec"), py::arg("length"));
  m.def("compress", [](std::complex<double> x) { return compress(x); }, py::arg("x"));
  m.def("decompress", [](std::complex<double> x) { return decompress(x); }, py::arg("x"));
  m.def("si_sdr",
        [](const py::array_t<double>& reference, const py::array_t<double>& estimate) {
          return si_sdr(to_vec(reference), to_vec(estimate));
        },
        py::arg("reference"), py::arg("estimate"));
  m.def("spectral_gate_predict",
        [](const py::array_t<double>& samples, int sample_rate, double floor_gain,
           double noise_percentile) {
          Waveform w;
          w.samples = to_vec(samples);
          w.sample_rate = sample_rate;
          return to_array(
              spectral_gate_predict(w, floor_gain, noise_percentile).samples);
        },
        py::arg("samples"), py::arg("sample_rate") = 16000,
        py::arg("floor_gain") = 0.05, py::arg("noise_percentile") = 50.0);
  m.def("read_wav", [](const std::string& path) {
    const auto w = read_wav(path);
    return py::make_tuple(to_array(w.samples), w.sample_rate);
  });
  m.def("write_wav", [](const std::string& path, const py::array_t<double>& samples,
                        int sample_rate) {
    Waveform w;
    w.samples = to_vec(samples);
    w.sample_rate = sample_rate;
    write_wav(path, w);
  }, py::arg("path"), py::arg("samples"), py::arg("sample_rate") = 16000);

  m.def("cli_run", &sips::cli::run, py::arg("args"),
        "Run a CLI subcommand in-process; returns the exit code");
}
