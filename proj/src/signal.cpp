#include "sips/signal.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "sips/text.hpp"

namespace sips {

namespace {

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

void check_params(const StftParams& p) {
  if (!is_pow2(p.fft_size))
    throw std::invalid_argument("stft: fft_size must be a power of two");
  if (p.hop <= 0 || p.hop > p.fft_size)
    throw std::invalid_argument("stft: hop must lie in [1, fft_size]");
  if (!(p.b > 0.0) || !(p.p > 0.0 && p.p <= 1.0))
    throw std::invalid_argument("stft: need b > 0 and p in (0,1]");
}

std::vector<double> hann_window(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
  return w;
}

// Roots of unity exp(-2*pi*i*j/n) for j < n/2, computed directly so no error
// accumulates across butterfly stages.
std::vector<std::complex<double>> twiddle_table(int n) {
  std::vector<std::complex<double>> w(n / 2);
  for (int j = 0; j < n / 2; ++j) {
    const double ang = -2.0 * std::numbers::pi * j / n;
    w[j] = {std::cos(ang), std::sin(ang)};
  }
  return w;
}

void fft_inplace(std::vector<std::complex<double>>& a,
                 const std::vector<std::complex<double>>& table, bool inverse) {
  const int n = static_cast<int>(a.size());
  for (int i = 1, j = 0; i < n; ++i) {
    int bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (int len = 2; len <= n; len <<= 1) {
    const int stride = n / len;
    for (int i = 0; i < n; i += len) {
      for (int j = 0; j < len / 2; ++j) {
        std::complex<double> w = table[static_cast<std::size_t>(j) * stride];
        if (inverse) w = std::conj(w);
        const auto u = a[i + j];
        const auto v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
      }
    }
  }
  if (inverse) {
    const double inv = 1.0 / n;
    for (auto& v : a) v *= inv;
  }
}

// Reflected (edge-excluded) sample lookup for centered framing.
double sample_reflected(std::span<const double> x, long long i) {
  const long long n = static_cast<long long>(x.size());
  if (n == 1) return x[0];
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
  }
  return x[static_cast<std::size_t>(i)];
}

double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  if (v.size() == 1) return v[0];
  const double pos = q / 100.0 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] * (1.0 - frac) + v[hi] * frac;
}

}  // namespace

ComplexSpec stft(std::span<const double> samples, const StftParams& params) {
  check_params(params);
  if (samples.empty()) throw std::invalid_argument("stft: empty input");
  const int N = params.fft_size;
  const int pad = N / 2;
  const long long L = static_cast<long long>(samples.size());
  const int K = static_cast<int>(L / params.hop) + 1;
  const auto window = hann_window(N);
  const auto table = twiddle_table(N);

  ComplexSpec spec;
  spec.freqs = params.freqs();
  spec.frames = K;
  spec.data.resize(static_cast<std::size_t>(spec.freqs) * K);

  std::vector<std::complex<double>> buf(N);
  for (int k = 0; k < K; ++k) {
    const long long start = static_cast<long long>(k) * params.hop - pad;
    for (int n = 0; n < N; ++n)
      buf[n] = window[n] * sample_reflected(samples, start + n);
    fft_inplace(buf, table, false);
    for (int f = 0; f < spec.freqs; ++f) spec.at(f, k) = buf[f];
  }
  return spec;
}

std::vector<double> istft(const ComplexSpec& spec, std::int64_t length,
                          const StftParams& params) {
  check_params(params);
  const int N = params.fft_size;
  const int pad = N / 2;
  if (spec.freqs != params.freqs() || spec.frames < 1)
    throw std::invalid_argument("istft: spectrogram shape inconsistent with parameters");
  if (length < 1) throw std::invalid_argument("istft: length must be positive");
  const long long covered =
      static_cast<long long>(spec.frames - 1) * params.hop + N;
  if (length + pad > covered)
    throw std::invalid_argument("istft: too few frames for the requested length");

  const auto window = hann_window(N);
  const auto table = twiddle_table(N);
  std::vector<double> acc(static_cast<std::size_t>(length) + 2 * pad, 0.0);
  std::vector<double> wsum(acc.size(), 0.0);

  std::vector<std::complex<double>> buf(N);
  for (int k = 0; k < spec.frames; ++k) {
    for (int f = 0; f < spec.freqs; ++f) buf[f] = spec.at(f, k);
    for (int f = 1; f < N / 2; ++f) buf[N - f] = std::conj(spec.at(f, k));
    fft_inplace(buf, table, true);
    const long long start = static_cast<long long>(k) * params.hop;
    for (int n = 0; n < N; ++n) {
      const long long idx = start + n;
      if (idx >= static_cast<long long>(acc.size())) break;
      acc[idx] += window[n] * buf[n].real();
      wsum[idx] += window[n] * window[n];
    }
  }

  std::vector<double> out(static_cast<std::size_t>(length));
  for (std::int64_t i = 0; i < length; ++i) {
    const double den = wsum[static_cast<std::size_t>(i) + pad];
    out[i] = den > 1e-12 ? acc[static_cast<std::size_t>(i) + pad] / den : 0.0;
  }
  return out;
}

std::complex<double> compress(std::complex<double> x, const StftParams& params) {
  const double m = std::abs(x);
  if (m == 0.0) return {0.0, 0.0};
  return x * (params.b * std::pow(m, params.p) / m);
}

std::complex<double> decompress(std::complex<double> x, const StftParams& params) {
  const double m = std::abs(x);
  if (m == 0.0) return {0.0, 0.0};
  return x * (std::pow(m / params.b, 1.0 / params.p) / m);
}

ComplexSpec compress_spec(ComplexSpec spec, const StftParams& params) {
  for (auto& v : spec.data) v = compress(v, params);
  return spec;
}

ComplexSpec decompress_spec(ComplexSpec spec, const StftParams& params) {
  for (auto& v : spec.data) v = decompress(v, params);
  return spec;
}

Spectrogram pack_channels(const ComplexSpec& spec) {
  Spectrogram out;
  out.freqs = spec.freqs;
  out.frames = spec.frames;
  const std::size_t plane = static_cast<std::size_t>(spec.freqs) * spec.frames;
  out.data.resize(2 * plane);
  for (int f = 0; f < spec.freqs; ++f) {
    for (int k = 0; k < spec.frames; ++k) {
      const std::size_t idx = static_cast<std::size_t>(f) * spec.frames + k;
      out.data[idx] = spec.at(f, k).real();
      out.data[plane + idx] = spec.at(f, k).imag();
    }
  }
  return out;
}

ComplexSpec unpack_channels(const Spectrogram& spec) {
  ComplexSpec out;
  out.freqs = spec.freqs;
  out.frames = spec.frames;
  const std::size_t plane = static_cast<std::size_t>(spec.freqs) * spec.frames;
  if (spec.data.size() != 2 * plane)
    throw std::invalid_argument("unpack_channels: data size does not match shape");
  out.data.resize(plane);
  for (int f = 0; f < out.freqs; ++f) {
    for (int k = 0; k < out.frames; ++k) {
      const std::size_t idx = static_cast<std::size_t>(f) * out.frames + k;
      out.at(f, k) = {spec.data[idx], spec.data[plane + idx]};
    }
  }
  return out;
}

std::string spectrogram_to_json(const Spectrogram& spec) {
  std::string out = "{\"shape\": [2, " + std::to_string(spec.freqs) + ", " +
                    std::to_string(spec.frames) + "], \"data\": [";
  for (std::size_t i = 0; i < spec.data.size(); ++i) {
    if (i) out += ", ";
    out += fmt_g17(spec.data[i]);
  }
  out += "]}";
  return out;
}

void apply_spectral_gate(ComplexSpec& spec, double floor_gain,
                         double noise_percentile) {
  if (!(floor_gain >= 0.0 && floor_gain <= 1.0))
    throw std::invalid_argument("apply_spectral_gate: floor must lie in [0,1]");
  if (!(noise_percentile >= 0.0 && noise_percentile <= 100.0))
    throw std::invalid_argument("apply_spectral_gate: percentile must lie in [0,100]");
  std::vector<double> mags(spec.frames);
  for (int f = 0; f < spec.freqs; ++f) {
    for (int k = 0; k < spec.frames; ++k) mags[k] = std::abs(spec.at(f, k));
    const double floor_f = percentile(mags, noise_percentile);
    for (int k = 0; k < spec.frames; ++k) {
      const double m = std::abs(spec.at(f, k));
      const double gain = m > 0.0 ? std::max(floor_gain, 1.0 - floor_f / m) : floor_gain;
      spec.at(f, k) *= std::min(gain, 1.0);
    }
  }
}

Waveform spectral_gate_predict(const Waveform& y, double floor_gain,
                               double noise_percentile,
                               const StftParams& params) {
  const bool all_zero =
      std::all_of(y.samples.begin(), y.samples.end(), [](double v) { return v == 0.0; });
  if (y.samples.empty() || all_zero) return y;

  ComplexSpec spec = stft(y.samples, params);
  apply_spectral_gate(spec, floor_gain, noise_percentile);
  Waveform out;
  out.sample_rate = y.sample_rate;
  out.samples = istft(spec, static_cast<std::int64_t>(y.samples.size()), params);
  return out;
}

double si_sdr(std::span<const double> reference, std::span<const double> estimate) {
  if (reference.size() != estimate.size() || reference.empty())
    throw std::invalid_argument("si_sdr: inputs must be nonempty and of equal length");
  double rr = 0.0, er = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    rr += reference[i] * reference[i];
    er += estimate[i] * reference[i];
  }
  if (rr == 0.0) throw std::invalid_argument("si_sdr: zero reference");
  const double alpha = er / rr;
  const double num = alpha * alpha * rr;
  double den = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double r = estimate[i] - alpha * reference[i];
    den += r * r;
  }
  constexpr double kCap = 300.0;
  if (den == 0.0 || num / den > 1e30) return kCap;
  return std::min(kCap, 10.0 * std::log10(num / den));
}

namespace {

std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint16_t read_u16(std::istream& in) {
  unsigned char b[2];
  in.read(reinterpret_cast<char*>(b), 2);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

void write_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff),
                     static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

void write_u16(std::ostream& out, std::uint16_t v) {
  const char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
  out.write(b, 2);
}

}  // namespace

Waveform read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_wav: cannot open " + path);
  char tag[5] = {0};
  in.read(tag, 4);
  if (std::strncmp(tag, "RIFF", 4) != 0)
    throw std::runtime_error("read_wav: not a RIFF file: " + path);
  read_u32(in);
  in.read(tag, 4);
  if (std::strncmp(tag, "WAVE", 4) != 0)
    throw std::runtime_error("read_wav: not a WAVE file: " + path);

  Waveform w;
  bool have_fmt = false;
  while (in.read(tag, 4)) {
    const std::uint32_t size = read_u32(in);
    if (std::strncmp(tag, "fmt ", 4) == 0) {
      const std::uint16_t format = read_u16(in);
      const std::uint16_t channels = read_u16(in);
      const std::uint32_t rate = read_u32(in);
      read_u32(in);  // byte rate
      read_u16(in);  // block align
      const std::uint16_t bits = read_u16(in);
      if (format != 1 || bits != 16)
        throw std::runtime_error("read_wav: only 16-bit PCM is supported: " + path);
      if (channels != 1)
        throw std::runtime_error("read_wav: only mono is supported: " + path);
      w.sample_rate = static_cast<int>(rate);
      if (size > 16) in.ignore(size - 16);
      have_fmt = true;
    } else if (std::strncmp(tag, "data", 4) == 0) {
      if (!have_fmt)
        throw std::runtime_error("read_wav: data chunk before fmt: " + path);
      const std::size_t n = size / 2;
      w.samples.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        const std::uint16_t raw = read_u16(in);
        const auto s = static_cast<std::int16_t>(raw);
        w.samples[i] = static_cast<double>(s) / 32768.0;
      }
      return w;
    } else {
      in.ignore(size + (size & 1));
    }
  }
  throw std::runtime_error("read_wav: no data chunk in " + path);
}

void write_wav(const std::string& path, const Waveform& w) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_wav: cannot open " + path);
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(w.samples.size() * 2);
  out.write("RIFF", 4);
  write_u32(out, 36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  write_u32(out, 16);
  write_u16(out, 1);  // PCM
  write_u16(out, 1);  // mono
  write_u32(out, static_cast<std::uint32_t>(w.sample_rate));
  write_u32(out, static_cast<std::uint32_t>(w.sample_rate) * 2);
  write_u16(out, 2);
  write_u16(out, 16);
  out.write("data", 4);
  write_u32(out, data_bytes);
  for (double v : w.samples) {
    const double clipped = std::clamp(v, -1.0, 1.0);
    auto q = static_cast<long>(std::lrint(clipped * 32768.0));
    q = std::clamp(q, -32768L, 32767L);
    write_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
  }
}

}  // namespace sips
