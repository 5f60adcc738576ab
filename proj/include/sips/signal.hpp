#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace sips {

struct Waveform {
  std::vector<double> samples;
  int sample_rate = 16000;
};

/// Analysis parameters of the time-frequency representation. The DFT is
/// unnormalized forward with a 1/N inverse; framing is centered with
/// reflected edges and synthesis uses squared-window overlap-add.
struct StftParams {
  int fft_size = 512;
  int hop = 128;
  double b = 0.15;  // compression scale
  double p = 0.5;   // compression exponent

  int freqs() const { return fft_size / 2 + 1; }
};

/// One-sided complex spectrogram, freqs x frames, frame-major storage.
struct ComplexSpec {
  int freqs = 0;
  int frames = 0;
  std::vector<std::complex<double>> data;  // data[k * freqs + f]

  std::complex<double>& at(int f, int k) { return data[static_cast<std::size_t>(k) * freqs + f]; }
  const std::complex<double>& at(int f, int k) const {
    return data[static_cast<std::size_t>(k) * freqs + f];
  }
};

/// Channel-stacked real tensor of shape 2 x F x K (real part, imaginary
/// part), row-major.
struct Spectrogram {
  int freqs = 0;
  int frames = 0;
  std::vector<double> data;  // data[ch*F*K + f*K + k]
};

ComplexSpec stft(std::span<const double> samples, const StftParams& params = {});
std::vector<double> istft(const ComplexSpec& spec, std::int64_t length,
                          const StftParams& params = {});

/// Amplitude compression b*|x|^p with the phase preserved; zero maps to zero.
std::complex<double> compress(std::complex<double> x, const StftParams& params = {});
/// Inverse map (m/b)^(1/p) with the phase preserved.
std::complex<double> decompress(std::complex<double> x, const StftParams& params = {});

ComplexSpec compress_spec(ComplexSpec spec, const StftParams& params = {});
ComplexSpec decompress_spec(ComplexSpec spec, const StftParams& params = {});

/// Lossless packing of the complex spectrogram into stacked real channels.
Spectrogram pack_channels(const ComplexSpec& spec);
ComplexSpec unpack_channels(const Spectrogram& spec);

/// JSON debug dump: {"shape": [2, F, K], "data": [...row-major...]}.
std::string spectrogram_to_json(const Spectrogram& spec);

/// In-place per-frequency noise gate on a complex spectrogram: the floor is
/// the given percentile (0..100) of frame magnitudes and the gain per bin is
/// max(floor_gain, 1 - floor_f/|X_fk|), clamped to 1.
void apply_spectral_gate(ComplexSpec& spec, double floor_gain,
                         double noise_percentile);

/// Gate applied in the STFT domain and resynthesized. All-zero input is
/// returned unchanged.
Waveform spectral_gate_predict(const Waveform& y, double floor_gain,
                               double noise_percentile,
                               const StftParams& params = {});

/// Scale-invariant signal-to-distortion ratio in dB, capped at +300.
double si_sdr(std::span<const double> reference, std::span<const double> estimate);

/// 16-bit signed PCM mono RIFF/WAVE. Samples are scaled by 1/32768 on read
/// and clipped to [-1, 1] on write.
Waveform read_wav(const std::string& path);
void write_wav(const std::string& path, const Waveform& w);

}  // namespace sips
