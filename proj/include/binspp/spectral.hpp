#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "binspp/audio_io.hpp"
#include "binspp/matrix.hpp"

namespace binspp {

inline constexpr std::size_t kFrameLen = 256;  // 16 ms at 16 kHz
inline constexpr std::size_t kHop = 128;       // 8 ms
inline constexpr std::size_t kNumBins = kFrameLen / 2 + 1;
inline constexpr double kLogFloor = 1e-10;
inline constexpr double kStdFloor = 1e-8;

/// K x L complex STFT coefficients (rows = bins, cols = frames).
struct ComplexSpectrogram {
  Matrix<std::complex<double>> values;
  std::size_t frame_len = kFrameLen;
  std::size_t hop = kHop;

  std::size_t bins() const { return values.rows(); }
  std::size_t frames() const { return values.cols(); }
};

enum class PowerRole { Noisy, Clean, Noise, SmoothedNoise };

struct PowerSpectrogram {
  RealMatrix values;
  PowerRole role = PowerRole::Noisy;

  std::size_t bins() const { return values.rows(); }
  std::size_t frames() const { return values.cols(); }
};

/// Log-power features, natural log (nepers).
struct FeatureMatrix {
  RealMatrix values;

  std::size_t bins() const { return values.rows(); }
  std::size_t frames() const { return values.cols(); }
};

struct NormStats {
  std::vector<double> mean;
  std::vector<double> std;

  friend bool operator==(const NormStats&, const NormStats&) = default;
};

/// Periodic Hann window, w[i] = 0.5 (1 - cos(2 pi i / n)). n must be even and >= 2.
std::vector<double> hann_window(std::size_t n);

/// Number of full frames; trailing partial frames are dropped.
std::size_t frame_count(std::size_t num_samples, std::size_t frame_len = kFrameLen,
                        std::size_t hop = kHop);

/// Windowed one-sided DFT of every full frame; no padding.
ComplexSpectrogram stft(std::span<const double> samples, std::size_t frame_len = kFrameLen,
                        std::size_t hop = kHop);
inline ComplexSpectrogram stft(const Utterance& u, std::size_t frame_len = kFrameLen,
                               std::size_t hop = kHop) {
  return stft(std::span<const double>(u.samples), frame_len, hop);
}

PowerSpectrogram power_spec(const ComplexSpectrogram& s, PowerRole role = PowerRole::Noisy);

FeatureMatrix log_power(const PowerSpectrogram& p, double eps_floor = kLogFloor);

/// Per-bin mean and population std pooled over every frame of every matrix.
NormStats compute_norm_stats(std::span<const FeatureMatrix> features);

FeatureMatrix normalize(const FeatureMatrix& f, const NormStats& s);
FeatureMatrix denormalize(const FeatureMatrix& f, const NormStats& s);

/// stft -> power_spec -> log_power, without normalization.
FeatureMatrix log_power_features(const Utterance& u);

}  // namespace binspp
