#include "binspp/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "binspp/error.hpp"

namespace binspp {

std::vector<double> hann_window(std::size_t n) {
  if (n < 2 || n % 2 != 0)
    throw Error(ErrorCode::InvalidLength, "Hann window length must be even and >= 2, got " +
                                              std::to_string(n));
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                 static_cast<double>(n)));
  // Exact values at the symmetry points.
  w[0] = 0.0;
  w[n / 2] = 1.0;
  return w;
}

std::size_t frame_count(std::size_t num_samples, std::size_t frame_len, std::size_t hop) {
  if (num_samples < frame_len) return 0;
  return 1 + (num_samples - frame_len) / hop;
}

ComplexSpectrogram stft(std::span<const double> samples, std::size_t frame_len, std::size_t hop) {
  if (hop == 0) throw Error(ErrorCode::InvalidLength, "hop must be positive");
  const auto window = hann_window(frame_len);
  if (samples.size() < frame_len)
    throw Error(ErrorCode::TooShort, std::to_string(samples.size()) + " samples < frame length " +
                                         std::to_string(frame_len));
  const std::size_t bins = frame_len / 2 + 1;
  const std::size_t frames = frame_count(samples.size(), frame_len, hop);

  // Twiddle table indexed by (k * i) mod N keeps the direct DFT exact to
  // rounding without an FFT.
  std::vector<std::complex<double>> twiddle(frame_len);
  for (std::size_t j = 0; j < frame_len; ++j) {
    const double a = -2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(frame_len);
    twiddle[j] = {std::cos(a), std::sin(a)};
  }

  ComplexSpectrogram out;
  out.frame_len = frame_len;
  out.hop = hop;
  out.values = Matrix<std::complex<double>>(bins, frames);
  std::vector<double> frame(frame_len);
  for (std::size_t t = 0; t < frames; ++t) {
    const std::size_t start = t * hop;
    for (std::size_t i = 0; i < frame_len; ++i) frame[i] = samples[start + i] * window[i];
    for (std::size_t k = 0; k < bins; ++k) {
      double re = 0.0, im = 0.0;
      std::size_t idx = 0;
      for (std::size_t i = 0; i < frame_len; ++i) {
        re += frame[i] * twiddle[idx].real();
        im += frame[i] * twiddle[idx].imag();
        idx += k;
        if (idx >= frame_len) idx -= frame_len;
      }
      out.values(k, t) = {re, im};
    }
  }
  return out;
}

PowerSpectrogram power_spec(const ComplexSpectrogram& s, PowerRole role) {
  PowerSpectrogram p;
  p.role = role;
  p.values = RealMatrix(s.bins(), s.frames());
  const auto& src = s.values.data();
  auto& dst = p.values.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = std::norm(src[i]);
  return p;
}

FeatureMatrix log_power(const PowerSpectrogram& p, double eps_floor) {
  FeatureMatrix f;
  f.values = RealMatrix(p.bins(), p.frames());
  const auto& src = p.values.data();
  auto& dst = f.values.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = std::log(std::max(src[i], eps_floor));
  return f;
}

NormStats compute_norm_stats(std::span<const FeatureMatrix> features) {
  if (features.empty()) throw Error(ErrorCode::EmptyInput, "no feature matrices");
  const std::size_t bins = features.front().bins();
  for (const auto& f : features)
    if (f.bins() != bins)
      throw Error(ErrorCode::BinCountMismatch,
                  std::to_string(f.bins()) + " vs " + std::to_string(bins) + " bins");

  NormStats s;
  s.mean.assign(bins, 0.0);
  s.std.assign(bins, kStdFloor);
  for (std::size_t k = 0; k < bins; ++k) {
    std::size_t count = 0;
    double sum = 0.0;
    for (const auto& f : features) {
      for (double x : f.values.row(k)) sum += x;
      count += f.frames();
    }
    if (count == 0) continue;
    const double mean = sum / static_cast<double>(count);
    // Two-pass variance.
    double ss = 0.0;
    for (const auto& f : features)
      for (double x : f.values.row(k)) ss += (x - mean) * (x - mean);
    s.mean[k] = mean;
    s.std[k] = std::max(std::sqrt(ss / static_cast<double>(count)), kStdFloor);
  }
  return s;
}

namespace {

void check_bins(const FeatureMatrix& f, const NormStats& s) {
  if (f.bins() != s.mean.size() || f.bins() != s.std.size())
    throw Error(ErrorCode::BinCountMismatch, "features have " + std::to_string(f.bins()) +
                                                 " bins, stats have " +
                                                 std::to_string(s.mean.size()));
}

}  // namespace

FeatureMatrix normalize(const FeatureMatrix& f, const NormStats& s) {
  check_bins(f, s);
  FeatureMatrix out = f;
  for (std::size_t k = 0; k < f.bins(); ++k)
    for (double& x : out.values.row(k)) x = (x - s.mean[k]) / s.std[k];
  return out;
}

FeatureMatrix denormalize(const FeatureMatrix& f, const NormStats& s) {
  check_bins(f, s);
  FeatureMatrix out = f;
  for (std::size_t k = 0; k < f.bins(); ++k)
    for (double& x : out.values.row(k)) x = x * s.std[k] + s.mean[k];
  return out;
}

FeatureMatrix log_power_features(const Utterance& u) {
  return log_power(power_spec(stft(u)));
}

}  // namespace binspp
