#include "binspp/spp_target.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "binspp/error.hpp"

namespace binspp {

void TargetConfig::validate() const {
  if (!(prior_ratio > 0.0)) throw Error(ErrorCode::InvalidConfig, "prior_ratio must be > 0");
  if (!(xi_h1 > 0.0)) throw Error(ErrorCode::InvalidConfig, "xi_h1 must be > 0");
  if (!(noise_smoothing > 0.0 && noise_smoothing < 1.0))
    throw Error(ErrorCode::InvalidConfig, "noise_smoothing must lie in (0, 1)");
}

PowerSpectrogram smooth_noise_psd(const PowerSpectrogram& noise_power, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw Error(ErrorCode::InvalidConfig, "smoothing constant must lie in (0, 1)");
  PowerSpectrogram out = noise_power;
  out.role = PowerRole::SmoothedNoise;
  for (std::size_t k = 0; k < out.bins(); ++k) {
    auto row = out.values.row(k);
    for (std::size_t l = 1; l < row.size(); ++l)
      row[l] = alpha * row[l - 1] + (1.0 - alpha) * row[l];
  }
  return out;
}

double posterior_spp(double posterior_snr, double prior_ratio, double xi_h1) {
  const double glr_inv =
      prior_ratio * (1.0 + xi_h1) * std::exp(-posterior_snr * xi_h1 / (1.0 + xi_h1));
  return 1.0 / (1.0 + glr_inv);
}

SppMatrix oracle_spp(const PowerSpectrogram& noisy_power, const PowerSpectrogram& noise_psd,
                     const TargetConfig& cfg) {
  cfg.validate();
  if (!noisy_power.values.same_shape(noise_psd.values))
    throw Error(ErrorCode::ShapeMismatch, "noisy power and noise PSD shapes differ");
  SppMatrix out;
  out.values = RealMatrix(noisy_power.bins(), noisy_power.frames());
  const auto& y = noisy_power.values.data();
  const auto& d = noise_psd.values.data();
  auto& o = out.values.data();
  for (std::size_t i = 0; i < y.size(); ++i)
    o[i] = posterior_spp(y[i] / std::max(d[i], 1e-12), cfg.prior_ratio, cfg.xi_h1);
  return out;
}

LabelMatrix ground_truth_labels(const PowerSpectrogram& clean_power, double threshold_db) {
  const auto& p = clean_power.values.data();
  const double max_power = p.empty() ? 0.0 : *std::max_element(p.begin(), p.end());
  if (!(max_power > 0.0))
    throw Error(ErrorCode::AllSilent, "clean power has no positive entry");
  const double cut = 10.0 * std::log10(max_power) - threshold_db;

  LabelMatrix out;
  out.values = Matrix<std::uint8_t>(clean_power.bins(), clean_power.frames(), 0);
  auto& o = out.values.data();
  for (std::size_t i = 0; i < p.size(); ++i)
    o[i] = (p[i] > 0.0 && 10.0 * std::log10(p[i]) > cut) ? 1 : 0;
  return out;
}

}  // namespace binspp
