#pragma once

#include <cstdint>

#include "binspp/matrix.hpp"
#include "binspp/spectral.hpp"

namespace binspp {

/// 15 dB fixed a-priori SNR under speech presence.
inline const double kDefaultXiH1 = 31.622776601683793;

struct TargetConfig {
  double prior_ratio = 1.0;  // p(H0) / p(H1)
  double xi_h1 = kDefaultXiH1;
  double noise_smoothing = 0.8;

  void validate() const;
};

struct SppMatrix {
  RealMatrix values;  // K x L, entries in [0, 1]

  std::size_t bins() const { return values.rows(); }
  std::size_t frames() const { return values.cols(); }
};

struct LabelMatrix {
  Matrix<std::uint8_t> values;  // K x L, 1 = speech-dominated bin

  std::size_t bins() const { return values.rows(); }
  std::size_t frames() const { return values.cols(); }
};

/// First-order recursive smoothing along time, per bin, started at the first
/// periodogram value.
PowerSpectrogram smooth_noise_psd(const PowerSpectrogram& noise_power, double alpha);

/// A-posteriori speech presence probability under complex Gaussian models
/// with a fixed a-priori SNR, for a single bin. `posterior_snr` is |Y|^2/phi_D.
double posterior_spp(double posterior_snr, double prior_ratio, double xi_h1);

/// Elementwise posterior_spp with |Y|^2 / max(phi_D, 1e-12).
SppMatrix oracle_spp(const PowerSpectrogram& noisy_power, const PowerSpectrogram& noise_psd,
                     const TargetConfig& cfg = {});

/// A bin is speech iff its level exceeds (global max level - threshold_db).
LabelMatrix ground_truth_labels(const PowerSpectrogram& clean_power, double threshold_db = 60.0);

}  // namespace binspp
