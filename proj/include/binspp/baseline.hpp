#pragma once

#include "binspp/spectral.hpp"
#include "binspp/spp_target.hpp"

namespace binspp {

/// Constants of the fixed-prior (unbiased MMSE) SPP estimator.
struct BaselineConfig {
  double xi_h1 = kDefaultXiH1;
  double prior_ratio = 1.0;
  double psd_smoothing = 0.8;
  double spp_time_smoothing = 0.9;
  /// Cap applied to the SPP once its smoothed value exceeds this level.
  /// 1.0 disables the guard.
  double stuck_guard = 0.99;
  std::size_t init_frames = 5;

  void validate() const;
};

struct BaselineResult {
  SppMatrix spp;
  PowerSpectrogram noise_psd;  // tracked estimate after each frame's update
};

/// Blind SPP with SPP-driven noise PSD tracking. Per bin and frame: posterior
/// SPP from the current noise estimate, stagnation guard, then
///   phi_D <- a phi_D + (1 - a) ((1 - P) |Y|^2 + P phi_D).
/// The noise estimate starts at the mean of the first `init_frames` frames.
BaselineResult unbiased_mmse_spp(const PowerSpectrogram& noisy_power,
                                 const BaselineConfig& cfg = {});

}  // namespace binspp
