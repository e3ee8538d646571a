#include "binspp/baseline.hpp"

#include <algorithm>

#include "binspp/error.hpp"

namespace binspp {

namespace {
bool in_open_unit(double x) { return x > 0.0 && x < 1.0; }
}  // namespace

void BaselineConfig::validate() const {
  if (!(xi_h1 > 0.0)) throw Error(ErrorCode::InvalidConfig, "xi_h1 must be > 0");
  if (!(prior_ratio > 0.0)) throw Error(ErrorCode::InvalidConfig, "prior_ratio must be > 0");
  if (!in_open_unit(psd_smoothing) || !in_open_unit(spp_time_smoothing))
    throw Error(ErrorCode::InvalidConfig, "smoothing constants must lie in (0, 1)");
  if (!(stuck_guard > 0.0 && stuck_guard <= 1.0))
    throw Error(ErrorCode::InvalidConfig, "stuck_guard must lie in (0, 1]");
  if (init_frames < 1) throw Error(ErrorCode::InvalidConfig, "init_frames must be >= 1");
}

BaselineResult unbiased_mmse_spp(const PowerSpectrogram& noisy_power, const BaselineConfig& cfg) {
  cfg.validate();
  const std::size_t bins = noisy_power.bins(), frames = noisy_power.frames();
  if (frames == 0) throw Error(ErrorCode::TooShort, "no frames");

  BaselineResult r;
  r.spp.values = RealMatrix(bins, frames);
  r.noise_psd.role = PowerRole::SmoothedNoise;
  r.noise_psd.values = RealMatrix(bins, frames);

  const std::size_t init = std::min(cfg.init_frames, frames);
  const double a = cfg.psd_smoothing;
  const double b = cfg.spp_time_smoothing;
  for (std::size_t k = 0; k < bins; ++k) {
    const auto y = noisy_power.values.row(k);
    double phi = 0.0;
    for (std::size_t l = 0; l < init; ++l) phi += y[l];
    phi = std::max(phi / static_cast<double>(init), 1e-12);
    double smoothed = 0.5;
    for (std::size_t l = 0; l < frames; ++l) {
      double p = posterior_spp(y[l] / phi, cfg.prior_ratio, cfg.xi_h1);
      smoothed = b * smoothed + (1.0 - b) * p;
      if (smoothed > cfg.stuck_guard) p = std::min(p, cfg.stuck_guard);
      phi = a * phi + (1.0 - a) * ((1.0 - p) * y[l] + p * phi);
      r.spp.values(k, l) = p;
      r.noise_psd.values(k, l) = phi;
    }
  }
  return r;
}

}  // namespace binspp
