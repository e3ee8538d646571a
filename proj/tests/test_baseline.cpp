#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "binspp/baseline.hpp"
#include "binspp/error.hpp"
#include "binspp/random.hpp"
#include "binspp/synthetic.hpp"

using namespace binspp;

namespace {

PowerSpectrogram make_power(std::size_t bins, std::size_t frames, double fill = 0.0) {
  PowerSpectrogram p;
  p.values = RealMatrix(bins, frames, fill);
  return p;
}

// Periodogram of complex Gaussian noise with the given variance: exponential.
PowerSpectrogram exponential_power(std::size_t bins, std::size_t frames, double variance,
                                   std::uint64_t seed) {
  Rng rng(seed);
  auto p = make_power(bins, frames);
  for (double& v : p.values.data()) v = -variance * std::log(1.0 - uniform01(rng));
  return p;
}

}  // namespace

TEST_CASE("zero input gives the analytic floor") {
  const auto r = unbiased_mmse_spp(make_power(3, 10));
  for (double v : r.spp.values.data()) CHECK(std::abs(v - 0.029741743575987744) < 1e-12);
}

TEST_CASE("white noise keeps the SPP low") {
  // Under speech absence |Y|^2 / phi_D is unit exponential, so with the exact
  // noise PSD the mean posterior is the integral of exp(-x) P(x).
  double exact = 0.0;
  const double dx = 1e-4;
  for (double x = 0.5 * dx; x < 80.0; x += dx) exact += std::exp(-x) * posterior_spp(x, 1.0, kDefaultXiH1) * dx;
  CHECK(std::abs(exact - 0.10386135471234732) < 1e-6);

  Rng rng(5);
  double mc = 0.0;
  const int draws = 200000;
  for (int i = 0; i < draws; ++i) mc += posterior_spp(-std::log(1.0 - uniform01(rng)), 1.0, kDefaultXiH1);
  CHECK(std::abs(mc / draws - exact) < 0.003);

  // The tracked estimate adds the bias and jitter of the recursive PSD.
  const auto p = power_spec(stft(white_noise(30 * kSampleRate, 1.0, 42)));
  const auto r = unbiased_mmse_spp(p);
  double sum = 0.0;
  for (double v : r.spp.values.data()) sum += v;
  const double tracked = sum / double(r.spp.values.size());
  CHECK(tracked > exact);
  CHECK(tracked < 0.2);
}

TEST_CASE("power step is detected within two frames") {
  auto p = exponential_power(1, 200, 1.0, 7);
  for (std::size_t l = 100; l < 150; ++l) p.values(0, l) = 100.0;  // +20 dB, deterministic
  const auto r = unbiased_mmse_spp(p);
  CHECK(std::max(r.spp.values(0, 100), r.spp.values(0, 101)) > 0.9);
}

TEST_CASE("tracked noise PSD properties") {
  const auto p = exponential_power(4, 300, 2.0, 11);
  const auto r = unbiased_mmse_spp(p);
  for (std::size_t k = 0; k < 4; ++k) {
    // The initial estimate already averages the first five frames.
    double running_max = 0.0;
    for (std::size_t l = 0; l < 5; ++l) running_max = std::max(running_max, p.values(k, l));
    for (std::size_t l = 0; l < 300; ++l) {
      running_max = std::max(running_max, p.values(k, l));
      const double phi = r.noise_psd.values(k, l);
      CHECK(phi > 0.0);
      CHECK(phi <= running_max + 1e-12);
      CHECK(r.spp.values(k, l) > 0.0);
      CHECK(r.spp.values(k, l) < 1.0);
    }
  }
}

TEST_CASE("without the guard the estimate stagnates under constant speech") {
  auto p = make_power(1, 400, 1.0);
  for (std::size_t l = 5; l < 400; ++l) p.values(0, l) = 30.0;
  BaselineConfig off;
  off.stuck_guard = 1.0;
  const auto stuck = unbiased_mmse_spp(p, off);
  for (std::size_t l = 1; l < 400; ++l) {
    CHECK(stuck.noise_psd.values(0, l) >= stuck.noise_psd.values(0, l - 1));
    CHECK(stuck.noise_psd.values(0, l) <= 30.0);
  }
  CHECK(stuck.noise_psd.values(0, 399) < 1.01);

  const auto guarded = unbiased_mmse_spp(p);
  CHECK(guarded.noise_psd.values(0, 399) > 15.0);
}

TEST_CASE("baseline config validation") {
  BaselineConfig cfg;
  cfg.psd_smoothing = 1.0;
  CHECK_THROWS_AS(unbiased_mmse_spp(make_power(1, 4), cfg), Error);
  cfg = {};
  cfg.xi_h1 = -1.0;
  CHECK_THROWS_AS(unbiased_mmse_spp(make_power(1, 4), cfg), Error);
  CHECK_THROWS_AS(unbiased_mmse_spp(make_power(1, 0)), Error);
}
