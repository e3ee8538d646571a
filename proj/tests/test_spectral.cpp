#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "binspp/error.hpp"
#include "binspp/random.hpp"
#include "binspp/spectral.hpp"

using namespace binspp;

namespace {

std::vector<double> cosine(std::size_t samples, double freq, double phase = 0.0) {
  std::vector<double> x(samples);
  for (std::size_t i = 0; i < samples; ++i)
    x[i] = std::cos(2.0 * std::numbers::pi * freq * static_cast<double>(i) / kSampleRate + phase);
  return x;
}

}  // namespace

TEST_CASE("hann_window") {
  const auto w = hann_window(256);
  CHECK(w[0] == 0.0);
  CHECK(w[128] == 1.0);
  for (std::size_t i = 1; i < 128; ++i) CHECK(w[i] == doctest::Approx(w[256 - i]).epsilon(1e-15));

  const auto w4 = hann_window(4);
  CHECK(w4[0] == 0.0);
  CHECK(w4[1] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(w4[2] == 1.0);
  CHECK(w4[3] == doctest::Approx(0.5).epsilon(1e-15));

  CHECK_THROWS_AS(hann_window(0), Error);
  CHECK_THROWS_AS(hann_window(7), Error);
}

TEST_CASE("stft framing") {
  std::vector<double> x(16000, 0.0);
  const auto s = stft(x);
  CHECK(s.bins() == 129);
  CHECK(s.frames() == 1 + (16000 - 256) / 128);
  CHECK(s.frames() == 124);
  for (const auto& v : s.values.data()) CHECK(v == std::complex<double>(0.0, 0.0));

  CHECK(stft(std::vector<double>(256, 0.0)).frames() == 1);
  CHECK(stft(std::vector<double>(383, 0.0)).frames() == 1);
  CHECK(stft(std::vector<double>(384, 0.0)).frames() == 2);
  CHECK_THROWS_AS(stft(std::vector<double>(255, 0.0)), Error);
}

TEST_CASE("stft of a bin-centred cosine peaks at its bin") {
  // 1000 Hz = 16 cycles per 256-sample frame.
  const auto s = stft(cosine(16000, 1000.0, 0.3));
  for (std::size_t l = 0; l < s.frames(); ++l) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < s.bins(); ++k)
      if (std::abs(s.values(k, l)) > std::abs(s.values(best, l))) best = k;
    CHECK(best == 16);
  }
}

TEST_CASE("stft matches a naive DFT and obeys Parseval") {
  Rng rng(3);
  std::vector<double> x(1024);
  for (double& v : x) v = gaussian(rng);
  const auto s = stft(x);
  const auto w = hann_window(kFrameLen);
  for (std::size_t l = 0; l < s.frames(); ++l) {
    double energy = 0.0;
    std::vector<double> frame(kFrameLen);
    for (std::size_t i = 0; i < kFrameLen; ++i) {
      frame[i] = x[l * kHop + i] * w[i];
      energy += frame[i] * frame[i];
    }
    for (std::size_t k : {0u, 5u, 64u, 128u}) {
      std::complex<double> ref = 0.0;
      for (std::size_t i = 0; i < kFrameLen; ++i)
        ref += frame[i] * std::polar(1.0, -2.0 * std::numbers::pi * double(k * i) / kFrameLen);
      CHECK(std::abs(s.values(k, l) - ref) < 1e-10);
    }
    double spec = std::norm(s.values(0, l)) + std::norm(s.values(128, l));
    for (std::size_t k = 1; k < 128; ++k) spec += 2.0 * std::norm(s.values(k, l));
    spec /= kFrameLen;
    CHECK(std::abs(spec - energy) / energy < 1e-6);
  }
}

TEST_CASE("power_spec and log_power") {
  ComplexSpectrogram s;
  s.values = Matrix<std::complex<double>>(2, 2);
  s.values(0, 0) = {3.0, 4.0};
  s.values(0, 1) = {1.0, 0.0};
  s.values(1, 0) = {0.0, 0.0};
  s.values(1, 1) = {std::exp(1.0), 0.0};
  const auto p = power_spec(s);
  CHECK(p.values(0, 0) == 25.0);

  auto conj = s;
  for (auto& v : conj.values.data()) v = std::conj(v);
  CHECK(power_spec(conj).values == p.values);

  const auto f = log_power(p);
  CHECK(f.values(0, 1) == 0.0);
  CHECK(f.values(1, 0) == doctest::Approx(-23.025850929940457).epsilon(1e-14));
  CHECK(f.values(1, 1) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("compute_norm_stats") {
  FeatureMatrix a;
  a.values = RealMatrix(2, 3);
  for (std::size_t l = 0; l < 3; ++l) a.values(0, l) = 1.0;
  a.values(1, 0) = 0.0;
  a.values(1, 1) = 2.0;
  a.values(1, 2) = 1.0;
  FeatureMatrix b;
  b.values = RealMatrix(2, 1);
  b.values(0, 0) = 1.0;
  b.values(1, 0) = 1.0;
  const std::vector<FeatureMatrix> both = {a, b};
  const auto s = compute_norm_stats(both);
  CHECK(s.mean[0] == 1.0);
  CHECK(s.std[0] == kStdFloor);
  CHECK(s.mean[1] == 1.0);
  CHECK(s.std[1] == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));

  FeatureMatrix pair;
  pair.values = RealMatrix(1, 2);
  pair.values(0, 1) = 2.0;
  const std::vector<FeatureMatrix> one = {pair};
  const auto ps = compute_norm_stats(one);
  CHECK(ps.mean[0] == 1.0);
  CHECK(ps.std[0] == 1.0);

  CHECK_THROWS_AS(compute_norm_stats(std::vector<FeatureMatrix>{}), Error);
  FeatureMatrix other;
  other.values = RealMatrix(3, 1);
  const std::vector<FeatureMatrix> mixed = {a, other};
  CHECK_THROWS_AS(compute_norm_stats(mixed), Error);
}

TEST_CASE("normalize") {
  Rng rng(11);
  FeatureMatrix f;
  f.values = RealMatrix(4, 50);
  for (double& v : f.values.data()) v = uniform(rng, -30.0, 5.0);
  const std::vector<FeatureMatrix> set = {f};
  const auto s = compute_norm_stats(set);

  const auto n = normalize(f, s);
  const std::vector<FeatureMatrix> nset = {n};
  const auto ns = compute_norm_stats(nset);
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(std::abs(ns.mean[k]) < 1e-9);
    CHECK(std::abs(ns.std[k] - 1.0) < 1e-9);
  }
  const auto back = denormalize(n, s);
  for (std::size_t i = 0; i < f.values.size(); ++i)
    CHECK(std::abs(back.values.data()[i] - f.values.data()[i]) < 1e-12);

  NormStats identity{std::vector<double>(4, 0.0), std::vector<double>(4, 1.0)};
  CHECK(normalize(f, identity).values == f.values);

  FeatureMatrix c;
  c.values = RealMatrix(4, 3, s.mean[2]);
  const auto cn = normalize(c, s);
  for (double v : cn.values.row(2)) CHECK(v == 0.0);

  NormStats wrong{std::vector<double>(3, 0.0), std::vector<double>(3, 1.0)};
  CHECK_THROWS_AS(normalize(f, wrong), Error);
}

TEST_CASE("additive powers in expectation (Monte Carlo)") {
  // Two independent white signals: E|Y|^2 = E|X|^2 + E|D|^2 per bin.
  Rng rng(2718);
  const std::size_t trials = 1000;
  std::vector<double> py(kNumBins, 0.0), px(kNumBins, 0.0), pd(kNumBins, 0.0);
  std::vector<double> x(kFrameLen), d(kFrameLen), y(kFrameLen);
  for (std::size_t t = 0; t < trials; ++t) {
    for (std::size_t i = 0; i < kFrameLen; ++i) {
      x[i] = 0.5 * gaussian(rng);
      d[i] = 0.2 * gaussian(rng);
      y[i] = x[i] + d[i];
    }
    const auto sy = power_spec(stft(y)), sx = power_spec(stft(x)), sd = power_spec(stft(d));
    for (std::size_t k = 0; k < kNumBins; ++k) {
      py[k] += sy.values(k, 0);
      px[k] += sx.values(k, 0);
      pd[k] += sd.values(k, 0);
    }
  }
  for (std::size_t k = 0; k < kNumBins; ++k)
    CHECK(std::abs(py[k] - (px[k] + pd[k])) / (px[k] + pd[k]) < 0.05);
}
