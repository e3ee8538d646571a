#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "binspp/audio_io.hpp"
#include "binspp/error.hpp"
#include "binspp/random.hpp"
#include "binspp/synthetic.hpp"
#include "support/temp_dir.hpp"

using namespace binspp;
namespace fs = std::filesystem;

namespace {

Utterance constant_rms(std::size_t n, double rms, std::uint64_t seed) {
  // +-rms square-ish sequence: mean power exactly rms^2.
  Rng rng(seed);
  Utterance u;
  u.samples.resize(n);
  for (double& s : u.samples) s = (rng() & 1) ? rms : -rms;
  return u;
}

double snr_db(const Utterance& clean, const Utterance& noise) {
  return 10.0 * std::log10(mean_power(clean.samples) / mean_power(noise.samples));
}

void write_raw_wav(const fs::path& path, int channels, int rate, int bits) {
  std::ofstream f(path, std::ios::binary);
  auto u32 = [&](std::uint32_t v) { f.write(reinterpret_cast<const char*>(&v), 4); };
  auto u16 = [&](std::uint16_t v) { f.write(reinterpret_cast<const char*>(&v), 2); };
  const std::uint32_t data = 400;
  f.write("RIFF", 4);
  u32(36 + data);
  f.write("WAVEfmt ", 8);
  u32(16);
  u16(1);
  u16(static_cast<std::uint16_t>(channels));
  u32(static_cast<std::uint32_t>(rate));
  u32(static_cast<std::uint32_t>(rate * channels * bits / 8));
  u16(static_cast<std::uint16_t>(channels * bits / 8));
  u16(static_cast<std::uint16_t>(bits));
  f.write("data", 4);
  u32(data);
  for (std::uint32_t i = 0; i < data; ++i) f.put(0);
}

}  // namespace

TEST_CASE("WAV read/write") {
  binspp::testing::TempDir dir;
  SUBCASE("silence") {
    Utterance u;
    u.samples.assign(16000, 0.0);
    write_wav(dir / "zero.wav", u);
    const auto r = read_wav(dir / "zero.wav");
    CHECK(r.samples.size() == 16000);
    CHECK(r.sample_rate == 16000);
    CHECK(r.id == "zero");
    for (double s : r.samples) CHECK(s == 0.0);
  }
  SUBCASE("scaling") {
    Utterance u;
    u.samples = {0.5, -1.0, 32767.0 / 32768.0, -0.25};
    write_wav(dir / "s.wav", u);
    const auto r = read_wav(dir / "s.wav");
    CHECK(r.samples == u.samples);
  }
  SUBCASE("unsupported formats") {
    write_raw_wav(dir / "stereo.wav", 2, 44100, 16);
    CHECK_THROWS_AS(read_wav(dir / "stereo.wav"), Error);
    write_raw_wav(dir / "rate.wav", 1, 8000, 16);
    write_raw_wav(dir / "bits.wav", 1, 16000, 8);
    for (const char* name : {"stereo.wav", "rate.wav", "bits.wav"}) {
      try {
        read_wav(dir / name);
        FAIL("expected UnsupportedFormat");
      } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnsupportedFormat);
      }
    }
    write_raw_wav(dir / "ok.wav", 1, 16000, 16);
    CHECK(read_wav(dir / "ok.wav").samples.size() == 200);
  }
  SUBCASE("missing file") {
    try {
      read_wav(dir / "nope.wav");
      FAIL("expected NotFound");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NotFound);
    }
  }
}

TEST_CASE("mix_at_snr gain") {
  const auto clean = constant_rms(4000, 0.1, 1);
  const auto noise = constant_rms(4000, 0.1, 2);
  CHECK(mix_at_snr(clean, noise, 20.0, 0).gain == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(mix_at_snr(clean, noise, 0.0, 0).gain == doctest::Approx(1.0).epsilon(1e-14));

  Utterance silent;
  silent.samples.assign(100, 0.0);
  CHECK_THROWS_AS(mix_at_snr(silent, noise, 0.0, 0), Error);
  CHECK_THROWS_AS(mix_at_snr(clean, silent, 0.0, 0), Error);
}

TEST_CASE("mix_at_snr properties") {
  Rng rng(99);
  for (int trial = 0; trial < 30; ++trial) {
    const auto n_clean = 1000 + uniform_index(rng, 3000);
    const auto n_noise = 200 + uniform_index(rng, 6000);
    const Utterance clean = white_noise(n_clean, uniform(rng, 0.01, 0.3), rng());
    const Utterance noise = white_noise(n_noise, uniform(rng, 0.01, 0.5), rng());
    const double snr = uniform(rng, -5.0, 25.0);
    const auto seed = rng();
    const auto m = mix_at_snr(clean, noise, snr, seed);

    CHECK(m.noisy.samples.size() == n_clean);
    CHECK(std::abs(snr_db(m.clean, m.scaled_noise) - snr) < 1e-9);
    double peak = 0.0;
    for (std::size_t i = 0; i < n_clean; ++i) {
      // Linearity of the mix.
      CHECK(std::abs(m.noisy.samples[i] - m.scaled_noise.samples[i] - m.clean.samples[i]) < 1e-12);
      peak = std::max(peak, std::abs(m.noisy.samples[i]));
    }
    CHECK(peak <= 1.0);

    const auto again = mix_at_snr(clean, noise, snr, seed);
    CHECK(again.noisy.samples == m.noisy.samples);
    CHECK(again.gain == m.gain);
  }
}

TEST_CASE("mix_at_snr peak normalization keeps the SNR") {
  const auto clean = constant_rms(2000, 0.9, 3);
  const auto noise = constant_rms(2000, 0.9, 4);
  const auto m = mix_at_snr(clean, noise, -5.0, 1);
  double peak = 0.0;
  for (double s : m.noisy.samples) peak = std::max(peak, std::abs(s));
  CHECK(peak == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(snr_db(m.clean, m.scaled_noise) + 5.0) < 1e-9);
  for (std::size_t i = 0; i < 2000; ++i)
    CHECK(m.scaled_noise.samples[i] == doctest::Approx(m.gain * noise.samples[i]).epsilon(1e-12));
}

TEST_CASE("build_manifest") {
  binspp::testing::TempDir dir;
  fs::create_directories(dir / "clean");
  fs::create_directories(dir / "noise");
  fs::create_directories(dir / "empty");
  write_wav(dir / "clean" / "a.wav", white_noise(800, 0.1, 1));
  write_wav(dir / "clean" / "b.wav", white_noise(800, 0.1, 2));
  write_wav(dir / "noise" / "n.wav", white_noise(800, 0.1, 3));

  const auto m = build_manifest(dir / "clean", dir / "noise", -5.0, 25.0, 7);
  REQUIRE(m.entries.size() == 2);
  CHECK(m.entries[0].mix.noise_id == "n");
  CHECK(m.entries[1].mix.noise_id == "n");
  CHECK(m.entries[0].mix.clean_id == "a");
  CHECK(m.entries[0].mix.seed != m.entries[1].mix.seed);
  CHECK(manifest_to_json(m) == manifest_to_json(build_manifest(dir / "clean", dir / "noise", -5.0, 25.0, 7)));

  write_wav(dir / "noise" / "m.wav", white_noise(800, 0.1, 4));
  for (std::uint64_t seed = 0; seed < 20; ++seed)
    for (const auto& e : build_manifest(dir / "clean", dir / "noise", -5.0, 25.0, seed).entries) {
      CHECK(e.mix.snr_db >= -5.0);
      CHECK(e.mix.snr_db <= 25.0);
    }

  const auto parsed = manifest_from_json(manifest_to_json(m));
  REQUIRE(parsed.entries.size() == 2);
  CHECK(parsed.entries[1].clean == m.entries[1].clean);
  CHECK(parsed.entries[1].mix.snr_db == m.entries[1].mix.snr_db);
  CHECK(parsed.entries[1].mix.seed == m.entries[1].mix.seed);

  CHECK_THROWS_AS(build_manifest(dir / "empty", dir / "noise", -5.0, 25.0, 1), Error);
  CHECK_THROWS_AS(build_manifest(dir / "clean", dir / "empty", -5.0, 25.0, 1), Error);
  CHECK_THROWS_AS(manifest_from_json("{\"clean\": 1}"), Error);
}

TEST_CASE("realize_entry re-mixes deterministically") {
  binspp::testing::TempDir dir;
  fs::create_directories(dir / "clean");
  fs::create_directories(dir / "noise");
  write_wav(dir / "clean" / "a.wav", white_noise(3000, 0.1, 1));
  write_wav(dir / "noise" / "n.wav", white_noise(5000, 0.1, 3));
  const auto m = build_manifest(dir / "clean", dir / "noise", 0.0, 10.0, 3);
  const auto a = realize_entry(m.entries[0]);
  const auto b = realize_entry(m.entries[0]);
  CHECK(a.noisy.samples == b.noisy.samples);
  CHECK(std::abs(snr_db(a.clean, a.scaled_noise) - m.entries[0].mix.snr_db) < 1e-9);
}
