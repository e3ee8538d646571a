#include "binspp/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "binspp/error.hpp"
#include "binspp/random.hpp"
#include "binspp/spectral.hpp"

namespace binspp {

namespace {

/// 0/1 gate with raised-cosine edges; bursts alternate with gaps.
std::vector<double> burst_envelope(std::size_t samples, const SynthConfig& cfg, Rng& rng) {
  std::vector<double> env(samples, 0.0);
  const double fs = kSampleRate;
  const auto ramp = static_cast<std::size_t>(cfg.ramp_s * fs);
  std::size_t pos = static_cast<std::size_t>(uniform(rng, cfg.gap_min_s, cfg.gap_max_s) * fs);
  while (pos < samples) {
    const auto len = static_cast<std::size_t>(uniform(rng, cfg.burst_min_s, cfg.burst_max_s) * fs);
    for (std::size_t i = 0; i < len && pos + i < samples; ++i) {
      double g = 1.0;
      if (ramp > 0) {
        const std::size_t edge = std::min(i, len - 1 - i);
        if (edge < ramp)
          g = 0.5 * (1.0 - std::cos(std::numbers::pi * static_cast<double>(edge) /
                                    static_cast<double>(ramp)));
      }
      env[pos + i] = g;
    }
    pos += len + static_cast<std::size_t>(uniform(rng, cfg.gap_min_s, cfg.gap_max_s) * fs);
  }
  return env;
}

}  // namespace

Utterance tone_burst_speech(const SynthConfig& cfg, std::uint64_t seed,
                            std::vector<std::size_t>* tone_bins) {
  const auto samples = static_cast<std::size_t>(cfg.seconds * kSampleRate);
  if (samples < kFrameLen) throw Error(ErrorCode::TooShort, "synthetic utterance too short");
  if (cfg.tones_per_utterance < 1 || cfg.tones_per_utterance > kNumBins - 2)
    throw Error(ErrorCode::InvalidConfig, "tones_per_utterance out of range");

  Rng rng(seed);
  std::vector<std::size_t> candidates(kNumBins - 2);
  for (std::size_t i = 0; i < candidates.size(); ++i) candidates[i] = i + 1;
  for (std::size_t i = 0; i < cfg.tones_per_utterance; ++i)
    std::swap(candidates[i], candidates[i + uniform_index(rng, candidates.size() - i)]);
  std::vector<std::size_t> bins(candidates.begin(),
                                candidates.begin() + static_cast<std::ptrdiff_t>(cfg.tones_per_utterance));
  std::sort(bins.begin(), bins.end());

  Utterance u;
  u.id = "tones_" + std::to_string(seed);
  u.samples.assign(samples, 0.0);
  for (std::size_t bin : bins) {
    const double freq = static_cast<double>(bin) * kSampleRate / static_cast<double>(kFrameLen);
    const double phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    const auto env = burst_envelope(samples, cfg, rng);
    for (std::size_t i = 0; i < samples; ++i)
      u.samples[i] += cfg.tone_amplitude * env[i] *
                      std::cos(2.0 * std::numbers::pi * freq * static_cast<double>(i) / kSampleRate + phase);
  }
  if (tone_bins != nullptr) *tone_bins = bins;
  return u;
}

Utterance white_noise(std::size_t samples, double stddev, std::uint64_t seed) {
  Rng rng(seed);
  Utterance u;
  u.id = "white_" + std::to_string(seed);
  u.samples.resize(samples);
  for (double& s : u.samples) s = stddev * gaussian(rng);
  return u;
}

std::vector<SynthUtterance> synth_corpus(const SynthConfig& cfg) {
  std::vector<SynthUtterance> out;
  out.reserve(cfg.utterances);
  Rng rng(cfg.seed);
  const auto samples = static_cast<std::size_t>(cfg.seconds * kSampleRate);
  for (std::size_t i = 0; i < cfg.utterances; ++i) {
    SynthUtterance s;
    const std::uint64_t base = derive_seed(cfg.seed, i);
    const Utterance clean = tone_burst_speech(cfg, derive_seed(base, 1), &s.tone_bins);
    // A little longer than the clean signal so the mixer's crop path is used.
    const Utterance noise = white_noise(samples + kSampleRate / 2, 0.1, derive_seed(base, 2));
    s.spec.clean_id = clean.id;
    s.spec.noise_id = noise.id;
    s.spec.snr_db = uniform(rng, cfg.snr_min_db, cfg.snr_max_db);
    s.spec.seed = derive_seed(base, 3);
    s.mix = mix_at_snr(clean, noise, s.spec.snr_db, s.spec.seed);
    s.spec.gain = s.mix.gain;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace binspp
