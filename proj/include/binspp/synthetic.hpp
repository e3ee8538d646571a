#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "binspp/audio_io.hpp"

namespace binspp {

/// Tone-burst "speech" plus white noise, for desk-scale experiments and tests.
struct SynthConfig {
  std::size_t utterances = 20;
  double seconds = 10.0;
  std::size_t tones_per_utterance = 3;
  double tone_amplitude = 0.1;
  double burst_min_s = 0.15;
  double burst_max_s = 0.6;
  double gap_min_s = 0.2;
  double gap_max_s = 1.0;
  double ramp_s = 0.02;  // raised-cosine attack/release
  double snr_min_db = -5.0;
  double snr_max_db = 25.0;
  std::uint64_t seed = 1;
};

/// Sum of bin-centred tones (distinct bins in [1, K-2]) gated on and off by
/// independent random bursts.
Utterance tone_burst_speech(const SynthConfig& cfg, std::uint64_t seed,
                            std::vector<std::size_t>* tone_bins = nullptr);

/// Zero-mean Gaussian white noise with unit variance scaled by `stddev`.
Utterance white_noise(std::size_t samples, double stddev, std::uint64_t seed);

struct SynthUtterance {
  MixResult mix;
  MixSpec spec;
  std::vector<std::size_t> tone_bins;
};

/// `cfg.utterances` mixtures; each clean signal is mixed with its own noise
/// realization at an SNR drawn uniformly from [snr_min_db, snr_max_db].
std::vector<SynthUtterance> synth_corpus(const SynthConfig& cfg);

}  // namespace binspp
