#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace binspp {

inline constexpr int kSampleRate = 16000;

struct Utterance {
  std::vector<double> samples;
  int sample_rate = kSampleRate;
  std::string id;
};

struct MixSpec {
  std::string clean_id;
  std::string noise_id;
  double snr_db = 0.0;
  std::uint64_t seed = 0;
  double gain = 1.0;
  double clean_scale = 1.0;
};

struct ManifestEntry {
  std::string clean;
  std::string noise;
  MixSpec mix;
  // Written by the mixer when the mixed signals are persisted; empty otherwise.
  std::string noisy;
  std::string scaled_noise;
};

enum class Split { Train, Test };

struct Manifest {
  std::vector<ManifestEntry> entries;
  Split split = Split::Train;
};

struct MixResult {
  Utterance noisy;
  /// Clean component as contained in `noisy` (peak scaling applied).
  Utterance clean;
  Utterance scaled_noise;
  double gain = 1.0;
  double clean_scale = 1.0;  // 1/peak when the mixture was renormalized
};

/// Reads a RIFF/WAVE file holding mono 16-bit PCM at 16 kHz.
/// Samples are scaled by 1/32768.
Utterance read_wav(const std::filesystem::path& path);

/// Writes mono 16-bit PCM; samples are rounded and saturated to the int16 range.
void write_wav(const std::filesystem::path& path, const Utterance& u);

double mean_power(const std::vector<double>& samples);

/// Mixes `clean` with `noise` so that the clean-to-noise power ratio is
/// `snr_db`. Noise longer than the clean signal is cropped at a seeded random
/// offset; shorter noise is tiled. If the mixture would clip, the noisy
/// signal, the scaled noise, the clean component and the gain are all
/// divided by the peak.
MixResult mix_at_snr(const Utterance& clean, const Utterance& noise, double snr_db,
                     std::uint64_t seed);

/// One entry per clean WAV (sorted by file name). The noise file and SNR are
/// drawn uniformly from a generator seeded with `seed`.
Manifest build_manifest(const std::filesystem::path& clean_dir,
                        const std::filesystem::path& noise_dir, double snr_min,
                        double snr_max, std::uint64_t seed);

std::string manifest_to_json(const Manifest& m);
Manifest manifest_from_json(const std::string& text);
void save_manifest(const std::filesystem::path& path, const Manifest& m);
Manifest load_manifest(const std::filesystem::path& path);

/// Re-creates the (noisy, clean, scaled noise) triple of an entry, either from the
/// persisted WAVs or by mixing clean and noise again.
MixResult realize_entry(const ManifestEntry& e);

}  // namespace binspp
