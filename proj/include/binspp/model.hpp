#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "binspp/audio_io.hpp"
#include "binspp/gru.hpp"
#include "binspp/spectral.hpp"
#include "binspp/spp_target.hpp"

namespace binspp {

inline constexpr int kBundleFormatVersion = 1;

enum class ModelKind { Binwise, Typical };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);

struct ModelConfig {
  ModelKind kind = ModelKind::Binwise;
  std::size_t bins = kNumBins;
  std::size_t neighbors = 0;  // radius I
  std::size_t hidden = 0;     // 0 = derive from kind (1 for binwise, bins for typical)
  HeadConfig head;
  double lr = 1e-3;
  double weight_decay = 1e-5;
  std::vector<int> lr_decay_epochs = {50, 100};
  double lr_decay_factor = 0.1;
  int epochs = 120;
  int batch_utterances = 8;
  std::size_t chunk_frames = 1000;  // truncated-BPTT window
  std::uint64_t seed = 0;

  /// Fills derived fields and checks invariants; throws InvalidConfig.
  ModelConfig resolved() const;
  /// Learning rate in effect during 0-based epoch `epoch`.
  double lr_at_epoch(int epoch) const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct ModelBundle {
  ModelConfig config;
  NormStats norm;
  std::vector<GruParams> models;  // K for binwise, 1 for typical
  int format_version = kBundleFormatVersion;

  friend bool operator==(const ModelBundle&, const ModelBundle&) = default;
};

/// First and last feature bin fed to the model of bin k (truncated at the edges).
struct BinRange {
  std::size_t first;
  std::size_t last;
  std::size_t size() const { return last - first + 1; }
};
BinRange neighborhood(std::size_t bins, std::size_t k, std::size_t radius);

/// L x n input sequence for bin k: columns are feature bins
/// max(0, k-I) .. min(K-1, k+I) in ascending order.
RealMatrix assemble_neighborhood(const FeatureMatrix& f, std::size_t k, std::size_t radius);

/// Freshly initialized bundle with the model shapes implied by `cfg`.
ModelBundle init_bundle(const ModelConfig& cfg, NormStats norm);

/// Unnormalized log-power features and oracle targets for a set of mixtures.
struct TrainingCorpus {
  std::vector<FeatureMatrix> features;
  std::vector<SppMatrix> targets;

  std::size_t size() const { return features.size(); }
};

TrainingCorpus prepare_corpus(const std::vector<MixResult>& mixes, const TargetConfig& target = {});
TrainingCorpus prepare_corpus(const Manifest& manifest, const TargetConfig& target = {});

struct TrainOptions {
  unsigned workers = 1;
  /// Called after each epoch with (epoch, mean training loss).
  std::function<void(int, double)> on_epoch;
};

struct TrainResult {
  ModelBundle bundle;
  double initial_loss = 0.0;       // before the first update
  std::vector<double> epoch_loss;  // running mean loss of each epoch
};

/// Trains K independent GRUs, model k on (neighborhood of bin k, target row k).
/// Results do not depend on `options.workers`.
TrainResult train_binwise(const TrainingCorpus& corpus, const ModelConfig& cfg,
                          const TrainOptions& options = {});
TrainResult train_binwise(const Manifest& manifest, const ModelConfig& cfg,
                          const TargetConfig& target = {}, const TrainOptions& options = {});

/// Trains one GRU with n = h = K over whole spectra.
TrainResult train_typical(const TrainingCorpus& corpus, const ModelConfig& cfg,
                          const TrainOptions& options = {});
TrainResult train_typical(const Manifest& manifest, const ModelConfig& cfg,
                          const TargetConfig& target = {}, const TrainOptions& options = {});

/// Mean squared error of a bundle over a corpus (all bins, all utterances).
double corpus_loss(const ModelBundle& b, const TrainingCorpus& corpus);

/// Runs the bundle on already normalized features.
SppMatrix infer_features(const ModelBundle& b, const FeatureMatrix& normalized);
/// Full frontend with the bundle's normalization statistics.
SppMatrix infer(const ModelBundle& b, const Utterance& u);

std::string bundle_to_json(const ModelBundle& b);
ModelBundle bundle_from_json(const std::string& text);
void save_bundle(const ModelBundle& b, const std::filesystem::path& path);
ModelBundle load_bundle(const std::filesystem::path& path);

/// Hex SHA-256 over the canonical text form of all numeric arrays.
std::string bundle_checksum(const ModelBundle& b);

/// Sum over models of 3h(n + h + 2); the Softplus head has no parameters.
std::size_t count_params(const ModelBundle& b);
/// Sum over models of 3h(n + h): multiply-accumulates of the matrix-vector
/// products per frame. Pointwise gate arithmetic is not counted.
std::size_t count_macs_per_frame(const ModelBundle& b);

inline constexpr const char* kMacConvention =
    "per frame: sum over GRUs of 3h(n+h) multiply-accumulates (matrix-vector products only)";

}  // namespace binspp
