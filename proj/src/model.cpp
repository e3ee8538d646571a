#include "binspp/model.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include "binspp/config.hpp"
#include "binspp/error.hpp"
#include "binspp/random.hpp"
#include "digest.hpp"

namespace binspp {

using json = nlohmann::json;

std::string to_string(ModelKind kind) {
  return kind == ModelKind::Binwise ? "binwise" : "typical";
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "binwise") return ModelKind::Binwise;
  if (s == "typical") return ModelKind::Typical;
  throw Error(ErrorCode::InvalidConfig, "unknown model kind '" + s + "'");
}

ModelConfig ModelConfig::resolved() const {
  ModelConfig c = *this;
  if (c.bins < 1) throw Error(ErrorCode::InvalidConfig, "bins must be >= 1");
  const std::size_t want = c.kind == ModelKind::Binwise ? 1 : c.bins;
  if (c.hidden == 0) c.hidden = want;
  if (c.hidden != want)
    throw Error(ErrorCode::InvalidConfig,
                to_string(c.kind) + " model needs hidden = " + std::to_string(want) + ", got " +
                    std::to_string(c.hidden));
  if (c.kind == ModelKind::Typical && c.neighbors != 0)
    throw Error(ErrorCode::InvalidConfig, "the typical model takes no neighbor radius");
  if (!(c.lr > 0.0)) throw Error(ErrorCode::InvalidConfig, "lr must be > 0");
  if (!(c.weight_decay >= 0.0)) throw Error(ErrorCode::InvalidConfig, "weight_decay must be >= 0");
  if (!(c.lr_decay_factor > 0.0 && c.lr_decay_factor <= 1.0))
    throw Error(ErrorCode::InvalidConfig, "lr_decay_factor must lie in (0, 1]");
  if (!(c.head.beta > 0.0)) throw Error(ErrorCode::InvalidConfig, "head beta must be > 0");
  if (c.epochs < 0) throw Error(ErrorCode::InvalidConfig, "epochs must be >= 0");
  if (c.batch_utterances < 1) throw Error(ErrorCode::InvalidConfig, "batch_utterances must be >= 1");
  if (c.chunk_frames < 1) throw Error(ErrorCode::InvalidConfig, "chunk_frames must be >= 1");
  return c;
}

double ModelConfig::lr_at_epoch(int epoch) const {
  double rate = lr;
  for (int d : lr_decay_epochs)
    if (epoch >= d) rate *= lr_decay_factor;
  return rate;
}

BinRange neighborhood(std::size_t bins, std::size_t k, std::size_t radius) {
  if (k >= bins)
    throw Error(ErrorCode::BinOutOfRange,
                "bin " + std::to_string(k) + " outside [0, " + std::to_string(bins) + ")");
  return {k >= radius ? k - radius : 0, std::min(bins - 1, k + radius)};
}

RealMatrix assemble_neighborhood(const FeatureMatrix& f, std::size_t k, std::size_t radius) {
  const BinRange range = neighborhood(f.bins(), k, radius);
  RealMatrix x(f.frames(), range.size());
  for (std::size_t b = range.first; b <= range.last; ++b) {
    const auto row = f.values.row(b);
    for (std::size_t l = 0; l < row.size(); ++l) x(l, b - range.first) = row[l];
  }
  return x;
}

ModelBundle init_bundle(const ModelConfig& cfg_in, NormStats norm) {
  const ModelConfig cfg = cfg_in.resolved();
  ModelBundle b;
  b.config = cfg;
  b.norm = std::move(norm);
  if (cfg.kind == ModelKind::Binwise) {
    b.models.reserve(cfg.bins);
    for (std::size_t k = 0; k < cfg.bins; ++k)
      b.models.push_back(init_gru(neighborhood(cfg.bins, k, cfg.neighbors).size(), cfg.hidden,
                                  derive_seed(cfg.seed, k)));
  } else {
    b.models.push_back(init_gru(cfg.bins, cfg.hidden, derive_seed(cfg.seed, 0)));
  }
  return b;
}

TrainingCorpus prepare_corpus(const std::vector<MixResult>& mixes, const TargetConfig& target) {
  target.validate();
  TrainingCorpus c;
  c.features.reserve(mixes.size());
  c.targets.reserve(mixes.size());
  for (const auto& mix : mixes) {
    const auto noisy = power_spec(stft(mix.noisy), PowerRole::Noisy);
    const auto noise = power_spec(stft(mix.scaled_noise), PowerRole::Noise);
    const auto phi_d = smooth_noise_psd(noise, target.noise_smoothing);
    c.targets.push_back(oracle_spp(noisy, phi_d, target));
    c.features.push_back(log_power(noisy));
  }
  return c;
}

TrainingCorpus prepare_corpus(const Manifest& manifest, const TargetConfig& target) {
  std::vector<MixResult> mixes;
  mixes.reserve(manifest.entries.size());
  for (const auto& e : manifest.entries) mixes.push_back(realize_entry(e));
  return prepare_corpus(mixes, target);
}

namespace {

/// Sequences for a single GRU: inputs L x n and targets L x h per utterance.
struct SequenceSet {
  std::vector<RealMatrix> inputs;
  std::vector<RealMatrix> targets;
};

struct FitResult {
  double initial_loss = 0.0;
  std::vector<double> epoch_loss;
};

/// Forward over the utterance in chunks of `chunk` frames, carrying the state
/// but not the gradient across chunk boundaries. Returns the utterance MSE;
/// adds `weight` times its gradient to `grad` when non-null.
double run_sequence(const GruParams& p, const RealMatrix& x, const RealMatrix& target,
                    const HeadConfig& head, std::size_t chunk, GruParams* grad, double weight) {
  const std::size_t steps = x.rows(), h = p.h;
  if (steps == 0) return 0.0;
  std::vector<double> state(h, 0.0);
  double sq_err = 0.0;
  for (std::size_t start = 0; start < steps; start += chunk) {
    const std::size_t len = std::min(chunk, steps - start);
    RealMatrix xc(len, x.cols()), tc(len, h);
    for (std::size_t l = 0; l < len; ++l) {
      std::copy_n(x.row(start + l).begin(), x.cols(), xc.row(l).begin());
      std::copy_n(target.row(start + l).begin(), h, tc.row(l).begin());
    }
    auto fwd = gru_forward(p, xc, state);
    const RealMatrix est = softplus_head(fwd.hidden, head);
    for (std::size_t i = 0; i < est.size(); ++i) {
      const double d = est.data()[i] - tc.data()[i];
      sq_err += d * d;
    }
    if (grad != nullptr) {
      const GruParams g = gru_backward(p, fwd.cache, head, tc);
      accumulate(*grad, g, weight * static_cast<double>(len) / static_cast<double>(steps));
    }
    const auto last = fwd.hidden.row(len - 1);
    std::copy(last.begin(), last.end(), state.begin());
  }
  return sq_err / static_cast<double>(steps * h);
}

std::vector<std::vector<std::size_t>> epoch_orders(std::size_t count, const ModelConfig& cfg) {
  std::vector<std::vector<std::size_t>> orders(static_cast<std::size_t>(cfg.epochs));
  for (int e = 0; e < cfg.epochs; ++e) {
    auto& order = orders[static_cast<std::size_t>(e)];
    order.resize(count);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(cfg.seed ^ 0x5eed0fdeULL, static_cast<std::uint64_t>(e)));
    for (std::size_t i = count; i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
  }
  return orders;
}

FitResult fit(GruParams& params, const SequenceSet& data, const ModelConfig& cfg,
              const std::vector<std::vector<std::size_t>>& orders) {
  FitResult r;
  const std::size_t count = data.inputs.size();
  double init = 0.0;
  for (std::size_t u = 0; u < count; ++u)
    init += run_sequence(params, data.inputs[u], data.targets[u], cfg.head, cfg.chunk_frames,
                         nullptr, 0.0);
  r.initial_loss = init / static_cast<double>(count);

  AdamState adam(params, cfg.lr, cfg.weight_decay);
  const auto batch = static_cast<std::size_t>(cfg.batch_utterances);
  for (int e = 0; e < cfg.epochs; ++e) {
    adam.lr = cfg.lr_at_epoch(e);
    const auto& order = orders[static_cast<std::size_t>(e)];
    double total = 0.0;
    for (std::size_t start = 0; start < count; start += batch) {
      const std::size_t end = std::min(count, start + batch);
      const double weight = 1.0 / static_cast<double>(end - start);
      GruParams grad(params.n, params.h);
      for (std::size_t i = start; i < end; ++i) {
        const std::size_t u = order[i];
        total += run_sequence(params, data.inputs[u], data.targets[u], cfg.head, cfg.chunk_frames,
                              &grad, weight);
      }
      adam_step(params, grad, adam);
    }
    const double loss = total / static_cast<double>(count);
    if (!std::isfinite(loss))
      throw Error(ErrorCode::DivergedLoss,
                  "non-finite loss at epoch " + std::to_string(e) + "; lower the learning rate");
    r.epoch_loss.push_back(loss);
  }
  return r;
}

RealMatrix target_row(const SppMatrix& t, std::size_t k) {
  RealMatrix out(t.frames(), 1);
  const auto row = t.values.row(k);
  std::copy(row.begin(), row.end(), out.data().begin());
  return out;
}

RealMatrix transpose(const RealMatrix& m) {
  RealMatrix out(m.cols(), m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out(c, r) = m(r, c);
  return out;
}

struct NormalizedCorpus {
  NormStats norm;
  std::vector<FeatureMatrix> features;
};

NormalizedCorpus normalize_corpus(const TrainingCorpus& corpus, std::size_t bins) {
  if (corpus.size() == 0) throw Error(ErrorCode::EmptyManifest, "no training utterances");
  if (corpus.targets.size() != corpus.size())
    throw Error(ErrorCode::ShapeMismatch, "features and targets differ in count");
  for (std::size_t u = 0; u < corpus.size(); ++u) {
    if (corpus.features[u].bins() != bins)
      throw Error(ErrorCode::BinCountMismatch, "utterance " + std::to_string(u) + " has " +
                                                   std::to_string(corpus.features[u].bins()) +
                                                   " bins, config expects " + std::to_string(bins));
    if (!corpus.features[u].values.same_shape(corpus.targets[u].values))
      throw Error(ErrorCode::ShapeMismatch, "features/targets shape differ for utterance " +
                                                std::to_string(u));
  }
  NormalizedCorpus n;
  n.norm = compute_norm_stats(corpus.features);
  n.features.reserve(corpus.size());
  for (const auto& f : corpus.features) n.features.push_back(normalize(f, n.norm));
  return n;
}

template <typename Task>
void run_parallel(std::size_t count, unsigned workers, Task task) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(count)));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

void report_epochs(const TrainResult& r, const TrainOptions& options) {
  if (!options.on_epoch) return;
  for (std::size_t e = 0; e < r.epoch_loss.size(); ++e)
    options.on_epoch(static_cast<int>(e), r.epoch_loss[e]);
}

}  // namespace

TrainResult train_binwise(const TrainingCorpus& corpus, const ModelConfig& cfg_in,
                          const TrainOptions& options) {
  const ModelConfig cfg = cfg_in.resolved();
  if (cfg.kind != ModelKind::Binwise)
    throw Error(ErrorCode::InvalidConfig, "train_binwise needs kind = binwise");
  auto data = normalize_corpus(corpus, cfg.bins);
  TrainResult result;
  result.bundle = init_bundle(cfg, data.norm);
  const auto orders = epoch_orders(corpus.size(), cfg);

  std::vector<FitResult> fits(cfg.bins);
  run_parallel(cfg.bins, options.workers, [&](std::size_t k) {
    SequenceSet set;
    for (std::size_t u = 0; u < corpus.size(); ++u) {
      set.inputs.push_back(assemble_neighborhood(data.features[u], k, cfg.neighbors));
      set.targets.push_back(target_row(corpus.targets[u], k));
    }
    fits[k] = fit(result.bundle.models[k], set, cfg, orders);
  });

  // Reduce in bin order so the reported losses are schedule independent.
  result.epoch_loss.assign(static_cast<std::size_t>(cfg.epochs), 0.0);
  for (const auto& f : fits) {
    result.initial_loss += f.initial_loss;
    for (std::size_t e = 0; e < f.epoch_loss.size(); ++e) result.epoch_loss[e] += f.epoch_loss[e];
  }
  result.initial_loss /= static_cast<double>(cfg.bins);
  for (double& l : result.epoch_loss) l /= static_cast<double>(cfg.bins);
  report_epochs(result, options);
  return result;
}

TrainResult train_binwise(const Manifest& manifest, const ModelConfig& cfg,
                          const TargetConfig& target, const TrainOptions& options) {
  if (manifest.entries.empty()) throw Error(ErrorCode::EmptyManifest, "training manifest is empty");
  return train_binwise(prepare_corpus(manifest, target), cfg, options);
}

TrainResult train_typical(const TrainingCorpus& corpus, const ModelConfig& cfg_in,
                          const TrainOptions& options) {
  const ModelConfig cfg = cfg_in.resolved();
  if (cfg.kind != ModelKind::Typical)
    throw Error(ErrorCode::InvalidConfig, "train_typical needs kind = typical");
  auto data = normalize_corpus(corpus, cfg.bins);
  TrainResult result;
  result.bundle = init_bundle(cfg, data.norm);

  SequenceSet set;
  for (std::size_t u = 0; u < corpus.size(); ++u) {
    set.inputs.push_back(transpose(data.features[u].values));
    set.targets.push_back(transpose(corpus.targets[u].values));
  }
  const auto f = fit(result.bundle.models.front(), set, cfg, epoch_orders(corpus.size(), cfg));
  result.initial_loss = f.initial_loss;
  result.epoch_loss = f.epoch_loss;
  report_epochs(result, options);
  return result;
}

TrainResult train_typical(const Manifest& manifest, const ModelConfig& cfg,
                          const TargetConfig& target, const TrainOptions& options) {
  if (manifest.entries.empty()) throw Error(ErrorCode::EmptyManifest, "training manifest is empty");
  return train_typical(prepare_corpus(manifest, target), cfg, options);
}

SppMatrix infer_features(const ModelBundle& b, const FeatureMatrix& normalized) {
  const auto& cfg = b.config;
  if (normalized.bins() != cfg.bins)
    throw Error(ErrorCode::BinCountMismatch, "features have " + std::to_string(normalized.bins()) +
                                                 " bins, bundle expects " +
                                                 std::to_string(cfg.bins));
  SppMatrix out;
  out.values = RealMatrix(cfg.bins, normalized.frames());
  if (cfg.kind == ModelKind::Binwise) {
    if (b.models.size() != cfg.bins)
      throw Error(ErrorCode::ShapeMismatch, "bundle holds " + std::to_string(b.models.size()) +
                                                " models for " + std::to_string(cfg.bins) + " bins");
    for (std::size_t k = 0; k < cfg.bins; ++k) {
      const auto x = assemble_neighborhood(normalized, k, cfg.neighbors);
      const auto y = softplus_head(gru_forward(b.models[k], x).hidden, cfg.head);
      std::copy(y.data().begin(), y.data().end(), out.values.row(k).begin());
    }
  } else {
    if (b.models.size() != 1)
      throw Error(ErrorCode::ShapeMismatch, "typical bundle must hold exactly one model");
    const auto y = softplus_head(gru_forward(b.models.front(), transpose(normalized.values)).hidden,
                                 cfg.head);
    out.values = transpose(y);
  }
  return out;
}

SppMatrix infer(const ModelBundle& b, const Utterance& u) {
  return infer_features(b, normalize(log_power_features(u), b.norm));
}

double corpus_loss(const ModelBundle& b, const TrainingCorpus& corpus) {
  if (corpus.size() == 0) throw Error(ErrorCode::EmptyInput, "empty corpus");
  double total = 0.0;
  for (std::size_t u = 0; u < corpus.size(); ++u) {
    const auto est = infer_features(b, normalize(corpus.features[u], b.norm));
    total += mse_loss(est.values.data(), corpus.targets[u].values.data());
  }
  return total / static_cast<double>(corpus.size());
}

std::size_t count_params(const ModelBundle& b) {
  std::size_t total = 0;
  for (const auto& m : b.models) total += GruParams::count_for(m.n, m.h);
  return total;
}

std::size_t count_macs_per_frame(const ModelBundle& b) {
  std::size_t total = 0;
  for (const auto& m : b.models) total += 3 * m.h * (m.n + m.h);
  return total;
}

// ---- serialization -------------------------------------------------------

namespace {

void append_array(std::string& out, std::span<const double> values) {
  char buf[40];
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out.push_back(',');
    std::snprintf(buf, sizeof buf, "%.17g", values[i]);
    out += buf;
  }
  out.push_back(';');
}

json matrix_to_json(const RealMatrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

RealMatrix matrix_from_json(const json& j, std::size_t rows, std::size_t cols, const char* name) {
  if (!j.is_array() || j.size() != rows)
    throw Error(ErrorCode::CorruptFile, std::string(name) + " has wrong row count");
  RealMatrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto row = j[r].get<std::vector<double>>();
    if (row.size() != cols)
      throw Error(ErrorCode::CorruptFile, std::string(name) + " has wrong column count");
    std::copy(row.begin(), row.end(), m.row(r).begin());
  }
  return m;
}

}  // namespace

std::string bundle_checksum(const ModelBundle& b) {
  std::string canon;
  append_array(canon, b.norm.mean);
  append_array(canon, b.norm.std);
  for (const auto& m : b.models) {
    canon += std::to_string(m.n) + "," + std::to_string(m.h) + ";";
    for (auto arr : m.arrays()) append_array(canon, arr);
  }
  return detail::sha256_hex(canon);
}

std::string bundle_to_json(const ModelBundle& b) {
  json models = json::array();
  for (const auto& m : b.models) {
    models.push_back({{"n", m.n},
                      {"h", m.h},
                      {"w_input", matrix_to_json(m.w_input)},
                      {"w_recurrent", matrix_to_json(m.w_recurrent)},
                      {"bias_input", m.bias_input},
                      {"bias_recurrent", m.bias_recurrent}});
  }
  json doc = {{"format_version", b.format_version},
              {"config", model_config_to_json(b.config)},
              {"norm", {{"mean", b.norm.mean}, {"std", b.norm.std}}},
              {"models", std::move(models)},
              {"checksum", bundle_checksum(b)}};
  return doc.dump() + "\n";
}

ModelBundle bundle_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::CorruptFile, std::string("bundle is not valid JSON: ") + ex.what());
  }
  ModelBundle b;
  try {
    b.format_version = doc.at("format_version").get<int>();
    if (b.format_version != kBundleFormatVersion)
      throw Error(ErrorCode::VersionMismatch,
                  "bundle format " + std::to_string(b.format_version) + ", supported " +
                      std::to_string(kBundleFormatVersion));
    b.config = model_config_from_json(doc.at("config"));
    b.norm.mean = doc.at("norm").at("mean").get<std::vector<double>>();
    b.norm.std = doc.at("norm").at("std").get<std::vector<double>>();
    for (const auto& jm : doc.at("models")) {
      const auto n = jm.at("n").get<std::size_t>();
      const auto h = jm.at("h").get<std::size_t>();
      GruParams p(n, h);
      p.w_input = matrix_from_json(jm.at("w_input"), 3 * h, n, "w_input");
      p.w_recurrent = matrix_from_json(jm.at("w_recurrent"), 3 * h, h, "w_recurrent");
      p.bias_input = jm.at("bias_input").get<std::vector<double>>();
      p.bias_recurrent = jm.at("bias_recurrent").get<std::vector<double>>();
      if (p.bias_input.size() != 3 * h || p.bias_recurrent.size() != 3 * h)
        throw Error(ErrorCode::CorruptFile, "bias vector has wrong length");
      b.models.push_back(std::move(p));
    }
    const auto stored = doc.at("checksum").get<std::string>();
    if (stored != bundle_checksum(b)) throw Error(ErrorCode::CorruptFile, "checksum mismatch");
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::CorruptFile, std::string("malformed bundle: ") + ex.what());
  }
  return b;
}

void save_bundle(const ModelBundle& b, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::Io, "cannot write " + path.string());
  f << bundle_to_json(b);
  if (!f) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

ModelBundle load_bundle(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::NotFound, path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return bundle_from_json(ss.str());
}

}  // namespace binspp
