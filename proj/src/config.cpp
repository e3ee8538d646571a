#include "binspp/config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

#include "binspp/error.hpp"
#include "digest.hpp"

namespace binspp {

using json = nlohmann::json;

namespace {

void require_object(const json& j, const char* what) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, std::string(what) + " must be an object");
}

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const char* what) {
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || item.key() == a;
    if (!ok)
      throw Error(ErrorCode::InvalidConfig,
                  std::string("unknown field '") + item.key() + "' in " + what);
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::InvalidConfig, std::string("field '") + key + "': " + ex.what());
  }
}

constexpr std::initializer_list<const char*> kModelKeys = {
    "kind",   "bins",          "neighbors",       "hidden",          "head",
    "lr",     "weight_decay",  "lr_decay_epochs", "lr_decay_factor", "epochs",
    "batch_utterances", "chunk_frames", "seed"};

ModelConfig read_model_fields(const json& j) {
  ModelConfig c;
  if (j.contains("kind")) {
    std::string kind;
    read(j, "kind", kind);
    c.kind = model_kind_from_string(kind);
  }
  read(j, "bins", c.bins);
  read(j, "neighbors", c.neighbors);
  read(j, "hidden", c.hidden);
  if (j.contains("head")) {
    const auto& h = j.at("head");
    require_object(h, "head");
    reject_unknown(h, {"beta", "clamp"}, "head");
    read(h, "beta", c.head.beta);
    read(h, "clamp", c.head.clamp);
  }
  read(j, "lr", c.lr);
  read(j, "weight_decay", c.weight_decay);
  read(j, "lr_decay_epochs", c.lr_decay_epochs);
  read(j, "lr_decay_factor", c.lr_decay_factor);
  read(j, "epochs", c.epochs);
  read(j, "batch_utterances", c.batch_utterances);
  read(j, "chunk_frames", c.chunk_frames);
  read(j, "seed", c.seed);
  return c;
}

}  // namespace

json model_config_to_json(const ModelConfig& c) {
  return {{"kind", to_string(c.kind)},
          {"bins", c.bins},
          {"neighbors", c.neighbors},
          {"hidden", c.hidden},
          {"head", {{"beta", c.head.beta}, {"clamp", c.head.clamp}}},
          {"lr", c.lr},
          {"weight_decay", c.weight_decay},
          {"lr_decay_epochs", c.lr_decay_epochs},
          {"lr_decay_factor", c.lr_decay_factor},
          {"epochs", c.epochs},
          {"batch_utterances", c.batch_utterances},
          {"chunk_frames", c.chunk_frames},
          {"seed", c.seed}};
}

ModelConfig model_config_from_json(const json& j) {
  require_object(j, "model config");
  reject_unknown(j, kModelKeys, "model config");
  return read_model_fields(j);
}

json target_config_to_json(const TargetConfig& c) {
  return {{"prior_ratio", c.prior_ratio}, {"xi_h1", c.xi_h1}, {"noise_smoothing", c.noise_smoothing}};
}

TargetConfig target_config_from_json(const json& j) {
  require_object(j, "target config");
  reject_unknown(j, {"prior_ratio", "xi_h1", "noise_smoothing"}, "target config");
  TargetConfig c;
  read(j, "prior_ratio", c.prior_ratio);
  read(j, "xi_h1", c.xi_h1);
  read(j, "noise_smoothing", c.noise_smoothing);
  c.validate();
  return c;
}

json baseline_config_to_json(const BaselineConfig& c) {
  return {{"xi_h1", c.xi_h1},
          {"prior_ratio", c.prior_ratio},
          {"psd_smoothing", c.psd_smoothing},
          {"spp_time_smoothing", c.spp_time_smoothing},
          {"stuck_guard", c.stuck_guard},
          {"init_frames", c.init_frames}};
}

BaselineConfig baseline_config_from_json(const json& j) {
  require_object(j, "baseline config");
  reject_unknown(j,
                 {"xi_h1", "prior_ratio", "psd_smoothing", "spp_time_smoothing", "stuck_guard",
                  "init_frames"},
                 "baseline config");
  BaselineConfig c;
  read(j, "xi_h1", c.xi_h1);
  read(j, "prior_ratio", c.prior_ratio);
  read(j, "psd_smoothing", c.psd_smoothing);
  read(j, "spp_time_smoothing", c.spp_time_smoothing);
  read(j, "stuck_guard", c.stuck_guard);
  read(j, "init_frames", c.init_frames);
  c.validate();
  return c;
}

void RunConfig::validate() const {
  (void)model.resolved();
  target.validate();
  baseline.validate();
  if (workers < 1) throw Error(ErrorCode::InvalidConfig, "workers must be >= 1");
}

json run_config_to_json(const RunConfig& c) {
  json j = model_config_to_json(c.model);
  j["target"] = target_config_to_json(c.target);
  j["baseline"] = baseline_config_to_json(c.baseline);
  j["workers"] = c.workers;
  j["out_dir"] = c.out_dir;
  return j;
}

RunConfig run_config_from_json(const json& j) {
  require_object(j, "run config");
  json model = json::object();
  RunConfig c;
  for (const auto& item : j.items()) {
    const auto& key = item.key();
    if (key == "target") {
      c.target = target_config_from_json(item.value());
    } else if (key == "baseline") {
      c.baseline = baseline_config_from_json(item.value());
    } else if (key == "workers") {
      read(j, "workers", c.workers);
    } else if (key == "out_dir") {
      read(j, "out_dir", c.out_dir);
    } else {
      model[key] = item.value();
    }
  }
  c.model = model_config_from_json(model);
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::NotFound, path.string());
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::InvalidConfig, path.string() + ": " + ex.what());
  }
  return run_config_from_json(j);
}

std::string config_fingerprint(const json& j) {
  return detail::sha256_hex(j.dump()).substr(0, 16);
}

}  // namespace binspp
