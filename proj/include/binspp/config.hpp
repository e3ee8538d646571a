#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "binspp/baseline.hpp"
#include "binspp/model.hpp"
#include "binspp/spp_target.hpp"

namespace binspp {

// All *_from_json functions reject unknown keys with InvalidConfig; missing
// keys keep their defaults.

nlohmann::json model_config_to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const nlohmann::json& j);

nlohmann::json target_config_to_json(const TargetConfig& c);
TargetConfig target_config_from_json(const nlohmann::json& j);

nlohmann::json baseline_config_to_json(const BaselineConfig& c);
BaselineConfig baseline_config_from_json(const nlohmann::json& j);

/// Everything a pipeline run needs. The JSON form is a ModelConfig object
/// that may additionally carry "target", "baseline", "workers" and "out_dir".
struct RunConfig {
  ModelConfig model;
  TargetConfig target;
  BaselineConfig baseline;
  unsigned workers = 1;
  std::string out_dir;

  void validate() const;
};

nlohmann::json run_config_to_json(const RunConfig& c);
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

/// Short hex digest identifying a configuration in reports.
std::string config_fingerprint(const nlohmann::json& j);

}  // namespace binspp
