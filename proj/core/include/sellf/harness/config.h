#pragma once

#include <string>

#include "sellf/learn/config.h"

namespace sellf::harness {

struct RunConfig {
  std::string env = "lending";
  std::string data_dir;  // empty: envs::DefaultDataDir()
  std::string output_dir = "runs";
  std::string run_id;    // empty: derived from the config
  // Off by default so repeated runs produce identical metrics files.
  bool record_wall_clock = false;
  learn::TrainConfig train;

  std::string ResolvedRunId() const;
  std::string ResolvedDataDir() const;
};

// Parses the JSON config format. Unknown keys and invalid values raise
// ConfigError naming the field.
RunConfig ParseRunConfig(const std::string& json_text);
RunConfig LoadRunConfig(const std::string& path);

// Applies SELLF_SEED and SELLF_OUTPUT_DIR when set.
void ApplyEnvironmentOverrides(RunConfig& config);

std::string SerializeRunConfig(const RunConfig& config);

}  // namespace sellf::harness
