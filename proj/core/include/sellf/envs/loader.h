#pragma once

#include <string>

#include "sellf/envs/env_spec.h"

namespace sellf::envs {

// Directory holding <name>.json tables. Resolution order: the SELLF_DATA_DIR
// environment variable, then the directory baked in at build time.
std::string DefaultDataDir();

EnvSpec LoadEnvFile(const std::string& path);

// Loads <dir>/<name>.json and checks that the file declares `name`.
EnvSpec LoadEnv(const std::string& dir, const std::string& name);

EnvSpec ParseEnv(const std::string& json_text);

// Serializes a spec in the same format LoadEnvFile reads.
std::string ExportEnv(const EnvSpec& spec);

}  // namespace sellf::envs
