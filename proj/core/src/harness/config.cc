#include "sellf/harness/config.h"

#include <cstdlib>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "sellf/envs/loader.h"

namespace sellf::harness {

namespace {

using nlohmann::json;

template <typename T>
void Read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string(key) + ": wrong type");
  }
}

std::string FormatBeta(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

}  // namespace

std::string RunConfig::ResolvedRunId() const {
  if (!run_id.empty()) return run_id;
  return std::string(learn::ToString(train.algorithm)) + "_" + env + "_" +
         std::string(ToString(train.notion)) + "_b1-" + FormatBeta(train.beta1) +
         "_b2-" + FormatBeta(train.beta2) + "_s" + std::to_string(train.seed);
}

std::string RunConfig::ResolvedDataDir() const {
  return data_dir.empty() ? envs::DefaultDataDir() : data_dir;
}

RunConfig ParseRunConfig(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const char* kKnown[] = {
      "env", "data_dir", "output_dir", "run_id", "record_wall_clock",
      "algorithm", "notion", "omega", "beta1", "beta2", "total_steps",
      "n_steps", "minibatch", "ppo_epochs", "predictor_steps",
      "predictor_minibatch", "clip_eps", "gamma", "gae_lambda", "lr_policy",
      "lr_value", "lr_predictor", "lr_predictor_decay", "value_coef",
      "max_grad_norm", "normalize_advantage", "train_predictor",
      "predictor_arch", "subsample", "ipw_eval_samples", "pdim", "delta_conf",
      "pool_size", "reset_pool", "seed"};
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : kKnown) known = known || item.key() == k;
    if (!known) throw ConfigError(item.key() + ": unknown field");
  }

  RunConfig c;
  auto& t = c.train;
  Read(j, "env", c.env);
  Read(j, "data_dir", c.data_dir);
  Read(j, "output_dir", c.output_dir);
  Read(j, "run_id", c.run_id);
  Read(j, "record_wall_clock", c.record_wall_clock);
  std::string text;
  if (j.contains("algorithm")) {
    Read(j, "algorithm", text);
    try {
      t.algorithm = learn::ParseAlgorithm(text);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("algorithm: ") + e.what());
    }
  }
  if (j.contains("notion")) {
    Read(j, "notion", text);
    try {
      t.notion = ParseFairnessNotion(text);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("notion: ") + e.what());
    }
  }
  if (j.contains("predictor_arch")) {
    Read(j, "predictor_arch", text);
    try {
      t.predictor_arch = approx::ParseArchitecture(text);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("predictor_arch: ") + e.what());
    }
  }
  Read(j, "omega", t.omega);
  Read(j, "beta1", t.beta1);
  Read(j, "beta2", t.beta2);
  Read(j, "total_steps", t.total_steps);
  Read(j, "n_steps", t.n_steps);
  Read(j, "minibatch", t.minibatch);
  Read(j, "ppo_epochs", t.ppo_epochs);
  Read(j, "predictor_steps", t.predictor_steps);
  Read(j, "predictor_minibatch", t.predictor_minibatch);
  Read(j, "clip_eps", t.clip_eps);
  Read(j, "gamma", t.gamma);
  Read(j, "gae_lambda", t.gae_lambda);
  Read(j, "lr_policy", t.lr_policy);
  Read(j, "lr_value", t.lr_value);
  Read(j, "lr_predictor", t.lr_predictor);
  Read(j, "lr_predictor_decay", t.lr_predictor_decay);
  Read(j, "value_coef", t.value_coef);
  Read(j, "max_grad_norm", t.max_grad_norm);
  Read(j, "normalize_advantage", t.normalize_advantage);
  Read(j, "train_predictor", t.train_predictor);
  Read(j, "subsample", t.subsample);
  Read(j, "ipw_eval_samples", t.ipw_eval_samples);
  Read(j, "pdim", t.pdim);
  Read(j, "delta_conf", t.delta_conf);
  Read(j, "pool_size", t.pool_size);
  Read(j, "reset_pool", t.reset_pool);
  Read(j, "seed", t.seed);
  try {
    envs::ParseEnvKind(c.env);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("env: ") + e.what());
  }
  t.Validate();
  return c;
}

RunConfig LoadRunConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return ParseRunConfig(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void ApplyEnvironmentOverrides(RunConfig& config) {
  if (const char* seed = std::getenv("SELLF_SEED"); seed && *seed) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(seed, &end, 10);
    if (*end != '\0') throw ConfigError("SELLF_SEED: not an unsigned integer");
    config.train.seed = v;
  }
  if (const char* dir = std::getenv("SELLF_OUTPUT_DIR"); dir && *dir) {
    config.output_dir = dir;
  }
}

std::string SerializeRunConfig(const RunConfig& c) {
  const auto& t = c.train;
  json j = {
      {"env", c.env},
      {"data_dir", c.data_dir},
      {"output_dir", c.output_dir},
      {"run_id", c.ResolvedRunId()},
      {"record_wall_clock", c.record_wall_clock},
      {"algorithm", learn::ToString(t.algorithm)},
      {"notion", ToString(t.notion)},
      {"omega", t.omega},
      {"beta1", t.beta1},
      {"beta2", t.beta2},
      {"total_steps", t.total_steps},
      {"n_steps", t.n_steps},
      {"minibatch", t.minibatch},
      {"ppo_epochs", t.ppo_epochs},
      {"predictor_steps", t.predictor_steps},
      {"predictor_minibatch", t.predictor_minibatch},
      {"clip_eps", t.clip_eps},
      {"gamma", t.gamma},
      {"gae_lambda", t.gae_lambda},
      {"lr_policy", t.lr_policy},
      {"lr_value", t.lr_value},
      {"lr_predictor", t.lr_predictor},
      {"lr_predictor_decay", t.lr_predictor_decay},
      {"value_coef", t.value_coef},
      {"max_grad_norm", t.max_grad_norm},
      {"normalize_advantage", t.normalize_advantage},
      {"train_predictor", t.train_predictor},
      {"predictor_arch", approx::ToString(t.predictor_arch)},
      {"subsample", t.subsample},
      {"ipw_eval_samples", t.ipw_eval_samples},
      {"pdim", t.pdim},
      {"delta_conf", t.delta_conf},
      {"pool_size", t.pool_size},
      {"reset_pool", t.reset_pool},
      {"seed", t.seed},
  };
  return j.dump(2) + "\n";
}

}  // namespace sellf::harness
