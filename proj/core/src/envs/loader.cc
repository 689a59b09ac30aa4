#include "sellf/envs/loader.h"

#include <cstdlib>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#ifndef SELLF_DEFAULT_DATA_DIR
#define SELLF_DEFAULT_DATA_DIR "data/envs"
#endif

namespace sellf::envs {

namespace {

using nlohmann::json;

constexpr std::string_view kFormat = "sellf-env/1";

const json& Field(const json& j, const char* key) {
  if (!j.contains(key)) {
    throw LoadError(std::string("missing field '") + key + "'");
  }
  return j.at(key);
}

template <typename T>
T Get(const json& j, const char* key) {
  try {
    return Field(j, key).get<T>();
  } catch (const json::exception& e) {
    throw LoadError(std::string("field '") + key + "': " + e.what());
  }
}

bool IsSchool(EnvKind kind) {
  return kind == EnvKind::kSchool || kind == EnvKind::kSchoolContinuous;
}

Features SparsePoint(const json& p, const EnvSpec& spec) {
  Features x(spec.feature_dim, 0.0);
  for (int idx : p.at("active").get<std::vector<int>>()) {
    if (idx < 0 || idx >= spec.feature_dim) {
      throw LoadError("sparse support index " + std::to_string(idx) +
                      " out of range");
    }
    x[idx] = 1.0;
  }
  if (p.contains("scores")) {
    const auto scores = p.at("scores").get<std::vector<double>>();
    if (static_cast<int>(scores.size()) != spec.school.score_count) {
      throw LoadError("support point has the wrong number of scores");
    }
    for (int k = 0; k < spec.school.score_count; ++k) {
      x[spec.school.score_offset + k] = scores[k];
    }
  } else if (spec.school.score_count > 0) {
    throw LoadError("support point is missing its scores");
  }
  return x;
}

}  // namespace

std::string DefaultDataDir() {
  if (const char* dir = std::getenv("SELLF_DATA_DIR"); dir && *dir) return dir;
  return SELLF_DEFAULT_DATA_DIR;
}

EnvSpec ParseEnv(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw LoadError(std::string("malformed environment file: ") + e.what());
  }
  if (Get<std::string>(j, "format") != kFormat) {
    throw LoadError("unsupported environment format");
  }
  EnvSpec spec;
  spec.name = Get<std::string>(j, "name");
  try {
    spec.kind = ParseEnvKind(Get<std::string>(j, "kind"));
  } catch (const ConfigError& e) {
    throw LoadError(e.what());
  }
  spec.group_count = Get<int>(j, "group_count");
  spec.group_prior = Get<std::vector<double>>(j, "group_prior");
  spec.cost = Get<double>(j, "cost");
  spec.pool_size = Get<int>(j, "pool_size");
  spec.feature_dim = Get<int>(j, "feature_dim");
  if (j.contains("provenance")) spec.provenance = Get<std::string>(j, "provenance");

  if (IsSchool(spec.kind)) {
    const json& l = Field(j, "layout");
    spec.school.categorical_dim = Get<int>(l, "categorical_dim");
    spec.school.age_offset = Get<int>(l, "age_offset");
    spec.school.age_classes = Get<int>(l, "age_classes");
    spec.school.indicator_index = Get<int>(l, "indicator_index");
    spec.school.score_offset = Get<int>(l, "score_offset");
    spec.school.score_count = Get<int>(l, "score_count");
    spec.school.score_max = Get<double>(l, "score_max");
    spec.school.score_input_scale = Get<double>(l, "score_input_scale");
    const int expected =
        spec.school.categorical_dim + 1 + spec.school.score_count;
    if (spec.feature_dim != expected ||
        spec.school.indicator_index != spec.school.categorical_dim ||
        spec.school.score_offset != spec.school.categorical_dim + 1 ||
        spec.school.age_offset < 0 || spec.school.age_classes < 1 ||
        spec.school.age_offset + spec.school.age_classes >
            spec.school.categorical_dim) {
      throw LoadError("inconsistent school layout");
    }
  } else {
    spec.school.categorical_dim = spec.feature_dim;
    spec.school.indicator_index = -1;
    spec.school.score_offset = spec.feature_dim;
    spec.school.score_count = 0;
  }

  const json& support = Field(j, "support");
  const auto encoding = Get<std::string>(support, "encoding");
  const json& points = Field(support, "points");
  if (!points.is_array()) throw LoadError("support points must be an array");
  try {
    for (const auto& p : points) {
      if (encoding == "dense") {
        spec.support.push_back(p.get<Features>());
      } else if (encoding == "sparse") {
        spec.support.push_back(SparsePoint(p, spec));
      } else {
        throw LoadError("unknown support encoding '" + encoding + "'");
      }
    }
  } catch (const json::exception& e) {
    throw LoadError(std::string("support: ") + e.what());
  }

  spec.init_probs = Get<std::vector<std::vector<double>>>(j, "init_probs");

  const json& alpha = Field(j, "alpha");
  const auto type = Get<std::string>(alpha, "type");
  if (type == "table") {
    spec.alpha = TableAlpha{Get<std::vector<std::vector<double>>>(alpha, "values")};
  } else if (type == "logistic") {
    spec.alpha = LogisticAlpha{Get<std::vector<double>>(alpha, "weights"),
                               Get<double>(alpha, "bias")};
  } else {
    throw LoadError("unknown alpha type '" + type + "'");
  }

  spec.BuildIndex();
  spec.Validate();
  return spec;
}

EnvSpec LoadEnvFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open environment table " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return ParseEnv(buf.str());
  } catch (const LoadError& e) {
    throw LoadError(path + ": " + e.what());
  }
}

EnvSpec LoadEnv(const std::string& dir, const std::string& name) {
  ParseEnvKind(name);
  EnvSpec spec = LoadEnvFile(dir + "/" + name + ".json");
  if (spec.name != name) {
    throw LoadError("table in " + dir + " declares name '" + spec.name +
                    "', expected '" + name + "'");
  }
  return spec;
}

std::string ExportEnv(const EnvSpec& spec) {
  json j;
  j["format"] = kFormat;
  j["name"] = spec.name;
  j["kind"] = ToString(spec.kind);
  j["group_count"] = spec.group_count;
  j["group_prior"] = spec.group_prior;
  j["cost"] = spec.cost;
  j["pool_size"] = spec.pool_size;
  j["feature_dim"] = spec.feature_dim;
  if (!spec.provenance.empty()) j["provenance"] = spec.provenance;
  json points = json::array();
  if (IsSchool(spec.kind)) {
    const auto& l = spec.school;
    j["layout"] = {{"categorical_dim", l.categorical_dim},
                   {"age_offset", l.age_offset},
                   {"age_classes", l.age_classes},
                   {"indicator_index", l.indicator_index},
                   {"score_offset", l.score_offset},
                   {"score_count", l.score_count},
                   {"score_max", l.score_max},
                   {"score_input_scale", l.score_input_scale}};
    for (const auto& x : spec.support) {
      json p;
      std::vector<int> active;
      for (int i = 0; i <= l.indicator_index; ++i) {
        if (x[i] == 1.0) active.push_back(i);
      }
      p["active"] = active;
      if (l.score_count > 0) {
        p["scores"] = std::vector<double>(x.begin() + l.score_offset,
                                          x.begin() + l.score_offset +
                                              l.score_count);
      }
      points.push_back(p);
    }
    j["support"] = {{"encoding", "sparse"}, {"points", points}};
  } else {
    for (const auto& x : spec.support) points.push_back(x);
    j["support"] = {{"encoding", "dense"}, {"points", points}};
  }
  j["init_probs"] = spec.init_probs;
  if (const auto* table = std::get_if<TableAlpha>(&spec.alpha)) {
    j["alpha"] = {{"type", "table"}, {"values", table->per_group}};
  } else {
    const auto& logistic = std::get<LogisticAlpha>(spec.alpha);
    j["alpha"] = {{"type", "logistic"},
                  {"weights", logistic.weights},
                  {"bias", logistic.bias}};
  }
  return j.dump(1) + "\n";
}

}  // namespace sellf::envs
