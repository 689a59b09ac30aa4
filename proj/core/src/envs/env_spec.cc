#include "sellf/envs/env_spec.h"

#include <algorithm>
#include <cmath>

#include "sellf/approx/mlp.h"

namespace sellf::envs {

namespace {

// Index of the single 1 in x[offset, offset + width); throws otherwise.
int OneHotIndex(std::span<const double> x, int offset, int width,
                std::string_view what) {
  int found = -1;
  for (int i = 0; i < width; ++i) {
    const double v = x[offset + i];
    if (v == 1.0) {
      if (found >= 0) break;
      found = i;
    } else if (v != 0.0) {
      found = -2;
      break;
    }
  }
  if (found < 0) {
    throw EnvironmentError("malformed one-hot " + std::string(what) +
                           " block");
  }
  for (int i = found + 1; i < width; ++i) {
    if (x[offset + i] != 0.0) {
      throw EnvironmentError("malformed one-hot " + std::string(what) +
                             " block");
    }
  }
  return found;
}

void CheckBinary(int a, int y) {
  if ((a != 0 && a != 1) || (y != 0 && y != 1)) {
    throw EnvironmentError("action and label must be binary");
  }
}

void CheckProbabilityRow(const std::vector<double>& row, std::string_view what,
                         std::size_t index) {
  double sum = 0.0;
  for (double p : row) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw LoadError(std::string(what) + " row " + std::to_string(index) +
                      " has an entry outside [0,1]");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw LoadError(std::string(what) + " row " + std::to_string(index) +
                    " sums to " + std::to_string(sum) + ", expected 1");
  }
}

}  // namespace

std::string_view ToString(EnvKind kind) {
  switch (kind) {
    case EnvKind::kLending:
      return "lending";
    case EnvKind::kRecidivism:
      return "recidivism";
    case EnvKind::kSchool:
      return "school";
    case EnvKind::kSchoolContinuous:
      return "school_continuous";
  }
  return "unknown";
}

EnvKind ParseEnvKind(std::string_view text) {
  if (text == "lending") return EnvKind::kLending;
  if (text == "recidivism") return EnvKind::kRecidivism;
  if (text == "school") return EnvKind::kSchool;
  if (text == "school_continuous") return EnvKind::kSchoolContinuous;
  throw ConfigError("unknown environment '" + std::string(text) + "'");
}

int LendingTransition(int score, int a, int y) {
  if (score < 1 || score > kLendingScores) {
    throw EnvironmentError("lending score " + std::to_string(score) +
                           " outside 1..10");
  }
  CheckBinary(a, y);
  if (a == 0) return score;
  return y == 1 ? std::min(score + 1, kLendingScores) : std::max(score - 1, 1);
}

int RecidivismPriorsTransition(int priors, int a, int y) {
  if (priors < 1 || priors > kRecidivismPriors) {
    throw EnvironmentError("priors class " + std::to_string(priors) +
                           " outside 1..8");
  }
  CheckBinary(a, y);
  if (a == 1 && y == 0) return std::min(priors + 1, kRecidivismPriors);
  return priors;
}

double LogisticAlpha::Probability(std::span<const double> x, GroupId z) const {
  double s = bias + weights.back() * static_cast<double>(z);
  for (std::size_t i = 0; i < x.size(); ++i) s += weights[i] * x[i];
  return approx::Sigmoid(s);
}

int LendingScore(std::span<const double> x) {
  if (x.size() != kLendingScores) {
    throw EnvironmentError("lending features must have 10 entries");
  }
  return OneHotIndex(x, 0, kLendingScores, "score") + 1;
}

Features LendingFeatures(int score) {
  if (score < 1 || score > kLendingScores) {
    throw EnvironmentError("lending score outside 1..10");
  }
  Features x(kLendingScores, 0.0);
  x[score - 1] = 1.0;
  return x;
}

RecidivismState DecodeRecidivism(std::span<const double> x) {
  if (x.size() != kRecidivismAges + kRecidivismPriors) {
    throw EnvironmentError("recidivism features must have 13 entries");
  }
  RecidivismState s;
  s.age = OneHotIndex(x, 0, kRecidivismAges, "age") + 1;
  s.priors = OneHotIndex(x, kRecidivismAges, kRecidivismPriors, "priors") + 1;
  return s;
}

Features RecidivismFeatures(RecidivismState state) {
  if (state.age < 1 || state.age > kRecidivismAges || state.priors < 1 ||
      state.priors > kRecidivismPriors) {
    throw EnvironmentError("recidivism state outside its domain");
  }
  Features x(kRecidivismAges + kRecidivismPriors, 0.0);
  x[state.age - 1] = 1.0;
  x[kRecidivismAges + state.priors - 1] = 1.0;
  return x;
}

int SchoolAgeClass(const SchoolLayout& layout, std::span<const double> x) {
  return OneHotIndex(x, layout.age_offset, layout.age_classes, "age");
}

void EnvSpec::ValidateFeatures(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != feature_dim) {
    throw EnvironmentError("feature vector has " + std::to_string(x.size()) +
                           " entries, environment expects " +
                           std::to_string(feature_dim));
  }
  switch (kind) {
    case EnvKind::kLending:
      LendingScore(x);
      return;
    case EnvKind::kRecidivism:
      DecodeRecidivism(x);
      return;
    case EnvKind::kSchool:
    case EnvKind::kSchoolContinuous: {
      for (int i = 0; i < school.categorical_dim; ++i) {
        if (x[i] != 0.0 && x[i] != 1.0) {
          throw EnvironmentError("school categorical entry " +
                                 std::to_string(i) + " is not binary");
        }
      }
      SchoolAgeClass(school, x);
      const double ind = x[school.indicator_index];
      if (ind != 0.0 && ind != 1.0) {
        throw EnvironmentError("school indicator is not binary");
      }
      for (int k = 0; k < school.score_count; ++k) {
        const double s = x[school.score_offset + k];
        if (!(s >= 0.0 && s <= school.score_max)) {
          throw EnvironmentError("school score outside [0, " +
                                 std::to_string(school.score_max) + "]");
        }
      }
      return;
    }
  }
}

double EnvSpec::Alpha(std::span<const double> x, GroupId z) const {
  if (z < 0 || z >= group_count) {
    throw EnvironmentError("group " + std::to_string(z) + " out of range");
  }
  if (const auto* table = std::get_if<TableAlpha>(&alpha)) {
    const auto it = support_index.find(Features(x.begin(), x.end()));
    if (it == support_index.end()) {
      throw EnvironmentError("features outside the tabulated support");
    }
    return table->per_group[z][it->second];
  }
  return std::get<LogisticAlpha>(alpha).Probability(x, z);
}

Features EnvSpec::Transition(const Features& x, int a, int y) const {
  ValidateFeatures(x);
  CheckBinary(a, y);
  switch (kind) {
    case EnvKind::kLending:
      return LendingFeatures(LendingTransition(LendingScore(x), a, y));
    case EnvKind::kRecidivism: {
      RecidivismState s = DecodeRecidivism(x);
      s.priors = RecidivismPriorsTransition(s.priors, a, y);
      return RecidivismFeatures(s);
    }
    case EnvKind::kSchool:
    case EnvKind::kSchoolContinuous: {
      Features next = x;
      const int age = SchoolAgeClass(school, x);
      if (age + 1 < school.age_classes) {
        next[school.age_offset + age] = 0.0;
        next[school.age_offset + age + 1] = 1.0;
      }
      if (a == 1 || y == 1) next[school.indicator_index] = 1.0;
      return next;
    }
  }
  return x;
}

void EnvSpec::EncodeInput(std::span<const double> x, GroupId z,
                          std::span<double> out) const {
  if (static_cast<int>(out.size()) != input_dim()) {
    throw ConfigError("encoded input buffer has the wrong size");
  }
  std::copy(x.begin(), x.end(), out.begin());
  for (int k = 0; k < school.score_count; ++k) {
    out[school.score_offset + k] *= school.score_input_scale;
  }
  std::fill(out.begin() + feature_dim, out.end(), 0.0);
  out[feature_dim + z] = 1.0;
}

Features EnvSpec::EncodeInput(std::span<const double> x, GroupId z) const {
  Features out(input_dim());
  EncodeInput(x, z, out);
  return out;
}

void EnvSpec::BuildIndex() {
  support_index.clear();
  for (std::size_t i = 0; i < support.size(); ++i) {
    support_index.emplace(support[i], static_cast<int>(i));
  }
}

void EnvSpec::Validate() const {
  if (group_count < 2) throw LoadError("group_count must be >= 2");
  if (static_cast<int>(group_prior.size()) != group_count) {
    throw LoadError("group_prior must have group_count entries");
  }
  CheckProbabilityRow(group_prior, "group_prior", 0);
  if (!(cost > 0.0 && cost < 1.0)) throw LoadError("cost must lie in (0,1)");
  if (pool_size < 1) throw LoadError("pool_size must be >= 1");
  if (support.empty()) throw LoadError("support is empty");
  if (support_index.size() != support.size()) {
    throw LoadError("support contains duplicate points");
  }
  for (std::size_t i = 0; i < support.size(); ++i) {
    try {
      ValidateFeatures(support[i]);
    } catch (const EnvironmentError& e) {
      throw LoadError("support point " + std::to_string(i) + ": " + e.what());
    }
  }
  if (static_cast<int>(init_probs.size()) != group_count) {
    throw LoadError("init_probs must have one row per group");
  }
  for (std::size_t g = 0; g < init_probs.size(); ++g) {
    if (init_probs[g].size() != support.size()) {
      throw LoadError("init_probs row " + std::to_string(g) +
                      " does not match the support size");
    }
    CheckProbabilityRow(init_probs[g], "init_probs", g);
  }
  if (const auto* table = std::get_if<TableAlpha>(&alpha)) {
    if (static_cast<int>(table->per_group.size()) != group_count) {
      throw LoadError("alpha table must have one row per group");
    }
    for (std::size_t g = 0; g < table->per_group.size(); ++g) {
      const auto& row = table->per_group[g];
      if (row.size() != support.size()) {
        throw LoadError("alpha row " + std::to_string(g) +
                        " does not match the support size");
      }
      for (double p : row) {
        if (!(p >= 0.0 && p <= 1.0)) {
          throw LoadError("alpha row " + std::to_string(g) +
                          " has an entry outside [0,1]");
        }
      }
    }
    // Closed dynamics: every successor of a support point is tabulated.
    for (const auto& x : support) {
      for (int a = 0; a < 2; ++a) {
        for (int y = 0; y < 2; ++y) {
          if (!support_index.contains(Transition(x, a, y))) {
            throw LoadError("support is not closed under the transition");
          }
        }
      }
    }
  } else {
    const auto& logistic = std::get<LogisticAlpha>(alpha);
    if (static_cast<int>(logistic.weights.size()) != feature_dim + 1) {
      throw LoadError("logistic alpha needs feature_dim + 1 weights");
    }
    for (double w : logistic.weights) {
      if (!std::isfinite(w)) throw LoadError("non-finite logistic weight");
    }
    if (!std::isfinite(logistic.bias)) throw LoadError("non-finite bias");
  }
}

}  // namespace sellf::envs
