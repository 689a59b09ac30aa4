#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sellf/common.h"

namespace sellf::envs {

enum class EnvKind { kLending, kRecidivism, kSchool, kSchoolContinuous };

std::string_view ToString(EnvKind kind);
EnvKind ParseEnvKind(std::string_view text);

inline constexpr int kLendingScores = 10;
inline constexpr int kRecidivismAges = 5;
inline constexpr int kRecidivismPriors = 8;

// Scalar dynamics, exposed for direct testing.
int LendingTransition(int score, int a, int y);
// Returns the new priors class (1-based); age never changes.
int RecidivismPriorsTransition(int priors, int a, int y);

// Qualification probability given per point of the support, per group.
struct TableAlpha {
  std::vector<std::vector<double>> per_group;
};

// logistic(weights[:d] . x + weights[d] * z + bias); d = feature_dim.
struct LogisticAlpha {
  std::vector<double> weights;
  double bias = 0.0;

  double Probability(std::span<const double> x, GroupId z) const;
};

using AlphaModel = std::variant<TableAlpha, LogisticAlpha>;

// Position of the school blocks inside the feature vector.
struct SchoolLayout {
  int categorical_dim = 126;
  int age_offset = 0;
  int age_classes = 0;
  int indicator_index = 126;
  int score_offset = 127;
  int score_count = 0;
  double score_max = 1000.0;
  // Network inputs see scores multiplied by this factor.
  double score_input_scale = 1.0 / 1000.0;
};

// Immutable generative description of one environment.
struct EnvSpec {
  std::string name;
  EnvKind kind = EnvKind::kLending;
  int group_count = 2;
  std::vector<double> group_prior;
  int feature_dim = 0;
  std::vector<Features> support;
  std::vector<std::vector<double>> init_probs;  // [group][support point]
  AlphaModel alpha;
  double cost = 0.5;
  int pool_size = 5000;
  SchoolLayout school;
  std::string provenance;

  // Support lookup used by table-driven alpha models.
  std::map<Features, int> support_index;

  int input_dim() const { return feature_dim + group_count; }

  double Alpha(std::span<const double> x, GroupId z) const;

  // Next features given action and label. Throws EnvironmentError when `x`
  // is outside the feature domain.
  Features Transition(const Features& x, int a, int y) const;

  void ValidateFeatures(std::span<const double> x) const;

  // Network input: scaled features followed by a one-hot group block.
  void EncodeInput(std::span<const double> x, GroupId z,
                   std::span<double> out) const;
  Features EncodeInput(std::span<const double> x, GroupId z) const;

  // Checks every invariant; throws LoadError on the first violation.
  void Validate() const;
  void BuildIndex();
};

// Lending score (1..10) encoded in a one-hot feature vector.
int LendingScore(std::span<const double> x);
Features LendingFeatures(int score);

struct RecidivismState {
  int age = 1;     // 1..5
  int priors = 1;  // 1..8
};
RecidivismState DecodeRecidivism(std::span<const double> x);
Features RecidivismFeatures(RecidivismState state);

// Age class (0-based) of a school applicant.
int SchoolAgeClass(const SchoolLayout& layout, std::span<const double> x);

}  // namespace sellf::envs
