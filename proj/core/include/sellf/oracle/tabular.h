#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sellf/common.h"
#include "sellf/fmdp/types.h"
#include "sellf/metrics/disparity.h"

namespace sellf::oracle {

inline constexpr int kMaxSupport = 50;

// A finite problem with exact probabilities. Group i has its own support
// of points 0..n_i-1; every table is indexed [group][point].
struct TabularInstance {
  std::vector<double> group_prior;
  std::vector<std::vector<double>> marginal;   // P(x | z)
  std::vector<std::vector<double>> alpha;      // P(y = 1 | x, z)
  std::vector<std::vector<double>> policy;     // current policy
  std::vector<std::vector<double>> predictor;  // P(y_hat = 1 | x, z)
  // Earlier deployed policies, oldest first; the current policy closes the
  // sequence.
  std::vector<std::vector<std::vector<double>>> history;

  int group_count() const { return static_cast<int>(group_prior.size()); }
  // Throws ConfigError on shape, normalization (1e-12) or range violations.
  void Validate() const;
};

struct OracleGroup {
  double mu_true = 0.0;
  double mu_observed = 0.0;
  double mu_accepted = 0.0;
  double p_label = 0.0;  // P(y = 1)
  double r = 0.0;
  double eps = 0.0;
  double phi_tilde = 0.0;
  std::optional<double> kappa;
  double accept_rate_cum = 0.0;  // E[cumulative acceptance]
  std::vector<double> cumulative;
  std::vector<double> d_accept;  // D_A(x)
  std::vector<double> d_reject;  // D_R(x)
  std::vector<double> weight;    // D_R / D_A
  double d2 = 0.0;
  double mean_weight = 0.0;      // E_{D_A}[w]
};

struct OracleReport {
  FairnessNotion notion = FairnessNotion::kQualificationParity;
  std::optional<double> delta_true;
  double delta_observed = 0.0;
  double delta_accepted = 0.0;
  std::vector<OracleGroup> groups;
  bool kappa_defined = true;
};

// Exact expectations by summing over every (z, x, y, a, y_hat) outcome.
OracleReport Enumerate(const TabularInstance& instance, FairnessNotion notion);

// Within-group exact masses, for feeding the metrics estimators.
std::vector<metrics::GroupDistribution> ExactDistributions(
    const TabularInstance& instance);

// Terms in the metrics layout, with eps_bar left at its default.
metrics::DisparityReport ToReport(const OracleReport& oracle);

enum class Constraint {
  kNone,
  kOverlap,             // every acceptance probability in [0.05, 0.95]
  kAcceptedOnlyBlind,   // accepted-only disparity 0, |true disparity| > 0.05
  kNearFair,            // groups are small perturbations of one profile
};

struct InstanceOptions {
  Constraint constraint = Constraint::kNone;
  int group_count = 2;
  int max_support = 8;
  int max_history = 3;
  double perturbation = 0.05;
  FairnessNotion notion = FairnessNotion::kQualificationParity;
  int max_attempts = 10000;
};

// Throws EstimationError if the constraint cannot be met within
// max_attempts draws.
TabularInstance RandomInstance(Rng& rng, const InstanceOptions& options);

// Draws n individuals from the instance and runs the step rule on them
// (action from the policy, label from alpha, imputation from the
// predictor). No dynamics: each draw is independent.
struct SampledRecords {
  std::vector<fmdp::TransitionRecord> records;
  std::vector<fmdp::HiddenRecord> hidden;
};
SampledRecords Simulate(const TabularInstance& instance, std::int64_t n,
                        Rng& rng);

}  // namespace sellf::oracle
