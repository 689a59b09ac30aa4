#pragma once

#include <optional>
#include <span>
#include <vector>

#include "sellf/common.h"
#include "sellf/fmdp/types.h"
#include "sellf/metrics/joint_mass.h"

namespace sellf::metrics {

// Per-group mass over (true label, action, prediction). Accepted mass
// carries the prediction too, but no quantity depends on it.
struct GroupDistribution {
  double mass[2][2][2] = {};  // [y][a][y_hat]

  void Add(int y, int a, int y_hat, double m = 1.0) { mass[y][a][y_hat] += m; }
  double Total() const;

  JointMass Truth() const;     // over (y, a)
  JointMass Observed() const;  // over (y_tilde, a), y_tilde = y when a = 1
};

struct GroupTerms {
  double r = 0.0;          // rejection rate
  double eps = 0.0;        // E[y_hat - y | a = 0]; 0 when nothing is rejected
  double phi_tilde = 0.0;  // P(y_tilde = 1)
  std::optional<double> kappa;  // 1 - r eps / phi_tilde, undefined if phi_tilde = 0
  double mu_true = 0.0;
  double mu_observed = 0.0;
  // Observable-mode fields, filled by the learner.
  double eps_hat = 0.0;
  double eps_bar = 1.0;
  double d2 = 0.0;
  std::int64_t n_accepted = 0;
};

struct ConditionVerdict {
  bool disparity_ok = false;
  bool bias_ok = false;
  bool overall() const { return disparity_ok && bias_ok; }
};

struct DisparityReport {
  FairnessNotion notion = FairnessNotion::kQualificationParity;
  std::optional<double> delta_true;
  double delta_accepted = 0.0;
  double delta_observed = 0.0;
  // delta_observed rebuilt from the decomposition terms (exact mode only).
  std::optional<double> delta_decomposed;
  std::vector<GroupTerms> groups;
  std::optional<ConditionVerdict> conditions;
};

// --- record estimators ---------------------------------------------------

// Truth channel is required: it is the only place the hidden labels live.
double DisparityTrue(std::span<const fmdp::TransitionRecord> records,
                     std::span<const fmdp::HiddenRecord> hidden,
                     FairnessNotion notion, int group_count = 2);
// Exactly 0 for equality of opportunity.
double DisparityAccepted(std::span<const fmdp::TransitionRecord> records,
                         FairnessNotion notion, int group_count = 2);
double DisparityObserved(std::span<const fmdp::TransitionRecord> records,
                         FairnessNotion notion, int group_count = 2);

std::vector<GroupDistribution> Distributions(
    std::span<const fmdp::TransitionRecord> records,
    std::span<const fmdp::HiddenRecord> hidden, int group_count = 2);

// --- exact / tabular -----------------------------------------------------

// Fills every term and verifies nothing: callers compare delta_decomposed
// against delta_observed. Throws EstimationError on empty conditioning
// cells, including phi_tilde = 0 under equality of opportunity.
DisparityReport Decompose(const std::vector<GroupDistribution>& groups,
                          FairnessNotion notion);

// Rebuilds the observed disparity from (mu, r, eps, kappa) terms.
double DecomposedObserved(const std::vector<GroupTerms>& groups,
                          FairnessNotion notion);

// --- IPW -----------------------------------------------------------------

// Self-normalized weighted mean of (predicted - label). Empty when there
// are no samples or the weights sum to zero.
std::optional<double> IpwErrorEstimate(std::span<const double> predicted,
                                       std::span<const int> labels,
                                       std::span<const double> weights);

// --- multi-group ---------------------------------------------------------

// max - min of per-group utilities. Throws ConfigError on fewer than two.
double MultiGroupDisparity(std::span<const double> utilities);

}  // namespace sellf::metrics
