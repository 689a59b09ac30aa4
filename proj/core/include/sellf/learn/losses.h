#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "sellf/common.h"

namespace sellf::learn {

struct AdvantageEstimate {
  std::vector<double> advantages;
  std::vector<double> returns;  // discounted returns, bootstrapped at the end
};

// Generalized advantage estimation over one continuing window.
// values[t] = V(s_t); bootstrap_value = V(s_T) for the state after the window.
AdvantageEstimate ComputeAdvantages(std::span<const double> rewards,
                                    std::span<const double> values,
                                    double bootstrap_value, double gamma,
                                    double gae_lambda);

// beta1 * max(|delta| - threshold, 0).
double DisparityPenalty(double delta, double threshold, double beta1);

// Baseline penalty: beta1 * max(|d_t| - omega, 0), plus
// beta2 * max(|d_next| - |d_t|, 0) while |d_t| > omega.
double PocarPenalty(double delta_now, double delta_next, double omega,
                    double beta1, double beta2);

// Each loss maps network logits (one per column) to a scalar and writes the
// derivative with respect to every logit.

struct PpoBatch {
  std::vector<int> actions;
  std::vector<double> old_accept_probs;  // behavior network probability
  std::vector<double> advantages;
};

// -mean(min(ratio * A, clip(ratio, 1 - eps, 1 + eps) * A)) where ratio is
// the probability of the taken action relative to the old policy.
double PpoClipLoss(const Eigen::RowVectorXd& logits, const PpoBatch& batch,
                   double clip_eps, Eigen::RowVectorXd& dlogits);

struct RenyiBatch {
  std::vector<GroupId> groups;
  // prod over earlier snapshots of (1 - p_k(x)); constant in the parameters.
  std::vector<double> predecessor_reject;
  // Per group: loss weight c^i, cumulative acceptance rate a^i and
  // rejection rate r^i, fixed for the iteration.
  std::vector<double> group_scale;
  std::vector<double> accept_rate_cum;
  std::vector<double> reject_rate;
};

// sum_i c^i * mean_{j in group i} w_j^2 with the population form
// w^2 = (a/r)^2 (1 - p)^2 / C^2 averaged over the sampling distribution,
// i.e. the per-record term (a / r^2) (1 - p)^2 / C with
// C = 1 - (1 - p) * predecessor_reject. C is floored at the overlap floor;
// floored records count into *floor_events.
double RenyiLoss(const Eigen::RowVectorXd& logits, const RenyiBatch& batch,
                 Eigen::RowVectorXd& dlogits,
                 std::int64_t* floor_events = nullptr);

// Self-normalized weighted binary cross-entropy summed over groups:
// sum_i sum_{j in i} w_j l_j / sum_{j in i} w_j.
double WeightedCrossEntropy(const Eigen::RowVectorXd& logits,
                            std::span<const int> labels,
                            std::span<const double> weights,
                            std::span<const GroupId> groups, int group_count,
                            Eigen::RowVectorXd& dlogits);

// value_coef * mean((v - target)^2).
double ValueLoss(const Eigen::RowVectorXd& values,
                 std::span<const double> targets, double value_coef,
                 Eigen::RowVectorXd& dvalues);

}  // namespace sellf::learn
