#include "sellf/learn/losses.h"

#include <algorithm>
#include <cmath>

#include "sellf/approx/mlp.h"
#include "sellf/ipw/history.h"

namespace sellf::learn {

AdvantageEstimate ComputeAdvantages(std::span<const double> rewards,
                                    std::span<const double> values,
                                    double bootstrap_value, double gamma,
                                    double gae_lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n) {
    throw ConfigError("rewards and values must have the same length");
  }
  AdvantageEstimate out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  double gae = 0.0;
  double ret = bootstrap_value;
  double next_value = bootstrap_value;
  for (std::size_t k = n; k-- > 0;) {
    const double td = rewards[k] + gamma * next_value - values[k];
    gae = td + gamma * gae_lambda * gae;
    out.advantages[k] = gae;
    ret = rewards[k] + gamma * ret;
    out.returns[k] = ret;
    next_value = values[k];
  }
  return out;
}

double DisparityPenalty(double delta, double threshold, double beta1) {
  return beta1 * std::max(std::abs(delta) - threshold, 0.0);
}

double PocarPenalty(double delta_now, double delta_next, double omega,
                    double beta1, double beta2) {
  double penalty = DisparityPenalty(delta_now, omega, beta1);
  if (std::abs(delta_now) > omega) {
    penalty += beta2 * std::max(std::abs(delta_next) - std::abs(delta_now), 0.0);
  }
  return penalty;
}

double PpoClipLoss(const Eigen::RowVectorXd& logits, const PpoBatch& batch,
                   double clip_eps, Eigen::RowVectorXd& dlogits) {
  const Eigen::Index n = logits.size();
  if (static_cast<Eigen::Index>(batch.actions.size()) != n ||
      static_cast<Eigen::Index>(batch.old_accept_probs.size()) != n ||
      static_cast<Eigen::Index>(batch.advantages.size()) != n || n == 0) {
    throw ConfigError("PPO batch does not match the logits");
  }
  dlogits.setZero(n);
  double total = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double p = approx::Sigmoid(logits[j]);
    const int a = batch.actions[j];
    const double old = a == 1 ? batch.old_accept_probs[j]
                              : 1.0 - batch.old_accept_probs[j];
    if (!(old > 0.0)) {
      throw NumericalError("old action probability is zero");
    }
    const double prob = a == 1 ? p : 1.0 - p;
    // d prob / d logit: +p(1-p) for acceptance, -p(1-p) for rejection.
    const double dprob = (a == 1 ? 1.0 : -1.0) * p * (1.0 - p);
    const double ratio = prob / old;
    const double adv = batch.advantages[j];
    const double clipped = std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps);
    const double unclipped_term = ratio * adv;
    const double clipped_term = clipped * adv;
    if (unclipped_term <= clipped_term) {
      total += unclipped_term;
      dlogits[j] = -adv * dprob / old;
    } else {
      total += clipped_term;  // flat in the parameters
    }
  }
  dlogits /= static_cast<double>(n);
  return -total / static_cast<double>(n);
}

double RenyiLoss(const Eigen::RowVectorXd& logits, const RenyiBatch& batch,
                 Eigen::RowVectorXd& dlogits, std::int64_t* floor_events) {
  const Eigen::Index n = logits.size();
  if (static_cast<Eigen::Index>(batch.groups.size()) != n ||
      static_cast<Eigen::Index>(batch.predecessor_reject.size()) != n) {
    throw ConfigError("Renyi batch does not match the logits");
  }
  const std::size_t groups = batch.group_scale.size();
  if (batch.accept_rate_cum.size() != groups ||
      batch.reject_rate.size() != groups) {
    throw ConfigError("Renyi batch group terms are inconsistent");
  }
  std::vector<int> count(groups, 0);
  for (GroupId z : batch.groups) {
    if (z < 0 || static_cast<std::size_t>(z) >= groups) {
      throw ConfigError("Renyi batch group out of range");
    }
    ++count[z];
  }
  dlogits.setZero(n);
  double total = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const GroupId z = batch.groups[j];
    const double r = batch.reject_rate[z];
    if (!(r > 0.0)) continue;  // nothing rejected: no shift to correct
    const double k = batch.group_scale[z] * batch.accept_rate_cum[z] /
                     (r * r * static_cast<double>(count[z]));
    const double p = approx::Sigmoid(logits[j]);
    const double u = 1.0 - p;
    const double q = batch.predecessor_reject[j];
    const double c = 1.0 - u * q;
    const double du = -p * (1.0 - p);
    if (c < ipw::kOverlapFloor) {
      if (floor_events) ++*floor_events;
      total += k * u * u / ipw::kOverlapFloor;
      dlogits[j] = k * 2.0 * u / ipw::kOverlapFloor * du;
      continue;
    }
    total += k * u * u / c;
    // d/du [u^2 / (1 - u q)] = u (2 - u q) / (1 - u q)^2
    dlogits[j] = k * u * (2.0 - u * q) / (c * c) * du;
  }
  return total;
}

double WeightedCrossEntropy(const Eigen::RowVectorXd& logits,
                            std::span<const int> labels,
                            std::span<const double> weights,
                            std::span<const GroupId> groups, int group_count,
                            Eigen::RowVectorXd& dlogits) {
  const Eigen::Index n = logits.size();
  if (static_cast<Eigen::Index>(labels.size()) != n ||
      static_cast<Eigen::Index>(weights.size()) != n ||
      static_cast<Eigen::Index>(groups.size()) != n) {
    throw ConfigError("cross-entropy batch does not match the logits");
  }
  std::vector<double> weight_sum(group_count, 0.0);
  for (Eigen::Index j = 0; j < n; ++j) {
    if (groups[j] < 0 || groups[j] >= group_count) {
      throw ConfigError("cross-entropy group out of range");
    }
    weight_sum[groups[j]] += weights[j];
  }
  dlogits.setZero(n);
  double total = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double s = weight_sum[groups[j]];
    if (!(s > 0.0)) continue;
    const double x = logits[j];
    // softplus(x) - y x, evaluated without overflow.
    const double softplus =
        x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
    const double w = weights[j] / s;
    total += w * (softplus - labels[j] * x);
    dlogits[j] = w * (approx::Sigmoid(x) - labels[j]);
  }
  return total;
}

double ValueLoss(const Eigen::RowVectorXd& values,
                 std::span<const double> targets, double value_coef,
                 Eigen::RowVectorXd& dvalues) {
  const Eigen::Index n = values.size();
  if (static_cast<Eigen::Index>(targets.size()) != n || n == 0) {
    throw ConfigError("value batch does not match the targets");
  }
  dvalues.resize(n);
  double total = 0.0;
  const double scale = value_coef / static_cast<double>(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double diff = values[j] - targets[j];
    total += diff * diff;
    dvalues[j] = 2.0 * scale * diff;
  }
  return scale * total;
}

}  // namespace sellf::learn
