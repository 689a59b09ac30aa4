#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "sellf/approx/mlp.h"
#include "sellf/envs/env_spec.h"
#include "sellf/fmdp/types.h"

namespace sellf::ipw {

inline constexpr int kDefaultSubsample = 10;
inline constexpr double kOverlapFloor = 1e-6;

struct PolicySnapshot {
  std::int64_t iteration = 0;
  std::shared_ptr<const approx::Mlp> policy;
};

// Append-only record of every deployed policy. The last snapshot is the
// current policy.
class PolicyHistory {
 public:
  explicit PolicyHistory(int subsample_size = kDefaultSubsample);

  // Throws ConfigError unless iterations strictly increase.
  void Append(std::int64_t iteration, approx::Mlp policy);

  const std::vector<PolicySnapshot>& snapshots() const { return snapshots_; }
  std::size_t size() const { return snapshots_.size(); }
  int subsample_size() const { return subsample_size_; }

  // Up to subsample_size predecessors drawn without replacement, followed
  // by the current policy. Indices are returned in increasing order.
  std::vector<std::size_t> Subsample(Rng& rng) const;

 private:
  int subsample_size_;
  std::vector<PolicySnapshot> snapshots_;
};

// 1 - prod_k (1 - p_k).
double CumulativeAcceptProb(std::span<const double> probs);

// Acceptance probabilities of the selected snapshots evaluated through the
// environment encoding, after the action rule.
class SnapshotSet {
 public:
  SnapshotSet(const PolicyHistory& history, std::vector<std::size_t> selected,
              const envs::EnvSpec& env, fmdp::ActionRule rule);

  // prod over selected predecessors (every selected snapshot except the
  // current one) of (1 - p_k(x, z)).
  double PredecessorRejectProduct(std::span<const double> x, GroupId z) const;
  double CurrentAcceptProb(std::span<const double> x, GroupId z) const;
  double CumulativeAcceptProb(std::span<const double> x, GroupId z) const;

  const std::vector<std::size_t>& selected() const { return selected_; }

 private:
  double SnapshotProb(std::size_t k, std::span<const double> input) const;

  const PolicyHistory& history_;
  std::vector<std::size_t> selected_;
  const envs::EnvSpec& env_;
  fmdp::ActionRule rule_;
};

// w = (accept_rate_cum / reject_rate) * (1 - p_current) / cumulative, with
// the cumulative acceptance probability floored at kOverlapFloor. Each
// floored evaluation increments *floor_events when given.
double Weight(double p_current, double cumulative, double accept_rate_cum,
              double reject_rate, std::int64_t* floor_events = nullptr);

// Mean of squared weights. Throws EstimationError on an empty sample.
double RenyiD2(std::span<const double> weights);

// Divides by the sum. Throws EstimationError on a zero or empty sum.
std::vector<double> SelfNormalize(std::span<const double> weights);

}  // namespace sellf::ipw
