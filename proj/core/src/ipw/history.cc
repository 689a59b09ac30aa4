#include "sellf/ipw/history.h"

#include <algorithm>
#include <numeric>

namespace sellf::ipw {

PolicyHistory::PolicyHistory(int subsample_size)
    : subsample_size_(subsample_size) {
  if (subsample_size < 0) throw ConfigError("subsample size must be >= 0");
}

void PolicyHistory::Append(std::int64_t iteration, approx::Mlp policy) {
  if (!snapshots_.empty() && iteration <= snapshots_.back().iteration) {
    throw ConfigError("policy snapshots must have increasing iterations");
  }
  snapshots_.push_back(
      {iteration, std::make_shared<const approx::Mlp>(std::move(policy))});
}

std::vector<std::size_t> PolicyHistory::Subsample(Rng& rng) const {
  if (snapshots_.empty()) throw ConfigError("empty policy history");
  const std::size_t predecessors = snapshots_.size() - 1;
  std::vector<std::size_t> pick(predecessors);
  std::iota(pick.begin(), pick.end(), 0);
  const std::size_t keep =
      std::min(predecessors, static_cast<std::size_t>(subsample_size_));
  // Partial Fisher-Yates with a fixed number of draws per kept element.
  for (std::size_t i = 0; i < keep; ++i) {
    const std::size_t span = predecessors - i;
    const auto j = i + std::min(static_cast<std::size_t>(UniformUnit(rng) * span),
                                span - 1);
    std::swap(pick[i], pick[j]);
  }
  pick.resize(keep);
  std::sort(pick.begin(), pick.end());
  pick.push_back(predecessors);
  return pick;
}

double CumulativeAcceptProb(std::span<const double> probs) {
  double reject = 1.0;
  for (double p : probs) reject *= 1.0 - p;
  return 1.0 - reject;
}

SnapshotSet::SnapshotSet(const PolicyHistory& history,
                         std::vector<std::size_t> selected,
                         const envs::EnvSpec& env, fmdp::ActionRule rule)
    : history_(history), selected_(std::move(selected)), env_(env), rule_(rule) {
  if (selected_.empty() || selected_.back() + 1 != history.size()) {
    throw ConfigError("snapshot selection must end with the current policy");
  }
}

double SnapshotSet::SnapshotProb(std::size_t k,
                                 std::span<const double> input) const {
  const double p = history_.snapshots()[k].policy->Probability(input);
  return fmdp::EffectiveAcceptProb(p, rule_);
}

double SnapshotSet::PredecessorRejectProduct(std::span<const double> x,
                                             GroupId z) const {
  const Features input = env_.EncodeInput(x, z);
  double product = 1.0;
  for (std::size_t i = 0; i + 1 < selected_.size(); ++i) {
    product *= 1.0 - SnapshotProb(selected_[i], input);
  }
  return product;
}

double SnapshotSet::CurrentAcceptProb(std::span<const double> x,
                                      GroupId z) const {
  return SnapshotProb(selected_.back(), env_.EncodeInput(x, z));
}

double SnapshotSet::CumulativeAcceptProb(std::span<const double> x,
                                         GroupId z) const {
  const Features input = env_.EncodeInput(x, z);
  std::vector<double> probs;
  probs.reserve(selected_.size());
  for (std::size_t k : selected_) probs.push_back(SnapshotProb(k, input));
  return ipw::CumulativeAcceptProb(probs);
}

double Weight(double p_current, double cumulative, double accept_rate_cum,
              double reject_rate, std::int64_t* floor_events) {
  if (!(reject_rate > 0.0)) {
    throw EstimationError("weight needs a positive rejection rate");
  }
  if (cumulative < kOverlapFloor) {
    cumulative = kOverlapFloor;
    if (floor_events) ++*floor_events;
  }
  return accept_rate_cum / reject_rate * (1.0 - p_current) / cumulative;
}

double RenyiD2(std::span<const double> weights) {
  if (weights.empty()) throw EstimationError("no weights for d2");
  double s = 0.0;
  for (double w : weights) s += w * w;
  return s / static_cast<double>(weights.size());
}

std::vector<double> SelfNormalize(std::span<const double> weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (weights.empty() || !(total > 0.0)) {
    throw EstimationError("weights sum to zero");
  }
  std::vector<double> out(weights.begin(), weights.end());
  for (double& w : out) w /= total;
  return out;
}

}  // namespace sellf::ipw
