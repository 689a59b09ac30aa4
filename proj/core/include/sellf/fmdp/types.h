#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "sellf/approx/mlp.h"
#include "sellf/common.h"
#include "sellf/envs/env_spec.h"

namespace sellf::fmdp {

// a * (y - c). Throws ConfigError unless c lies in (0, 1).
double Reward(int y, int a, double cost);

struct Individual {
  std::int64_t id = 0;
  GroupId z = 0;
  Features x;
};

// What a learner may see about one step. The true label of a rejected
// individual is never stored here.
struct TransitionRecord {
  GroupId z = 0;
  Features x;
  int a = 0;
  std::optional<int> y_obs;  // present iff a == 1
  int y_tilde = 0;
  double reward = 0.0;
  Features x_next;
  double pi_behavior = 0.0;  // acceptance probability actually used
  double pi_network = 0.0;   // raw policy probability
  double delta_tilde_running = 0.0;
  double delta_accepted_running = 0.0;
  std::int64_t t = 0;
  std::int64_t episode = 0;
  std::int64_t individual_id = 0;
};

// Simulator-side ground truth, kept in a separate channel so only oracle
// code paths can consume it.
struct HiddenRecord {
  int y_true = 0;
  double delta_true_running = 0.0;
};

struct AcceptedSample {
  GroupId z = 0;
  Features x;
  int y = 0;
  std::int64_t iteration = 0;
};

// Labeled samples gathered across every collection window.
class MemoryBuffer {
 public:
  void Add(AcceptedSample sample) { samples_.push_back(std::move(sample)); }
  const std::vector<AcceptedSample>& samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  std::vector<std::size_t> IndicesOfGroup(GroupId z) const;

 private:
  std::vector<AcceptedSample> samples_;
};

// Anything that maps (x, z) to a probability: policies and predictors.
class DecisionModel {
 public:
  virtual ~DecisionModel() = default;
  virtual double Probability(std::span<const double> x, GroupId z) const = 0;
};

class ConstantModel final : public DecisionModel {
 public:
  explicit ConstantModel(double p) : p_(p) {}
  double Probability(std::span<const double>, GroupId) const override {
    return p_;
  }

 private:
  double p_;
};

class FunctionModel final : public DecisionModel {
 public:
  using Fn = std::function<double(std::span<const double>, GroupId)>;
  explicit FunctionModel(Fn fn) : fn_(std::move(fn)) {}
  double Probability(std::span<const double> x, GroupId z) const override {
    return fn_(x, z);
  }

 private:
  Fn fn_;
};

// A network evaluated on the environment's input encoding.
class NetworkModel final : public DecisionModel {
 public:
  NetworkModel(const approx::Mlp& net, const envs::EnvSpec& env);
  double Probability(std::span<const double> x, GroupId z) const override;

 private:
  const approx::Mlp& net_;
  const envs::EnvSpec& env_;
};

enum class ActionRule { kStochastic, kSemiStochastic };

inline constexpr double kSemiStochasticThreshold = 0.25;

// Acceptance probability after the rule: the semi-stochastic rule rejects
// outright below the threshold.
inline double EffectiveAcceptProb(double p, ActionRule rule) {
  if (rule == ActionRule::kSemiStochastic && p < kSemiStochasticThreshold) {
    return 0.0;
  }
  return p;
}

int SemiStochasticAction(double pi, Rng& rng);

}  // namespace sellf::fmdp
