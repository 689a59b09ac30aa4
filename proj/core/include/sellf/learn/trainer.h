#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "sellf/approx/adam.h"
#include "sellf/approx/mlp.h"
#include "sellf/envs/env_spec.h"
#include "sellf/fmdp/simulator.h"
#include "sellf/ipw/history.h"
#include "sellf/learn/config.h"

namespace sellf::learn {

struct GroupIterationStats {
  double r = 0.0;          // window rejection rate under the deployed policy
  double phi_tilde = 0.0;  // window P(y_tilde = 1)
  double accept_rate_cum = 0.0;
  double eps_hat = 0.0;
  double eps_bar = 1.0;
  double d2 = 0.0;
  std::int64_t n_memory = 0;  // accepted samples stored for the group
  std::int64_t n_eval = 0;    // samples behind eps_hat and d2
};

struct IterationMetrics {
  std::int64_t iteration = 0;
  std::int64_t steps = 0;
  double reward_window = 0.0;
  double resource = 0.0;
  double delta_observed = 0.0;
  double delta_accepted = 0.0;
  // Instrumentation from the hidden channel; never fed back to non-oracle
  // learners.
  double delta_true = 0.0;
  std::vector<GroupIterationStats> groups;
  double renyi = 0.0;  // Renyi loss of the deployed policy on the window
  double max_weight = 0.0;
  double min_cum_accept = 1.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double predictor_loss = 0.0;
  double predictor_lr = 0.0;
  std::int64_t floor_events = 0;
  bool disparity_ok = false;
  bool bias_ok = false;
};

struct TrainHooks {
  // Flips hidden labels of rejected individuals (firewall tests).
  bool poison_hidden_labels = false;
  std::function<void(const IterationMetrics&)> on_iteration;
};

// Thrown when a loss or gradient turns non-finite. Carries the networks at
// the last good state so callers can write a diagnostic checkpoint.
class TrainingError : public NumericalError {
 public:
  TrainingError(const std::string& what, std::int64_t iteration,
                approx::Mlp policy, approx::Mlp predictor)
      : NumericalError(what),
        iteration_(iteration),
        policy_(std::move(policy)),
        predictor_(std::move(predictor)) {}
  std::int64_t iteration() const { return iteration_; }
  const approx::Mlp& policy() const { return policy_; }
  const approx::Mlp& predictor() const { return predictor_; }

 private:
  std::int64_t iteration_;
  approx::Mlp policy_;
  approx::Mlp predictor_;
};

double DefaultPseudoDim(approx::Architecture arch, int input_dim);

// Alg. 1 as a resumable loop: each RunIteration collects one window and
// performs every update for it.
class Trainer {
 public:
  Trainer(TrainConfig config, const envs::EnvSpec& env, TrainHooks hooks = {});

  bool done() const { return iteration_ >= config_.Iterations(); }
  IterationMetrics RunIteration();
  std::vector<IterationMetrics> RunAll();

  const approx::Mlp& policy() const { return policy_; }
  const approx::Mlp& value() const { return value_; }
  const approx::Mlp& predictor() const { return predictor_; }
  const ipw::PolicyHistory& history() const { return history_; }
  const fmdp::MemoryBuffer& memory() const { return memory_; }
  const TrainConfig& config() const { return config_; }
  std::int64_t iteration() const { return iteration_; }

 private:
  struct Window;

  void UpdatePredictor(const Window& w, IterationMetrics& m);
  void UpdatePolicyAndValue(const Window& w, IterationMetrics& m);
  void EvaluateBias(const Window& w, IterationMetrics& m);
  std::vector<double> Penalties(const fmdp::Rollout& rollout) const;
  [[noreturn]] void Fail(const std::string& what) const;

  TrainConfig config_;
  const envs::EnvSpec& env_;
  TrainHooks hooks_;
  fmdp::ActionRule rule_;
  double pdim_;

  Rng init_rng_;
  Rng predictor_rng_;
  Rng shuffle_rng_;
  Rng subsample_rng_;
  Rng metrics_rng_;

  approx::Mlp policy_;
  approx::Mlp value_;
  approx::Mlp predictor_;
  approx::Adam policy_opt_;
  approx::Adam value_opt_;
  approx::Adam predictor_opt_;
  double predictor_lr_;

  fmdp::RunState run_;
  fmdp::MemoryBuffer memory_;
  ipw::PolicyHistory history_;
  std::int64_t iteration_ = 0;
  std::int64_t floor_events_ = 0;
};

}  // namespace sellf::learn
