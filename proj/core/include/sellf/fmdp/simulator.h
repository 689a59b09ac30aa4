#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sellf/envs/env_spec.h"
#include "sellf/fmdp/types.h"
#include "sellf/metrics/joint_mass.h"

namespace sellf::fmdp {

inline constexpr double kStartingResource = 1000.0;

// Individuals keep their pool position for the whole run, so an id is also
// the index into `pool`.
struct RunState {
  std::vector<Individual> pool;
  double resource = kStartingResource;
  std::uint64_t seed = 0;
  Rng rng;
  std::int64_t step_counter = 0;
  std::int64_t episode = 0;
  // Drawn at the end of the previous step so the state that follows a
  // collection window is known when bootstrapping values.
  std::size_t pending = 0;
};

// Draws a fresh pool from the environment's initial distribution.
// pool_size <= 0 uses the environment default.
RunState InitRunState(const envs::EnvSpec& env, std::uint64_t seed,
                      int pool_size = 0);

struct StepOptions {
  ActionRule rule = ActionRule::kStochastic;
  // Test instrumentation: flips the hidden label of every rejected
  // individual in the ground-truth channel. Dynamics and random draws are
  // untouched.
  bool poison_hidden_labels = false;
};

struct StepResult {
  TransitionRecord record;
  HiddenRecord hidden;
};

// One F-MDP step. Every step consumes exactly four uniform draws (action,
// label, prediction, next individual) so streams stay aligned across
// policies.
StepResult SampleStep(RunState& run, const envs::EnvSpec& env,
                      const DecisionModel& policy,
                      const DecisionModel& predictor,
                      const StepOptions& options = {});

struct Rollout {
  std::vector<TransitionRecord> records;
  std::vector<HiddenRecord> hidden;
  // Window tallies per group: observed is over (y_tilde, a), truth over
  // (y, a).
  std::vector<metrics::JointMass> observed;
  std::vector<metrics::JointMass> truth;
  Features bootstrap_x;
  GroupId bootstrap_z = 0;
};

// Runs n_steps steps as one episode. Running disparities are computed from
// within-window counts and stay 0 while any group's cell is empty. Accepted
// samples are appended to `memory` when it is given.
Rollout CollectRollout(RunState& run, const envs::EnvSpec& env,
                       const DecisionModel& policy,
                       const DecisionModel& predictor, FairnessNotion notion,
                       int n_steps, const StepOptions& options,
                       MemoryBuffer* memory, std::int64_t iteration);

// Exact population masses over the current pool for a fixed policy,
// maintained incrementally as individuals change.
class PoolDisparityTracker {
 public:
  PoolDisparityTracker(const envs::EnvSpec& env, const DecisionModel& policy,
                       ActionRule rule, const std::vector<Individual>& pool);

  void Update(const Individual& individual);

  std::optional<double> Gap(FairnessNotion notion) const;
  const std::vector<metrics::JointMass>& masses() const { return masses_; }

 private:
  struct Contribution {
    double m[2][2];
  };
  Contribution Evaluate(const Individual& individual) const;
  void Refresh();

  const envs::EnvSpec& env_;
  const DecisionModel& policy_;
  ActionRule rule_;
  std::vector<GroupId> groups_;
  std::vector<Contribution> contributions_;
  std::vector<metrics::JointMass> masses_;
  int updates_since_refresh_ = 0;
};

}  // namespace sellf::fmdp
