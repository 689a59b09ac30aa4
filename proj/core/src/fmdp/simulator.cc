#include "sellf/fmdp/simulator.h"

#include <algorithm>

namespace sellf::fmdp {

namespace {

std::size_t DrawIndex(double u, std::size_t n) {
  return std::min(static_cast<std::size_t>(u * static_cast<double>(n)), n - 1);
}

std::size_t DrawCategorical(double u, const std::vector<double>& cumulative) {
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  const auto idx = static_cast<std::size_t>(it - cumulative.begin());
  return std::min(idx, cumulative.size() - 1);
}

std::vector<double> Cumulative(const std::vector<double>& probs) {
  std::vector<double> c(probs.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) c[i] = acc += probs[i];
  return c;
}

}  // namespace

RunState InitRunState(const envs::EnvSpec& env, std::uint64_t seed,
                      int pool_size) {
  const int n = pool_size > 0 ? pool_size : env.pool_size;
  RunState run;
  run.seed = seed;
  run.rng.seed(seed);
  const auto prior = Cumulative(env.group_prior);
  std::vector<std::vector<double>> init;
  for (const auto& row : env.init_probs) init.push_back(Cumulative(row));
  run.pool.reserve(n);
  for (int i = 0; i < n; ++i) {
    Individual ind;
    ind.id = i;
    ind.z = static_cast<GroupId>(DrawCategorical(UniformUnit(run.rng), prior));
    ind.x = env.support[DrawCategorical(UniformUnit(run.rng), init[ind.z])];
    run.pool.push_back(std::move(ind));
  }
  run.pending = DrawIndex(UniformUnit(run.rng), run.pool.size());
  return run;
}

StepResult SampleStep(RunState& run, const envs::EnvSpec& env,
                      const DecisionModel& policy,
                      const DecisionModel& predictor,
                      const StepOptions& options) {
  if (run.pool.empty()) throw EnvironmentError("empty pool");
  Individual& ind = run.pool[run.pending];
  const double u_action = UniformUnit(run.rng);
  const double u_label = UniformUnit(run.rng);
  const double u_predict = UniformUnit(run.rng);
  const double u_next = UniformUnit(run.rng);

  StepResult out;
  TransitionRecord& rec = out.record;
  rec.z = ind.z;
  rec.x = ind.x;
  rec.pi_network = policy.Probability(ind.x, ind.z);
  rec.pi_behavior = EffectiveAcceptProb(rec.pi_network, options.rule);
  rec.a = u_action < rec.pi_behavior ? 1 : 0;
  const int y = u_label < env.Alpha(ind.x, ind.z) ? 1 : 0;
  if (rec.a == 1) {
    rec.y_obs = y;
    rec.y_tilde = y;
  } else {
    rec.y_tilde = u_predict < predictor.Probability(ind.x, ind.z) ? 1 : 0;
  }
  rec.reward = Reward(y, rec.a, env.cost);
  rec.x_next = env.Transition(ind.x, rec.a, y);
  rec.t = run.step_counter;
  rec.episode = run.episode;
  rec.individual_id = ind.id;

  out.hidden.y_true = (options.poison_hidden_labels && rec.a == 0) ? 1 - y : y;

  ind.x = rec.x_next;
  run.resource += rec.reward;
  ++run.step_counter;
  run.pending = DrawIndex(u_next, run.pool.size());
  return out;
}

Rollout CollectRollout(RunState& run, const envs::EnvSpec& env,
                       const DecisionModel& policy,
                       const DecisionModel& predictor, FairnessNotion notion,
                       int n_steps, const StepOptions& options,
                       MemoryBuffer* memory, std::int64_t iteration) {
  if (n_steps < 1) throw ConfigError("n_steps must be >= 1");
  Rollout out;
  out.records.reserve(n_steps);
  out.hidden.reserve(n_steps);
  out.observed.assign(env.group_count, {});
  out.truth.assign(env.group_count, {});
  for (int i = 0; i < n_steps; ++i) {
    StepResult step = SampleStep(run, env, policy, predictor, options);
    TransitionRecord& rec = step.record;
    out.observed[rec.z].Add(rec.y_tilde, rec.a);
    out.truth[rec.z].Add(step.hidden.y_true, rec.a);
    rec.delta_tilde_running = metrics::Gap(out.observed, notion).value_or(0.0);
    rec.delta_accepted_running =
        metrics::AcceptedGap(out.observed, notion).value_or(0.0);
    step.hidden.delta_true_running =
        metrics::Gap(out.truth, notion).value_or(0.0);
    if (memory && rec.a == 1) {
      memory->Add({rec.z, rec.x, *rec.y_obs, iteration});
    }
    out.records.push_back(std::move(rec));
    out.hidden.push_back(step.hidden);
  }
  ++run.episode;
  out.bootstrap_x = run.pool[run.pending].x;
  out.bootstrap_z = run.pool[run.pending].z;
  return out;
}

PoolDisparityTracker::PoolDisparityTracker(const envs::EnvSpec& env,
                                           const DecisionModel& policy,
                                           ActionRule rule,
                                           const std::vector<Individual>& pool)
    : env_(env), policy_(policy), rule_(rule) {
  groups_.reserve(pool.size());
  contributions_.reserve(pool.size());
  for (const auto& ind : pool) {
    groups_.push_back(ind.z);
    contributions_.push_back(Evaluate(ind));
  }
  Refresh();
}

PoolDisparityTracker::Contribution PoolDisparityTracker::Evaluate(
    const Individual& ind) const {
  const double alpha = env_.Alpha(ind.x, ind.z);
  const double pi = EffectiveAcceptProb(policy_.Probability(ind.x, ind.z), rule_);
  Contribution c;
  c.m[1][1] = alpha * pi;
  c.m[1][0] = alpha * (1.0 - pi);
  c.m[0][1] = (1.0 - alpha) * pi;
  c.m[0][0] = (1.0 - alpha) * (1.0 - pi);
  return c;
}

void PoolDisparityTracker::Refresh() {
  masses_.assign(env_.group_count, {});
  for (std::size_t i = 0; i < contributions_.size(); ++i) {
    auto& m = masses_[groups_[i]];
    for (int y = 0; y < 2; ++y) {
      for (int a = 0; a < 2; ++a) m.cell[y][a] += contributions_[i].m[y][a];
    }
  }
  updates_since_refresh_ = 0;
}

void PoolDisparityTracker::Update(const Individual& ind) {
  const auto idx = static_cast<std::size_t>(ind.id);
  const Contribution next = Evaluate(ind);
  auto& m = masses_[groups_[idx]];
  for (int y = 0; y < 2; ++y) {
    for (int a = 0; a < 2; ++a) {
      m.cell[y][a] += next.m[y][a] - contributions_[idx].m[y][a];
    }
  }
  contributions_[idx] = next;
  // Periodic resummation keeps incremental rounding drift bounded.
  if (++updates_since_refresh_ >= 4096) Refresh();
}

std::optional<double> PoolDisparityTracker::Gap(FairnessNotion notion) const {
  return metrics::Gap(masses_, notion);
}

}  // namespace sellf::fmdp
