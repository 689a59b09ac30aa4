#include "sellf/learn/trainer.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sellf/learn/losses.h"
#include "sellf/metrics/bounds.h"
#include "sellf/metrics/disparity.h"

namespace sellf::learn {

namespace {

// Independent generator streams per run. Keeping them apart means switching
// a component on or off (predictor training, metrics) never shifts the
// draws seen by another.
enum Stream : std::uint64_t {
  kEnvStream = 1,
  kInitStream = 2,
  kPredictorStream = 3,
  kShuffleStream = 4,
  kSubsampleStream = 5,
  kMetricsStream = 6,
};

bool IsFinite(const Eigen::VectorXd& v) { return v.allFinite(); }

Eigen::MatrixXd EncodeBatch(const envs::EnvSpec& env,
                            const std::vector<const Features*>& xs,
                            const std::vector<GroupId>& zs) {
  Eigen::MatrixXd inputs(env.input_dim(), static_cast<Eigen::Index>(xs.size()));
  for (std::size_t j = 0; j < xs.size(); ++j) {
    env.EncodeInput(*xs[j], zs[j],
                    std::span<double>(inputs.col(static_cast<Eigen::Index>(j)).data(),
                                      static_cast<std::size_t>(env.input_dim())));
  }
  return inputs;
}

Eigen::RowVectorXd Probabilities(const approx::Mlp& net,
                                 const Eigen::MatrixXd& inputs) {
  return net.Forward(inputs).unaryExpr([](double s) { return approx::Sigmoid(s); });
}

// Per column: the deployed policy's acceptance probability and the product
// of (1 - p_k) over the selected predecessors, both after the action rule.
struct SnapshotTerms {
  std::vector<double> current;
  std::vector<double> predecessor_reject;
  std::vector<double> cumulative;
};

SnapshotTerms EvaluateSnapshots(const ipw::PolicyHistory& history,
                                const std::vector<std::size_t>& selected,
                                const Eigen::MatrixXd& inputs,
                                fmdp::ActionRule rule) {
  const auto n = static_cast<std::size_t>(inputs.cols());
  SnapshotTerms t;
  t.predecessor_reject.assign(n, 1.0);
  t.current.assign(n, 0.0);
  t.cumulative.assign(n, 0.0);
  for (std::size_t s = 0; s < selected.size(); ++s) {
    const auto probs = Probabilities(*history.snapshots()[selected[s]].policy, inputs);
    const bool is_current = s + 1 == selected.size();
    for (std::size_t j = 0; j < n; ++j) {
      const double p = fmdp::EffectiveAcceptProb(probs[static_cast<Eigen::Index>(j)], rule);
      if (is_current) {
        t.current[j] = p;
      } else {
        t.predecessor_reject[j] *= 1.0 - p;
      }
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    t.cumulative[j] = 1.0 - (1.0 - t.current[j]) * t.predecessor_reject[j];
  }
  return t;
}

// Groups with nothing rejected have no shift to correct.
double GroupWeight(double p_current, double cumulative, double accept_rate_cum,
                   double reject_rate, std::int64_t* floor_events) {
  if (!(reject_rate > 0.0)) return 1.0;
  return ipw::Weight(p_current, cumulative, accept_rate_cum, reject_rate,
                     floor_events);
}

}  // namespace

double DefaultPseudoDim(approx::Architecture arch, int input_dim) {
  switch (arch) {
    case approx::Architecture::kLinear:
      return metrics::LinearPseudoDim(input_dim);
    case approx::Architecture::kTanhMlp:
    case approx::Architecture::kReluMlp:
      return metrics::ReluPseudoDim(approx::Mlp::ParameterCount(arch, input_dim), 3);
  }
  return metrics::LinearPseudoDim(input_dim);
}

// Everything the updates need about one collection window.
struct Trainer::Window {
  fmdp::Rollout rollout;
  Eigen::MatrixXd inputs;
  SnapshotTerms snap;
  std::vector<std::size_t> selected;
  std::vector<double> reject_rate;      // r^i
  std::vector<double> accept_rate_cum;  // a^i
  std::vector<double> phi_tilde;
  std::vector<double> renyi_scale;      // c^i
};

Trainer::Trainer(TrainConfig config, const envs::EnvSpec& env, TrainHooks hooks)
    : config_((config.Validate(), std::move(config))),
      env_(env),
      hooks_(std::move(hooks)),
      rule_(RuleFor(config_.algorithm)),
      pdim_(config_.pdim > 0.0
                ? config_.pdim
                : DefaultPseudoDim(config_.predictor_arch, env.input_dim())),
      init_rng_(DeriveSeed(config_.seed, kInitStream)),
      predictor_rng_(DeriveSeed(config_.seed, kPredictorStream)),
      shuffle_rng_(DeriveSeed(config_.seed, kShuffleStream)),
      subsample_rng_(DeriveSeed(config_.seed, kSubsampleStream)),
      metrics_rng_(DeriveSeed(config_.seed, kMetricsStream)),
      policy_(approx::MakeInitialized(approx::Architecture::kTanhMlp,
                                      env.input_dim(), init_rng_, 0.01)),
      value_(approx::MakeInitialized(approx::Architecture::kTanhMlp,
                                     env.input_dim(), init_rng_, 1.0)),
      predictor_(approx::MakeInitialized(config_.predictor_arch, env.input_dim(),
                                         predictor_rng_, 1.0)),
      policy_opt_(policy_.parameter_count()),
      value_opt_(value_.parameter_count()),
      predictor_opt_(predictor_.parameter_count()),
      predictor_lr_(config_.lr_predictor),
      run_(fmdp::InitRunState(env, DeriveSeed(config_.seed, kEnvStream),
                              config_.pool_size)),
      history_(config_.subsample) {}

void Trainer::Fail(const std::string& what) const {
  throw TrainingError("iteration " + std::to_string(iteration_) + ": " + what,
                      iteration_, policy_, predictor_);
}

std::vector<double> Trainer::Penalties(const fmdp::Rollout& rollout) const {
  const auto& recs = rollout.records;
  const std::size_t n = recs.size();
  std::vector<double> penalty(n, 0.0);
  const double b1 = config_.beta1, b2 = config_.beta2, omega = config_.omega;
  switch (config_.algorithm) {
    case Algorithm::kPpo:
      break;
    case Algorithm::kPocar:
    case Algorithm::kPocarOracle: {
      const bool oracle = config_.algorithm == Algorithm::kPocarOracle;
      auto delta = [&](std::size_t t) {
        return oracle ? rollout.hidden[t].delta_true_running
                      : recs[t].delta_accepted_running;
      };
      for (std::size_t t = 0; t < n; ++t) {
        const double next = delta(std::min(t + 1, n - 1));
        penalty[t] = PocarPenalty(delta(t), next, omega, b1, b2);
      }
      break;
    }
    case Algorithm::kSellf:
    case Algorithm::kSellfSemiStochastic: {
      // Qualification parity does not depend on the action taken at t, so
      // the penalty looks one step ahead.
      const bool shifted = config_.notion == FairnessNotion::kQualificationParity;
      for (std::size_t t = 0; t < n; ++t) {
        const std::size_t k = shifted ? std::min(t + 1, n - 1) : t;
        penalty[t] = DisparityPenalty(recs[k].delta_tilde_running, 0.5 * omega, b1);
      }
      break;
    }
  }
  return penalty;
}

IterationMetrics Trainer::RunIteration() {
  if (done()) throw ConfigError("training already finished");
  IterationMetrics m;
  m.iteration = iteration_;
  const int groups = env_.group_count;

  history_.Append(iteration_, policy_);
  if (config_.reset_pool && iteration_ > 0) {
    fmdp::RunState fresh = fmdp::InitRunState(
        env_, DeriveSeed(run_.seed, static_cast<std::uint64_t>(iteration_)),
        config_.pool_size);
    run_.pool = std::move(fresh.pool);
    run_.pending = fresh.pending;
  }
  Window w;
  {
    const fmdp::NetworkModel policy(policy_, env_);
    const fmdp::NetworkModel predictor(predictor_, env_);
    fmdp::StepOptions options;
    options.rule = rule_;
    options.poison_hidden_labels = hooks_.poison_hidden_labels;
    w.rollout = fmdp::CollectRollout(run_, env_, policy, predictor, config_.notion,
                                     config_.n_steps, options, &memory_, iteration_);
  }
  const auto& recs = w.rollout.records;
  const std::size_t n = recs.size();
  m.steps = run_.step_counter;
  m.resource = run_.resource;
  for (const auto& r : recs) m.reward_window += r.reward;
  m.delta_observed = metrics::Gap(w.rollout.observed, config_.notion).value_or(0.0);
  m.delta_accepted =
      metrics::AcceptedGap(w.rollout.observed, config_.notion).value_or(0.0);
  m.delta_true = metrics::Gap(w.rollout.truth, config_.notion).value_or(0.0);

  {
    std::vector<const Features*> xs;
    std::vector<GroupId> zs;
    xs.reserve(n);
    zs.reserve(n);
    for (const auto& r : recs) {
      xs.push_back(&r.x);
      zs.push_back(r.z);
    }
    w.inputs = EncodeBatch(env_, xs, zs);
  }
  w.selected = history_.Subsample(subsample_rng_);
  w.snap = EvaluateSnapshots(history_, w.selected, w.inputs, rule_);

  w.reject_rate.assign(groups, 0.0);
  w.accept_rate_cum.assign(groups, 0.0);
  w.phi_tilde.assign(groups, 0.0);
  w.renyi_scale.assign(groups, 0.0);
  std::vector<double> count(groups, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const GroupId z = recs[j].z;
    count[z] += 1.0;
    w.reject_rate[z] += 1.0 - w.snap.current[j];
    w.accept_rate_cum[z] += w.snap.cumulative[j];
    w.phi_tilde[z] += recs[j].y_tilde;
  }
  m.groups.assign(groups, {});
  for (int i = 0; i < groups; ++i) {
    if (count[i] > 0.0) {
      w.reject_rate[i] /= count[i];
      w.accept_rate_cum[i] /= count[i];
      w.phi_tilde[i] /= count[i];
    }
    w.renyi_scale[i] =
        config_.notion == FairnessNotion::kEqualityOfOpportunity
            ? w.reject_rate[i] / std::max(w.phi_tilde[i], ipw::kOverlapFloor)
            : w.reject_rate[i];
    m.groups[i].r = w.reject_rate[i];
    m.groups[i].phi_tilde = w.phi_tilde[i];
    m.groups[i].accept_rate_cum = w.accept_rate_cum[i];
  }
  {
    RenyiBatch batch;
    batch.groups.reserve(n);
    for (const auto& r : recs) batch.groups.push_back(r.z);
    batch.predecessor_reject = w.snap.predecessor_reject;
    batch.group_scale = w.renyi_scale;
    batch.accept_rate_cum = w.accept_rate_cum;
    batch.reject_rate = w.reject_rate;
    Eigen::RowVectorXd dl;
    m.renyi = RenyiLoss(policy_.Forward(w.inputs), batch, dl);
  }

  if (UsesPredictorTraining(config_.algorithm) && config_.train_predictor) {
    UpdatePredictor(w, m);
  }
  m.predictor_lr = predictor_lr_;
  UpdatePolicyAndValue(w, m);
  EvaluateBias(w, m);

  metrics::DisparityReport report;
  report.notion = config_.notion;
  report.delta_observed = m.delta_observed;
  report.delta_accepted = m.delta_accepted;
  for (const auto& g : m.groups) {
    metrics::GroupTerms t;
    t.r = g.r;
    t.phi_tilde = g.phi_tilde;
    t.eps_hat = g.eps_hat;
    t.eps_bar = g.eps_bar;
    t.d2 = g.d2;
    report.groups.push_back(t);
  }
  const auto verdict =
      metrics::CheckConditions(report, config_.omega, metrics::BiasSource::kBound);
  m.disparity_ok = verdict.disparity_ok;
  m.bias_ok = verdict.bias_ok;
  m.floor_events = floor_events_;

  ++iteration_;
  if (hooks_.on_iteration) hooks_.on_iteration(m);
  return m;
}

std::vector<IterationMetrics> Trainer::RunAll() {
  std::vector<IterationMetrics> rows;
  while (!done()) rows.push_back(RunIteration());
  return rows;
}

void Trainer::UpdatePredictor(const Window& w, IterationMetrics& m) {
  const auto& samples = memory_.samples();
  if (samples.empty()) return;  // nothing labeled yet
  const int groups = env_.group_count;
  const int batch = config_.predictor_minibatch;
  double last_loss = 0.0;
  for (int step = 0; step < config_.predictor_steps; ++step) {
    std::vector<const Features*> xs(batch);
    std::vector<GroupId> zs(batch);
    std::vector<int> ys(batch);
    for (int b = 0; b < batch; ++b) {
      const auto idx = std::min(
          static_cast<std::size_t>(UniformUnit(predictor_rng_) * samples.size()),
          samples.size() - 1);
      xs[b] = &samples[idx].x;
      zs[b] = samples[idx].z;
      ys[b] = samples[idx].y;
    }
    const Eigen::MatrixXd inputs = EncodeBatch(env_, xs, zs);
    const SnapshotTerms t = EvaluateSnapshots(history_, w.selected, inputs, rule_);
    std::vector<double> weights(batch);
    for (int b = 0; b < batch; ++b) {
      weights[b] = GroupWeight(t.current[b], t.cumulative[b],
                               w.accept_rate_cum[zs[b]], w.reject_rate[zs[b]],
                               &floor_events_);
    }
    const auto lg = approx::Grad(predictor_, inputs,
                                 [&](const Eigen::RowVectorXd& logits,
                                     Eigen::RowVectorXd& dl) {
                                   return WeightedCrossEntropy(logits, ys, weights,
                                                               zs, groups, dl);
                                 });
    if (!IsFinite(lg.gradient)) Fail("non-finite predictor gradient");
    predictor_opt_.Step(predictor_.mutable_parameters(), lg.gradient, predictor_lr_);
    last_loss = lg.loss;
  }
  m.predictor_loss = last_loss;
  predictor_lr_ *= config_.lr_predictor_decay;
}

void Trainer::UpdatePolicyAndValue(const Window& w, IterationMetrics& m) {
  const auto& recs = w.rollout.records;
  const std::size_t n = recs.size();

  const Eigen::RowVectorXd values = value_.Forward(w.inputs);
  const Features boot = env_.EncodeInput(w.rollout.bootstrap_x, w.rollout.bootstrap_z);
  const double bootstrap = value_.Logit(boot);
  std::vector<double> rewards(n), vals(n);
  for (std::size_t j = 0; j < n; ++j) {
    rewards[j] = recs[j].reward;
    vals[j] = values[static_cast<Eigen::Index>(j)];
  }
  AdvantageEstimate est =
      ComputeAdvantages(rewards, vals, bootstrap, config_.gamma, config_.gae_lambda);
  const std::vector<double> penalty = Penalties(w.rollout);
  for (std::size_t j = 0; j < n; ++j) est.advantages[j] -= penalty[j];

  const bool renyi = (config_.algorithm == Algorithm::kSellf ||
                      config_.algorithm == Algorithm::kSellfSemiStochastic) &&
                     config_.beta2 > 0.0;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const std::size_t mb = static_cast<std::size_t>(config_.minibatch);
  double policy_loss = 0.0, value_loss = 0.0;
  int batches = 0;
  for (int epoch = 0; epoch < config_.ppo_epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i) {
      const auto j = std::min(static_cast<std::size_t>(UniformUnit(shuffle_rng_) * i),
                              i - 1);
      std::swap(order[i - 1], order[j]);
    }
    for (std::size_t start = 0; start < n; start += mb) {
      const std::size_t len = std::min(mb, n - start);
      Eigen::MatrixXd inputs(w.inputs.rows(), static_cast<Eigen::Index>(len));
      PpoBatch ppo;
      RenyiBatch rb;
      std::vector<double> targets(len);
      for (std::size_t b = 0; b < len; ++b) {
        const std::size_t j = order[start + b];
        inputs.col(static_cast<Eigen::Index>(b)) = w.inputs.col(static_cast<Eigen::Index>(j));
        ppo.actions.push_back(recs[j].a);
        ppo.old_accept_probs.push_back(recs[j].pi_network);
        ppo.advantages.push_back(est.advantages[j]);
        targets[b] = est.returns[j];
        if (renyi) {
          rb.groups.push_back(recs[j].z);
          rb.predecessor_reject.push_back(w.snap.predecessor_reject[j]);
        }
      }
      if (config_.normalize_advantage && len > 1) {
        double mean = 0.0;
        for (double a : ppo.advantages) mean += a;
        mean /= static_cast<double>(len);
        double var = 0.0;
        for (double a : ppo.advantages) var += (a - mean) * (a - mean);
        const double sd = std::sqrt(var / static_cast<double>(len - 1));
        for (double& a : ppo.advantages) a = (a - mean) / (sd + 1e-8);
      }
      if (renyi) {
        rb.group_scale = w.renyi_scale;
        rb.accept_rate_cum = w.accept_rate_cum;
        rb.reject_rate = w.reject_rate;
      }
      auto lg = approx::Grad(policy_, inputs,
                             [&](const Eigen::RowVectorXd& logits,
                                 Eigen::RowVectorXd& dl) {
                               double loss = PpoClipLoss(logits, ppo, config_.clip_eps, dl);
                               if (renyi) {
                                 Eigen::RowVectorXd dr;
                                 loss += config_.beta2 *
                                         RenyiLoss(logits, rb, dr, &floor_events_);
                                 dl += config_.beta2 * dr;
                               }
                               return loss;
                             });
      if (!IsFinite(lg.gradient)) Fail("non-finite policy gradient");
      approx::ClipGradientNorm(lg.gradient, config_.max_grad_norm);
      policy_opt_.Step(policy_.mutable_parameters(), lg.gradient, config_.lr_policy);

      auto vg = approx::Grad(value_, inputs,
                             [&](const Eigen::RowVectorXd& v, Eigen::RowVectorXd& dv) {
                               return ValueLoss(v, targets, config_.value_coef, dv);
                             });
      if (!IsFinite(vg.gradient)) Fail("non-finite value gradient");
      approx::ClipGradientNorm(vg.gradient, config_.max_grad_norm);
      value_opt_.Step(value_.mutable_parameters(), vg.gradient, config_.lr_value);
      policy_loss += lg.loss;
      value_loss += vg.loss;
      ++batches;
    }
  }
  if (batches > 0) {
    m.policy_loss = policy_loss / batches;
    m.value_loss = value_loss / batches;
  }
  if (!std::isfinite(m.policy_loss) || !std::isfinite(m.value_loss)) {
    Fail("non-finite loss");
  }
}

void Trainer::EvaluateBias(const Window& w, IterationMetrics& m) {
  const auto& samples = memory_.samples();
  m.min_cum_accept = 1.0;
  for (double c : w.snap.cumulative) m.min_cum_accept = std::min(m.min_cum_accept, c);
  for (int i = 0; i < env_.group_count; ++i) {
    auto& g = m.groups[i];
    std::vector<std::size_t> idx = memory_.IndicesOfGroup(i);
    g.n_memory = static_cast<std::int64_t>(idx.size());
    const std::size_t keep =
        std::min(idx.size(), static_cast<std::size_t>(config_.ipw_eval_samples));
    for (std::size_t k = 0; k < keep; ++k) {
      const std::size_t span = idx.size() - k;
      const auto j = k + std::min(static_cast<std::size_t>(UniformUnit(metrics_rng_) * span),
                                  span - 1);
      std::swap(idx[k], idx[j]);
    }
    idx.resize(keep);
    g.n_eval = static_cast<std::int64_t>(keep);
    if (keep == 0) {
      g.eps_bar = 1.0;  // no labeled data, no certificate
      continue;
    }
    std::vector<const Features*> xs;
    std::vector<GroupId> zs;
    std::vector<int> ys;
    for (std::size_t k : idx) {
      xs.push_back(&samples[k].x);
      zs.push_back(i);
      ys.push_back(samples[k].y);
    }
    const Eigen::MatrixXd inputs = EncodeBatch(env_, xs, zs);
    const SnapshotTerms t = EvaluateSnapshots(history_, w.selected, inputs, rule_);
    const Eigen::RowVectorXd predicted = Probabilities(predictor_, inputs);
    std::vector<double> weights(keep), pred(keep);
    for (std::size_t k = 0; k < keep; ++k) {
      weights[k] = GroupWeight(t.current[k], t.cumulative[k], w.accept_rate_cum[i],
                               w.reject_rate[i], nullptr);
      pred[k] = predicted[static_cast<Eigen::Index>(k)];
      m.max_weight = std::max(m.max_weight, weights[k]);
      m.min_cum_accept = std::min(m.min_cum_accept, t.cumulative[k]);
    }
    const auto eps = metrics::IpwErrorEstimate(pred, ys, weights);
    if (!eps) {
      g.eps_bar = 1.0;
      continue;
    }
    g.eps_hat = *eps;
    g.d2 = ipw::RenyiD2(weights);
    g.eps_bar = metrics::ErrorBound(g.eps_hat, g.d2, g.n_eval, pdim_, config_.delta_conf);
  }
}

}  // namespace sellf::learn
