#include "sellf/oracle/tabular.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace sellf::oracle {

namespace {

void CheckRow(const std::vector<double>& row, std::size_t n,
              const std::string& what) {
  if (row.size() != n) throw ConfigError(what + " has the wrong length");
  for (double p : row) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(what + " leaves [0,1]");
  }
}

double Normalize(std::vector<double>& row) {
  const double s = std::accumulate(row.begin(), row.end(), 0.0);
  for (double& v : row) v /= s;
  return s;
}

double Uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * UniformUnit(rng);
}

std::vector<double> UniformRow(Rng& rng, int n, double lo, double hi) {
  std::vector<double> row(n);
  for (double& v : row) v = Uniform(rng, lo, hi);
  return row;
}

int SupportSize(Rng& rng, int max_support) {
  return 2 + static_cast<int>(UniformUnit(rng) * (max_support - 1));
}

std::optional<double> Gap(const std::vector<std::optional<double>>& mu) {
  for (const auto& m : mu) {
    if (!m) return std::nullopt;
  }
  if (mu.size() == 2) return *mu[1] - *mu[0];
  double lo = *mu[0], hi = *mu[0];
  for (const auto& m : mu) {
    lo = std::min(lo, *m);
    hi = std::max(hi, *m);
  }
  return hi - lo;
}

TabularInstance Draw(Rng& rng, const InstanceOptions& o) {
  const bool overlap = o.constraint == Constraint::kOverlap;
  const double plo = overlap ? 0.05 : 0.0;
  const double phi = overlap ? 0.95 : 1.0;
  TabularInstance t;
  t.group_prior = UniformRow(rng, o.group_count, 0.2, 1.0);
  Normalize(t.group_prior);
  const int k = static_cast<int>(UniformUnit(rng) * (o.max_history + 1));
  t.history.assign(k, {});
  for (int g = 0; g < o.group_count; ++g) {
    const int n = SupportSize(rng, o.max_support);
    t.marginal.push_back(UniformRow(rng, n, 0.05, 1.0));
    Normalize(t.marginal.back());
    t.alpha.push_back(UniformRow(rng, n, 0.05, 0.95));
    t.policy.push_back(UniformRow(rng, n, plo, phi));
    t.predictor.push_back(UniformRow(rng, n, 0.0, 1.0));
    for (auto& h : t.history) h.push_back(UniformRow(rng, n, plo, phi));
  }
  return t;
}

// Shared accepted block, identical in every group; each group adds points
// that are never accepted and differ only in their labels.
TabularInstance DrawAcceptedOnlyBlind(Rng& rng, const InstanceOptions& o) {
  const int shared = 1 + static_cast<int>(UniformUnit(rng) * 3);
  std::vector<double> shared_mass = UniformRow(rng, shared, 0.05, 1.0);
  const double scale =
      Uniform(rng, 0.3, 0.7) /
      std::accumulate(shared_mass.begin(), shared_mass.end(), 0.0);
  for (double& m : shared_mass) m *= scale;
  const double remainder =
      1.0 - std::accumulate(shared_mass.begin(), shared_mass.end(), 0.0);
  const auto shared_alpha = UniformRow(rng, shared, 0.05, 0.95);
  const auto shared_policy = UniformRow(rng, shared, 0.2, 1.0);
  const auto shared_pred = UniformRow(rng, shared, 0.0, 1.0);

  TabularInstance t;
  t.group_prior = UniformRow(rng, o.group_count, 0.2, 1.0);
  Normalize(t.group_prior);
  for (int g = 0; g < o.group_count; ++g) {
    const int extra = 1 + static_cast<int>(UniformUnit(rng) * 3);
    auto extra_mass = UniformRow(rng, extra, 0.05, 1.0);
    Normalize(extra_mass);
    // Low labels for the first group, high for the rest.
    const double lo = g == 0 ? 0.02 : 0.55;
    const double hi = g == 0 ? 0.45 : 0.98;
    std::vector<double> marginal = shared_mass;
    std::vector<double> alpha = shared_alpha;
    std::vector<double> policy = shared_policy;
    std::vector<double> pred = shared_pred;
    for (int e = 0; e < extra; ++e) {
      marginal.push_back(extra_mass[e] * remainder);
      alpha.push_back(Uniform(rng, lo, hi));
      policy.push_back(0.0);
      pred.push_back(UniformUnit(rng));
    }
    t.marginal.push_back(marginal);
    t.alpha.push_back(alpha);
    t.policy.push_back(policy);
    t.predictor.push_back(pred);
  }
  return t;
}

TabularInstance DrawNearFair(Rng& rng, const InstanceOptions& o) {
  const int n = SupportSize(rng, o.max_support);
  auto base_marginal = UniformRow(rng, n, 0.05, 1.0);
  const auto base_alpha = UniformRow(rng, n, 0.05, 0.95);
  const auto base_policy = UniformRow(rng, n, 0.05, 0.95);
  const double delta = o.perturbation * UniformUnit(rng);
  const double pred_noise = o.perturbation * UniformUnit(rng);
  auto jitter = [&](double v, double size, double lo, double hi) {
    return std::clamp(v + Uniform(rng, -size, size), lo, hi);
  };
  TabularInstance t;
  t.group_prior = UniformRow(rng, o.group_count, 0.2, 1.0);
  Normalize(t.group_prior);
  const int k = static_cast<int>(UniformUnit(rng) * (o.max_history + 1));
  std::vector<std::vector<double>> base_history;
  for (int h = 0; h < k; ++h) base_history.push_back(UniformRow(rng, n, 0.05, 0.95));
  t.history.assign(k, {});
  for (int g = 0; g < o.group_count; ++g) {
    std::vector<double> marginal(n), alpha(n), policy(n), pred(n);
    for (int x = 0; x < n; ++x) {
      marginal[x] = jitter(base_marginal[x], delta, 0.01, 1.0);
      alpha[x] = jitter(base_alpha[x], delta, 0.01, 0.99);
      policy[x] = jitter(base_policy[x], delta, 0.05, 0.95);
      pred[x] = jitter(alpha[x], pred_noise, 0.0, 1.0);
    }
    Normalize(marginal);
    t.marginal.push_back(marginal);
    t.alpha.push_back(alpha);
    t.policy.push_back(policy);
    t.predictor.push_back(pred);
    for (int h = 0; h < k; ++h) {
      std::vector<double> row(n);
      for (int x = 0; x < n; ++x) row[x] = jitter(base_history[h][x], delta, 0.05, 0.95);
      t.history[h].push_back(row);
    }
  }
  return t;
}

}  // namespace

void TabularInstance::Validate() const {
  const int g = group_count();
  if (g < 2) throw ConfigError("instance needs at least two groups");
  const double prior_sum =
      std::accumulate(group_prior.begin(), group_prior.end(), 0.0);
  if (std::abs(prior_sum - 1.0) > 1e-12) {
    throw ConfigError("group prior does not sum to 1");
  }
  if (static_cast<int>(marginal.size()) != g ||
      static_cast<int>(alpha.size()) != g ||
      static_cast<int>(policy.size()) != g ||
      static_cast<int>(predictor.size()) != g) {
    throw ConfigError("every table needs one row per group");
  }
  for (int i = 0; i < g; ++i) {
    const std::size_t n = marginal[i].size();
    if (n < 1 || n > static_cast<std::size_t>(kMaxSupport)) {
      throw ConfigError("support must have 1.." + std::to_string(kMaxSupport) +
                        " points per group");
    }
    const std::string tag = " row " + std::to_string(i);
    CheckRow(marginal[i], n, "marginal" + tag);
    const double s = std::accumulate(marginal[i].begin(), marginal[i].end(), 0.0);
    if (std::abs(s - 1.0) > 1e-12) {
      throw ConfigError("marginal" + tag + " does not sum to 1");
    }
    CheckRow(alpha[i], n, "alpha" + tag);
    CheckRow(policy[i], n, "policy" + tag);
    CheckRow(predictor[i], n, "predictor" + tag);
    for (std::size_t k = 0; k < history.size(); ++k) {
      if (static_cast<int>(history[k].size()) != g) {
        throw ConfigError("history table needs one row per group");
      }
      CheckRow(history[k][i], n, "history " + std::to_string(k) + tag);
    }
  }
}

OracleReport Enumerate(const TabularInstance& t, FairnessNotion notion) {
  t.Validate();
  OracleReport out;
  out.notion = notion;
  std::vector<std::optional<double>> mu, mu_obs, mu_acc;
  for (int z = 0; z < t.group_count(); ++z) {
    const std::size_t n = t.marginal[z].size();
    double total = 0, label = 0, agree = 0, label_accept = 0, accept = 0;
    double obs_label = 0, obs_label_accept = 0, obs_agree = 0;
    double rejected = 0, bias = 0;
    OracleGroup grp;
    grp.cumulative.resize(n);
    for (std::size_t x = 0; x < n; ++x) {
      const double px = t.marginal[z][x];
      const double al = t.alpha[z][x];
      const double pi = t.policy[z][x];
      const double ph = t.predictor[z][x];
      double never = 1.0 - pi;
      for (const auto& h : t.history) never *= 1.0 - h[z][x];
      grp.cumulative[x] = 1.0 - never;
      for (int y = 0; y < 2; ++y) {
        for (int a = 0; a < 2; ++a) {
          for (int yh = 0; yh < 2; ++yh) {
            const double m = px * (y ? al : 1.0 - al) * (a ? pi : 1.0 - pi) *
                             (yh ? ph : 1.0 - ph);
            const int yt = a ? y : yh;
            total += m;
            if (y) label += m;
            if (y == a) agree += m;
            if (y && a) label_accept += m;
            if (a) accept += m;
            if (yt) obs_label += m;
            if (yt && a) obs_label_accept += m;
            if (yt == a) obs_agree += m;
            if (!a) {
              rejected += m;
              bias += m * (yh - y);
            }
          }
        }
      }
    }
    grp.p_label = label / total;
    grp.r = rejected / total;
    grp.eps = rejected > 0.0 ? bias / rejected : 0.0;
    grp.phi_tilde = obs_label / total;
    if (grp.phi_tilde > 0.0) {
      grp.kappa = 1.0 - grp.r * grp.eps / grp.phi_tilde;
    } else {
      out.kappa_defined = false;
    }
    std::optional<double> m_true, m_obs, m_acc;
    switch (notion) {
      case FairnessNotion::kQualificationParity:
        m_true = label / total;
        m_obs = obs_label / total;
        if (accept > 0.0) m_acc = label_accept / accept;
        break;
      case FairnessNotion::kAccuracyParity:
        m_true = agree / total;
        m_obs = obs_agree / total;
        if (accept > 0.0) m_acc = label_accept / accept;
        break;
      case FairnessNotion::kEqualityOfOpportunity:
        if (label > 0.0) m_true = label_accept / label;
        if (obs_label > 0.0) m_obs = obs_label_accept / obs_label;
        m_acc = 1.0;
        break;
    }
    grp.mu_true = m_true.value_or(std::numeric_limits<double>::quiet_NaN());
    grp.mu_observed = m_obs.value_or(std::numeric_limits<double>::quiet_NaN());
    grp.mu_accepted = m_acc.value_or(std::numeric_limits<double>::quiet_NaN());
    mu.push_back(m_true);
    mu_obs.push_back(m_obs);
    mu_acc.push_back(m_acc);

    // Accepted (ever) and currently-rejected feature distributions.
    double accept_cum = 0.0, reject_now = 0.0;
    for (std::size_t x = 0; x < n; ++x) {
      accept_cum += t.marginal[z][x] * grp.cumulative[x];
      reject_now += t.marginal[z][x] * (1.0 - t.policy[z][x]);
    }
    grp.accept_rate_cum = accept_cum;
    grp.d_accept.resize(n);
    grp.d_reject.resize(n);
    grp.weight.resize(n);
    for (std::size_t x = 0; x < n; ++x) {
      grp.d_accept[x] = t.marginal[z][x] * grp.cumulative[x] / accept_cum;
      grp.d_reject[x] = reject_now > 0.0
                            ? t.marginal[z][x] * (1.0 - t.policy[z][x]) / reject_now
                            : 0.0;
      if (grp.d_accept[x] > 0.0) {
        grp.weight[x] = grp.d_reject[x] / grp.d_accept[x];
      } else {
        grp.weight[x] = grp.d_reject[x] > 0.0
                            ? std::numeric_limits<double>::infinity()
                            : 0.0;
      }
      if (grp.d_accept[x] > 0.0) {
        grp.mean_weight += grp.d_accept[x] * grp.weight[x];
        grp.d2 += grp.d_accept[x] * grp.weight[x] * grp.weight[x];
      }
    }
    out.groups.push_back(std::move(grp));
  }
  out.delta_true = Gap(mu);
  const auto obs = Gap(mu_obs);
  out.delta_observed = obs.value_or(std::numeric_limits<double>::quiet_NaN());
  out.delta_accepted =
      Gap(mu_acc).value_or(std::numeric_limits<double>::quiet_NaN());
  return out;
}

std::vector<metrics::GroupDistribution> ExactDistributions(
    const TabularInstance& t) {
  t.Validate();
  std::vector<metrics::GroupDistribution> out(t.group_count());
  for (int z = 0; z < t.group_count(); ++z) {
    for (std::size_t x = 0; x < t.marginal[z].size(); ++x) {
      const double al = t.alpha[z][x];
      const double pi = t.policy[z][x];
      const double ph = t.predictor[z][x];
      for (int y = 0; y < 2; ++y)
        for (int a = 0; a < 2; ++a)
          for (int yh = 0; yh < 2; ++yh)
            out[z].Add(y, a, yh,
                       t.marginal[z][x] * (y ? al : 1.0 - al) *
                           (a ? pi : 1.0 - pi) * (yh ? ph : 1.0 - ph));
    }
  }
  return out;
}

metrics::DisparityReport ToReport(const OracleReport& o) {
  metrics::DisparityReport r;
  r.notion = o.notion;
  r.delta_true = o.delta_true;
  r.delta_observed = o.delta_observed;
  r.delta_accepted = o.delta_accepted;
  for (const auto& g : o.groups) {
    metrics::GroupTerms t;
    t.r = g.r;
    t.eps = g.eps;
    t.phi_tilde = g.phi_tilde;
    t.kappa = g.kappa;
    t.mu_true = g.mu_true;
    t.mu_observed = g.mu_observed;
    t.d2 = g.d2;
    r.groups.push_back(t);
  }
  return r;
}

TabularInstance RandomInstance(Rng& rng, const InstanceOptions& o) {
  if (o.group_count < 2) throw ConfigError("instance needs at least two groups");
  if (o.max_support < 2 || o.max_support > kMaxSupport) {
    throw ConfigError("max_support must lie in 2.." + std::to_string(kMaxSupport));
  }
  for (int attempt = 0; attempt < o.max_attempts; ++attempt) {
    switch (o.constraint) {
      case Constraint::kNone:
      case Constraint::kOverlap:
        return Draw(rng, o);
      case Constraint::kNearFair:
        return DrawNearFair(rng, o);
      case Constraint::kAcceptedOnlyBlind: {
        if (o.notion == FairnessNotion::kEqualityOfOpportunity) {
          return Draw(rng, o);  // accepted-only disparity is always 0
        }
        TabularInstance t = DrawAcceptedOnlyBlind(rng, o);
        const OracleReport rep = Enumerate(t, o.notion);
        if (rep.delta_accepted == 0.0 && rep.delta_true &&
            std::abs(*rep.delta_true) > 0.05) {
          return t;
        }
        break;
      }
    }
  }
  throw EstimationError("no instance met the constraint within the attempt budget");
}

SampledRecords Simulate(const TabularInstance& t, std::int64_t n, Rng& rng) {
  t.Validate();
  SampledRecords out;
  out.records.reserve(n);
  out.hidden.reserve(n);
  std::vector<double> prior_cum(t.group_prior.size());
  std::partial_sum(t.group_prior.begin(), t.group_prior.end(), prior_cum.begin());
  std::vector<std::vector<double>> marg_cum;
  for (const auto& row : t.marginal) {
    marg_cum.emplace_back(row.size());
    std::partial_sum(row.begin(), row.end(), marg_cum.back().begin());
  }
  auto pick = [](const std::vector<double>& cum, double u) {
    const auto it = std::upper_bound(cum.begin(), cum.end(), u);
    return std::min<std::size_t>(it - cum.begin(), cum.size() - 1);
  };
  for (std::int64_t i = 0; i < n; ++i) {
    const auto z = static_cast<GroupId>(pick(prior_cum, UniformUnit(rng)));
    const std::size_t x = pick(marg_cum[z], UniformUnit(rng));
    fmdp::TransitionRecord rec;
    rec.z = z;
    rec.x = {static_cast<double>(x)};
    rec.pi_network = rec.pi_behavior = t.policy[z][x];
    rec.a = Bernoulli(t.policy[z][x], rng);
    const int y = Bernoulli(t.alpha[z][x], rng);
    const int yh = Bernoulli(t.predictor[z][x], rng);
    if (rec.a == 1) rec.y_obs = y;
    rec.y_tilde = rec.a == 1 ? y : yh;
    rec.x_next = rec.x;
    rec.t = i;
    rec.individual_id = i;
    out.records.push_back(std::move(rec));
    out.hidden.push_back({y, 0.0});
  }
  return out;
}

}  // namespace sellf::oracle
