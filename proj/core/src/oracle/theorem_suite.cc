#include "sellf/oracle/theorem_suite.h"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "sellf/metrics/bounds.h"
#include "sellf/oracle/tabular.h"

namespace sellf::oracle {

namespace {

constexpr FairnessNotion kNotions[] = {
    FairnessNotion::kQualificationParity,
    FairnessNotion::kAccuracyParity,
    FairnessNotion::kEqualityOfOpportunity,
};

class Timer {
 public:
  double Seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void Record(SuiteCheck& c, double violation, bool failed) {
  c.worst = std::max(c.worst, violation);
  if (failed) ++c.failures;
}

}  // namespace

std::vector<SuiteCheck> DecompositionChecks(int instances, std::uint64_t seed) {
  std::vector<SuiteCheck> out;
  for (FairnessNotion notion : kNotions) {
    Timer timer;
    SuiteCheck c;
    c.name = "decomposition/" + std::string(ToString(notion));
    Rng rng(DeriveSeed(seed, 100 + static_cast<int>(notion)));
    for (int i = 0; i < instances; ++i) {
      InstanceOptions o;
      o.constraint = i % 2 == 0 ? Constraint::kNone : Constraint::kOverlap;
      const TabularInstance inst = RandomInstance(rng, o);
      const OracleReport direct = Enumerate(inst, notion);
      const metrics::DisparityReport terms = ToReport(direct);
      const double rebuilt = metrics::DecomposedObserved(terms.groups, notion);
      const metrics::DisparityReport est =
          metrics::Decompose(ExactDistributions(inst), notion);
      const double err = std::max(
          {std::abs(rebuilt - direct.delta_observed),
           std::abs(*est.delta_decomposed - direct.delta_observed),
           std::abs(est.delta_observed - direct.delta_observed),
           std::abs(*est.delta_true - *direct.delta_true)});
      Record(c, err, !(err <= 1e-12));
      ++c.instances;
    }
    c.seconds = timer.Seconds();
    out.push_back(c);
  }
  return out;
}

std::vector<SuiteCheck> AcceptedOnlyChecks(int instances, std::uint64_t seed) {
  std::vector<SuiteCheck> out;
  {
    Timer timer;
    SuiteCheck c;
    c.name = "accepted-only/opportunity-zero";
    Rng rng(DeriveSeed(seed, 200));
    for (int i = 0; i < instances; ++i) {
      const TabularInstance inst = RandomInstance(rng, {});
      const auto notion = FairnessNotion::kEqualityOfOpportunity;
      const OracleReport direct = Enumerate(inst, notion);
      const metrics::DisparityReport est =
          metrics::Decompose(ExactDistributions(inst), notion);
      const oracle::SampledRecords sample = Simulate(inst, 200, rng);
      const double rec = metrics::DisparityAccepted(sample.records, notion);
      const double v = std::max({std::abs(direct.delta_accepted),
                                 std::abs(est.delta_accepted), std::abs(rec)});
      Record(c, v, v != 0.0);
      ++c.instances;
    }
    c.seconds = timer.Seconds();
    out.push_back(c);
  }
  for (FairnessNotion notion : {FairnessNotion::kQualificationParity,
                                FairnessNotion::kAccuracyParity}) {
    Timer timer;
    SuiteCheck c;
    c.name = "accepted-only/counterexample-" + std::string(ToString(notion));
    Rng rng(DeriveSeed(seed, 210 + static_cast<int>(notion)));
    double smallest_gap = 1.0;
    for (int i = 0; i < instances; ++i) {
      InstanceOptions o;
      o.constraint = Constraint::kAcceptedOnlyBlind;
      o.notion = notion;
      const TabularInstance inst = RandomInstance(rng, o);
      const OracleReport direct = Enumerate(inst, notion);
      const metrics::DisparityReport est =
          metrics::Decompose(ExactDistributions(inst), notion);
      const double gap = std::abs(*direct.delta_true);
      smallest_gap = std::min(smallest_gap, gap);
      const bool ok = direct.delta_accepted == 0.0 &&
                      est.delta_accepted == 0.0 && gap > 0.05;
      Record(c, std::abs(direct.delta_accepted), !ok);
      ++c.instances;
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "min |delta| = %.4f", smallest_gap);
    c.detail = buf;
    c.seconds = timer.Seconds();
    out.push_back(c);
  }
  return out;
}

std::vector<SuiteCheck> SufficientConditionChecks(int instances,
                                                  std::uint64_t seed) {
  std::vector<SuiteCheck> out;
  for (metrics::BiasSource source :
       {metrics::BiasSource::kTrue, metrics::BiasSource::kBound}) {
    for (double omega : {0.01, 0.05, 0.1}) {
      Timer timer;
      SuiteCheck c;
      char name[64];
      std::snprintf(name, sizeof(name), "sufficient-%s/omega=%.2f",
                    source == metrics::BiasSource::kTrue ? "true-bias" : "bound",
                    omega);
      c.name = name;
      Rng rng(DeriveSeed(seed, 300 + static_cast<int>(omega * 100) +
                                   (source == metrics::BiasSource::kBound ? 50 : 0)));
      int tried = 0;
      const int budget = 2000 * instances;
      while (c.instances < instances && tried < budget) {
        ++tried;
        const FairnessNotion notion = kNotions[tried % 3];
        InstanceOptions o;
        o.constraint = Constraint::kNearFair;
        o.perturbation = omega;
        const TabularInstance inst = RandomInstance(rng, o);
        const OracleReport direct = Enumerate(inst, notion);
        if (!direct.kappa_defined || !direct.delta_true) continue;
        metrics::DisparityReport rep = ToReport(direct);
        for (auto& g : rep.groups) {
          g.eps_bar = std::abs(g.eps) + 0.01 * omega * UniformUnit(rng);
        }
        if (!metrics::CheckConditions(rep, omega, source).overall()) continue;
        ++c.instances;
        const double excess = std::abs(*direct.delta_true) - omega;
        Record(c, std::max(excess, 0.0), excess > 0.0);
      }
      if (c.instances < instances) {
        c.detail = "only " + std::to_string(c.instances) + " of " +
                   std::to_string(tried) + " instances met the conditions";
        ++c.failures;
      } else {
        c.detail = std::to_string(tried) + " drawn";
      }
      c.seconds = timer.Seconds();
      out.push_back(c);
    }
  }
  return out;
}

std::vector<SuiteCheck> ImportanceWeightChecks(int instances,
                                               std::uint64_t seed) {
  Timer timer;
  SuiteCheck c;
  c.name = "ipw/change-of-measure";
  Rng rng(DeriveSeed(seed, 400));
  for (int i = 0; i < instances; ++i) {
    InstanceOptions o;
    o.constraint = Constraint::kOverlap;
    o.max_history = 5;
    const TabularInstance inst = RandomInstance(rng, o);
    const OracleReport direct = Enumerate(inst, FairnessNotion::kQualificationParity);
    for (const auto& g : direct.groups) {
      const double err = std::abs(g.mean_weight - 1.0);
      const bool jensen = g.d2 >= 1.0 - 1e-12;
      Record(c, err, !(err <= 1e-12) || !jensen);
    }
    ++c.instances;
  }
  c.seconds = timer.Seconds();
  return {c};
}

std::vector<SuiteCheck> MultiGroupChecks(int instances, std::uint64_t seed) {
  std::vector<SuiteCheck> out;
  {
    Timer timer;
    SuiteCheck c;
    c.name = "multi-group/decomposition";
    Rng rng(DeriveSeed(seed, 500));
    for (int i = 0; i < instances; ++i) {
      InstanceOptions o;
      o.group_count = 3;
      const TabularInstance inst = RandomInstance(rng, o);
      const FairnessNotion notion = kNotions[i % 3];
      const OracleReport direct = Enumerate(inst, notion);
      const auto terms = ToReport(direct);
      const double err = std::abs(
          metrics::DecomposedObserved(terms.groups, notion) - direct.delta_observed);
      Record(c, err, !(err <= 1e-12));
      ++c.instances;
    }
    c.seconds = timer.Seconds();
    out.push_back(c);
  }
  for (metrics::BiasSource source :
       {metrics::BiasSource::kTrue, metrics::BiasSource::kBound}) {
    Timer timer;
    SuiteCheck c;
    c.name = source == metrics::BiasSource::kTrue ? "multi-group/sufficient-true-bias"
                                                  : "multi-group/sufficient-bound";
    Rng rng(DeriveSeed(seed, source == metrics::BiasSource::kTrue ? 510 : 520));
    const double omega = 0.05;
    int tried = 0;
    while (c.instances < instances && tried < 2000 * instances) {
      ++tried;
      InstanceOptions o;
      o.group_count = 3;
      o.constraint = Constraint::kNearFair;
      o.perturbation = omega;
      const FairnessNotion notion = kNotions[tried % 3];
      const TabularInstance inst = RandomInstance(rng, o);
      const OracleReport direct = Enumerate(inst, notion);
      if (!direct.kappa_defined || !direct.delta_true) continue;
      metrics::DisparityReport rep = ToReport(direct);
      for (auto& g : rep.groups) g.eps_bar = std::abs(g.eps);
      if (!metrics::CheckConditions(rep, omega, source).overall()) continue;
      ++c.instances;
      const double excess = *direct.delta_true - omega;
      Record(c, std::max(excess, 0.0), excess > 0.0);
    }
    if (c.instances < instances) {
      c.detail = "only " + std::to_string(c.instances) + " qualifying instances";
      ++c.failures;
    }
    c.seconds = timer.Seconds();
    out.push_back(c);
  }
  return out;
}

std::vector<SuiteCheck> RunTheoremSuite(int instances, std::uint64_t seed) {
  std::vector<SuiteCheck> all;
  for (auto part : {DecompositionChecks, AcceptedOnlyChecks,
                    SufficientConditionChecks, ImportanceWeightChecks,
                    MultiGroupChecks}) {
    auto checks = part(instances, seed);
    all.insert(all.end(), checks.begin(), checks.end());
  }
  return all;
}

std::string FormatSuite(const std::vector<SuiteCheck>& checks) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-40s %6s %9s %11s %8s  %s\n", "check",
                "result", "instances", "worst", "seconds", "detail");
  out << line;
  for (const auto& c : checks) {
    std::snprintf(line, sizeof(line), "%-40s %6s %9d %11.3e %8.3f  %s\n",
                  c.name.c_str(), c.passed() ? "PASS" : "FAIL", c.instances,
                  c.worst, c.seconds, c.detail.c_str());
    out << line;
  }
  return out.str();
}

}  // namespace sellf::oracle
