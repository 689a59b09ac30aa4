#include <gtest/gtest.h>

#include <cmath>

#include "sellf/metrics/disparity.h"
#include "sellf/oracle/tabular.h"
#include "sellf/oracle/theorem_suite.h"

namespace sellf::oracle {
namespace {

constexpr FairnessNotion kAllNotions[] = {FairnessNotion::kQualificationParity,
                                          FairnessNotion::kAccuracyParity,
                                          FairnessNotion::kEqualityOfOpportunity};

TabularInstance Symmetric() {
  TabularInstance inst;
  inst.group_prior = {0.4, 0.6};
  const std::vector<double> marginal{0.2, 0.5, 0.3};
  const std::vector<double> alpha{0.1, 0.6, 0.9};
  const std::vector<double> policy{0.3, 0.5, 0.8};
  const std::vector<double> predictor{0.2, 0.5, 0.7};
  inst.marginal = {marginal, marginal};
  inst.alpha = {alpha, alpha};
  inst.policy = {policy, policy};
  inst.predictor = {predictor, predictor};
  inst.history = {{policy, policy}};
  return inst;
}

TEST(Enumerate, SymmetricGroupsHaveNoDisparity) {
  const TabularInstance inst = Symmetric();
  for (auto n : kAllNotions) {
    const auto r = Enumerate(inst, n);
    EXPECT_NEAR(*r.delta_true, 0.0, 1e-15);
    EXPECT_NEAR(r.delta_observed, 0.0, 1e-15);
    EXPECT_NEAR(r.delta_accepted, 0.0, 1e-15);
  }
}

TEST(Enumerate, AcceptAllCollapsesTheThreeDisparities) {
  TabularInstance inst = Symmetric();
  inst.alpha[1] = {0.3, 0.7, 0.95};
  inst.policy = {{1.0, 1.0, 1.0}, {1.0, 1.0, 1.0}};
  inst.history = {inst.policy};
  const auto r = Enumerate(inst, FairnessNotion::kQualificationParity);
  EXPECT_NEAR(r.delta_observed, *r.delta_true, 1e-15);
  EXPECT_NEAR(r.delta_accepted, *r.delta_true, 1e-15);
  EXPECT_GT(std::abs(*r.delta_true), 0.05);
}

TEST(Enumerate, FlagsUndefinedOpportunityTerms) {
  TabularInstance inst = Symmetric();
  inst.predictor = {{0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}};
  inst.policy = {{0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}};
  inst.history = {{{0.5, 0.5, 0.5}, {0.5, 0.5, 0.5}}, inst.policy};
  const auto r = Enumerate(inst, FairnessNotion::kEqualityOfOpportunity);
  EXPECT_FALSE(r.kappa_defined);
}

TEST(Enumerate, AgreesWithSimulation) {
  Rng rng(12);
  InstanceOptions opts;
  opts.constraint = Constraint::kOverlap;
  const TabularInstance inst = RandomInstance(rng, opts);
  const std::int64_t n = 1'000'000;
  const auto sample = Simulate(inst, n, rng);
  for (auto notion : {FairnessNotion::kQualificationParity, FairnessNotion::kAccuracyParity}) {
    const auto exact = Enumerate(inst, notion);
    const double obs = metrics::DisparityObserved(sample.records, notion);
    const double tru = metrics::DisparityTrue(sample.records, sample.hidden, notion);
    // Each group utility is a mean of Bernoulli outcomes over at least
    // n * min prior records, so the gap's standard error is at most
    // sqrt(2 * 0.25 / (n * min prior)).
    const double min_prior = std::min(inst.group_prior[0], inst.group_prior[1]);
    const double sigma = std::sqrt(0.5 / (static_cast<double>(n) * min_prior));
    EXPECT_NEAR(obs, exact.delta_observed, 4.0 * sigma);
    EXPECT_NEAR(tru, *exact.delta_true, 4.0 * sigma);
  }
}

TEST(RandomInstance, ConstraintsHold) {
  Rng rng(13);
  for (int i = 0; i < 50; ++i) {
    const auto plain = RandomInstance(rng, {});
    EXPECT_NO_THROW(plain.Validate());

    InstanceOptions overlap;
    overlap.constraint = Constraint::kOverlap;
    const auto o = RandomInstance(rng, overlap);
    for (const auto& g : Enumerate(o, FairnessNotion::kQualificationParity).groups) {
      for (double c : g.cumulative) EXPECT_GT(c, 0.0);
    }

    InstanceOptions blind;
    blind.constraint = Constraint::kAcceptedOnlyBlind;
    const auto b = Enumerate(RandomInstance(rng, blind), FairnessNotion::kQualificationParity);
    EXPECT_NEAR(b.delta_accepted, 0.0, 1e-12);
    EXPECT_GT(std::abs(*b.delta_true), 0.05);
  }
}

TEST(RandomInstance, MultiGroup) {
  Rng rng(14);
  InstanceOptions opts;
  opts.group_count = 3;
  const auto inst = RandomInstance(rng, opts);
  EXPECT_EQ(inst.group_count(), 3);
  EXPECT_EQ(Enumerate(inst, FairnessNotion::kAccuracyParity).groups.size(), 3u);
}

TEST(TabularInstance, RejectsBadTables) {
  TabularInstance inst = Symmetric();
  inst.marginal[0] = {0.2, 0.5, 0.31};
  EXPECT_THROW(inst.Validate(), ConfigError);

  inst = Symmetric();
  inst.alpha[1][2] = 1.2;
  EXPECT_THROW(inst.Validate(), ConfigError);

  inst = Symmetric();
  const int big = kMaxSupport + 1;
  inst.marginal[0].assign(big, 1.0 / big);
  inst.alpha[0].assign(big, 0.5);
  inst.policy[0].assign(big, 0.5);
  inst.predictor[0].assign(big, 0.5);
  inst.history = {inst.policy};
  EXPECT_THROW(inst.Validate(), ConfigError);
}

TEST(TheoremSuite, EveryCheckPasses) {
  const auto checks = RunTheoremSuite(100, 2024);
  ASSERT_FALSE(checks.empty());
  for (const auto& c : checks) {
    EXPECT_TRUE(c.passed()) << c.name << ": " << c.detail << " worst " << c.worst;
  }
  const std::string table = FormatSuite(checks);
  EXPECT_NE(table.find("PASS"), std::string::npos);
  EXPECT_EQ(table.find("FAIL"), std::string::npos);
}

}  // namespace
}  // namespace sellf::oracle
