#include <gtest/gtest.h>

#include <boost/multiprecision/cpp_dec_float.hpp>
#include <cmath>

#include "sellf/metrics/bounds.h"
#include "sellf/metrics/disparity.h"
#include "sellf/oracle/tabular.h"

namespace sellf::metrics {
namespace {

constexpr FairnessNotion kAllNotions[] = {FairnessNotion::kQualificationParity,
                                          FairnessNotion::kAccuracyParity,
                                          FairnessNotion::kEqualityOfOpportunity};

struct Records {
  std::vector<fmdp::TransitionRecord> records;
  std::vector<fmdp::HiddenRecord> hidden;

  void Add(GroupId z, int y, int a, int y_hat, int copies = 1) {
    for (int i = 0; i < copies; ++i) {
      fmdp::TransitionRecord r;
      r.z = z;
      r.a = a;
      if (a == 1) r.y_obs = y;
      r.y_tilde = a == 1 ? y : y_hat;
      records.push_back(r);
      hidden.push_back({y, 0.0});
    }
  }
};

// --- record estimators ---------------------------------------------------

TEST(DisparityTrue, IdenticalGroupsGiveZero) {
  Records r;
  for (GroupId z : {0, 1}) {
    r.Add(z, 1, 1, 0, 3);
    r.Add(z, 0, 0, 1, 2);
    r.Add(z, 1, 0, 1, 4);
  }
  for (auto n : kAllNotions) EXPECT_EQ(DisparityTrue(r.records, r.hidden, n), 0.0);
}

TEST(DisparityTrue, QualificationExtremes) {
  Records r;
  r.Add(1, 1, 0, 0, 5);
  r.Add(0, 0, 1, 0, 5);
  EXPECT_EQ(DisparityTrue(r.records, r.hidden, FairnessNotion::kQualificationParity), 1.0);
}

TEST(DisparityTrue, EmptyConditioningCellRaises) {
  Records r;
  r.Add(0, 0, 1, 0, 3);  // group 0 has no positive labels
  r.Add(1, 1, 1, 0, 3);
  EXPECT_THROW(DisparityTrue(r.records, r.hidden, FairnessNotion::kEqualityOfOpportunity),
               EstimationError);
  Records one_group;
  one_group.Add(0, 1, 1, 0);
  EXPECT_THROW(DisparityTrue(one_group.records, one_group.hidden,
                             FairnessNotion::kQualificationParity),
               EstimationError);
}

TEST(DisparityAccepted, ZeroForEqualityOfOpportunity) {
  Rng rng(3);
  Records r;
  for (int i = 0; i < 500; ++i) {
    r.Add(Bernoulli(0.5, rng), Bernoulli(0.6, rng), Bernoulli(0.4, rng), Bernoulli(0.5, rng));
  }
  EXPECT_EQ(DisparityAccepted(r.records, FairnessNotion::kEqualityOfOpportunity), 0.0);
}

TEST(DisparityAccepted, AcceptAllMatchesTrueQualification) {
  Rng rng(4);
  Records r;
  for (int i = 0; i < 500; ++i) {
    const GroupId z = Bernoulli(0.5, rng);
    r.Add(z, Bernoulli(z == 0 ? 0.3 : 0.7, rng), 1, 0);
  }
  EXPECT_DOUBLE_EQ(DisparityAccepted(r.records, FairnessNotion::kQualificationParity),
                   DisparityTrue(r.records, r.hidden, FairnessNotion::kQualificationParity));
}

TEST(DisparityAccepted, NoAcceptedRecordsInAGroupRaises) {
  Records r;
  r.Add(0, 1, 0, 1, 3);
  r.Add(1, 1, 1, 1, 3);
  EXPECT_THROW(DisparityAccepted(r.records, FairnessNotion::kQualificationParity),
               EstimationError);
}

TEST(DisparityAccepted, BlindInstanceHidesTrueDisparity) {
  Rng rng(17);
  oracle::InstanceOptions opts;
  opts.constraint = oracle::Constraint::kAcceptedOnlyBlind;
  const auto inst = oracle::RandomInstance(rng, opts);
  const auto exact = oracle::Enumerate(inst, FairnessNotion::kQualificationParity);
  EXPECT_NEAR(exact.delta_accepted, 0.0, 1e-12);
  ASSERT_TRUE(exact.delta_true.has_value());
  EXPECT_GT(std::abs(*exact.delta_true), 0.05);
}

TEST(DisparityObserved, PerfectPredictorOrAcceptAllEqualsTruth) {
  Rng rng(5);
  Records perfect, accept_all;
  for (int i = 0; i < 1000; ++i) {
    const GroupId z = Bernoulli(0.5, rng);
    const int y = Bernoulli(z == 0 ? 0.4 : 0.65, rng);
    const int a = Bernoulli(0.5, rng);
    perfect.Add(z, y, a, y);
    accept_all.Add(z, y, 1, 1 - y);
  }
  for (auto n : kAllNotions) {
    EXPECT_EQ(DisparityObserved(perfect.records, n),
              DisparityTrue(perfect.records, perfect.hidden, n));
    EXPECT_EQ(DisparityObserved(accept_all.records, n),
              DisparityTrue(accept_all.records, accept_all.hidden, n));
  }
}

// --- exact mode ----------------------------------------------------------

TEST(Decompose, MatchesIndependentEnumeration) {
  Rng rng(6);
  for (auto n : kAllNotions) {
    oracle::InstanceOptions opts;
    opts.constraint = oracle::Constraint::kOverlap;
    opts.notion = n;
    for (int i = 0; i < 50; ++i) {
      const auto inst = oracle::RandomInstance(rng, opts);
      const auto exact = oracle::Enumerate(inst, n);
      const auto report = Decompose(oracle::ExactDistributions(inst), n);
      ASSERT_TRUE(report.delta_true && exact.delta_true);
      EXPECT_NEAR(*report.delta_true, *exact.delta_true, 1e-12);
      EXPECT_NEAR(report.delta_observed, exact.delta_observed, 1e-12);
      EXPECT_NEAR(report.delta_accepted, exact.delta_accepted, 1e-12);
      ASSERT_TRUE(report.delta_decomposed.has_value());
      EXPECT_NEAR(*report.delta_decomposed, report.delta_observed, 1e-12);
      for (int g = 0; g < 2; ++g) {
        EXPECT_NEAR(report.groups[g].r, exact.groups[g].r, 1e-12);
        EXPECT_NEAR(report.groups[g].eps, exact.groups[g].eps, 1e-12);
        EXPECT_NEAR(report.groups[g].phi_tilde, exact.groups[g].phi_tilde, 1e-12);
      }
    }
  }
}

std::vector<GroupDistribution> TwoGroups(double p0, double p1, double accept,
                                         bool perfect_predictor) {
  std::vector<GroupDistribution> groups(2);
  const double p[2] = {p0, p1};
  for (int z = 0; z < 2; ++z) {
    for (int y = 0; y < 2; ++y) {
      const double py = y == 1 ? p[z] : 1.0 - p[z];
      for (int a = 0; a < 2; ++a) {
        const double pa = a == 1 ? accept : 1.0 - accept;
        if (perfect_predictor) {
          groups[z].Add(y, a, y, py * pa);
        } else {
          groups[z].Add(y, a, 1, py * pa * 0.7);
          groups[z].Add(y, a, 0, py * pa * 0.3);
        }
      }
    }
  }
  return groups;
}

TEST(Decompose, UnbiasedPredictorOrFullAcceptanceLeavesDisparityUnchanged) {
  for (auto n : kAllNotions) {
    const auto unbiased = Decompose(TwoGroups(0.3, 0.6, 0.4, true), n);
    EXPECT_NEAR(unbiased.delta_observed, *unbiased.delta_true, 1e-15);
    const auto accept_all = Decompose(TwoGroups(0.3, 0.6, 1.0, false), n);
    EXPECT_NEAR(accept_all.delta_observed, *accept_all.delta_true, 1e-15);
    EXPECT_EQ(accept_all.groups[0].r, 0.0);
  }
}

TEST(Decompose, OpportunityNeedsImputedPositives) {
  std::vector<GroupDistribution> groups(2);
  for (int z = 0; z < 2; ++z) {
    groups[z].Add(1, 0, 0, 0.5);  // rejected positives imputed negative
    groups[z].Add(0, 0, 0, 0.5);
  }
  EXPECT_THROW(Decompose(groups, FairnessNotion::kEqualityOfOpportunity), EstimationError);
}

// --- IPW error estimate --------------------------------------------------

TEST(IpwErrorEstimate, MaximalPositiveBias) {
  const std::vector<double> predicted(10, 1.0), weights(10, 1.0);
  const std::vector<int> labels(10, 0);
  EXPECT_EQ(*IpwErrorEstimate(predicted, labels, weights), 1.0);
}

TEST(IpwErrorEstimate, NoDataIsEmpty) {
  EXPECT_FALSE(IpwErrorEstimate({}, {}, {}).has_value());
  const std::vector<double> p{0.5}, w{0.0};
  const std::vector<int> y{1};
  EXPECT_FALSE(IpwErrorEstimate(p, y, w).has_value());
}

TEST(IpwErrorEstimate, TwoPointClosedForm) {
  // Accepted mass 0.8 / 0.2 on x1 / x2 with weights 0.25 and 4; the
  // rejected distribution puts 0.2 / 0.8 on them.
  std::vector<double> predicted, weights;
  std::vector<int> labels;
  for (int i = 0; i < 4; ++i) {
    predicted.push_back(0.9);
    labels.push_back(1);
    weights.push_back(0.25);
  }
  predicted.push_back(0.3);
  labels.push_back(0);
  weights.push_back(4.0);
  const double closed_form = 0.2 * (0.9 - 1.0) + 0.8 * (0.3 - 0.0);
  EXPECT_NEAR(*IpwErrorEstimate(predicted, labels, weights), closed_form, 1e-12);
}

TEST(IpwErrorEstimate, CalibratedPredictorIsConsistent) {
  Rng rng(8);
  const int n = 200000;
  std::vector<double> predicted(n), weights(n);
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) {
    const double alpha = 0.1 + 0.8 * UniformUnit(rng);
    predicted[i] = alpha;
    labels[i] = Bernoulli(alpha, rng);
    weights[i] = 0.5 + UniformUnit(rng);
  }
  double sw = 0.0, sw2 = 0.0;
  for (double w : weights) {
    sw += w;
    sw2 += w * w;
  }
  // Each term has variance alpha(1-alpha) <= 1/4; the weighted mean's
  // standard error is at most 0.5 sqrt(sum w^2) / sum w.
  const double se = 0.5 * std::sqrt(sw2) / sw;
  EXPECT_NEAR(*IpwErrorEstimate(predicted, labels, weights), 0.0, 3.0 * se);
}

// --- error bound ---------------------------------------------------------

TEST(ErrorBound, VanishingComplexityAtLargeN) {
  EXPECT_NEAR(ErrorBound(0.03, 2.0, 1'000'000'000'000LL, 11.0), 0.03, 1e-3);
  EXPECT_LT(ErrorBoundComplexity(2.0, 1'000'000'000'000LL, 11.0),
            ErrorBoundComplexity(2.0, 1'000'000LL, 11.0));
}

TEST(ErrorBound, DoublingD2ScalesComplexityBySqrtTwo) {
  const double a = ErrorBoundComplexity(1.5, 100000, 11.0);
  const double b = ErrorBoundComplexity(3.0, 100000, 11.0);
  EXPECT_NEAR(b / a, std::sqrt(2.0), 1e-12);
}

TEST(ErrorBound, SaturatesAndHandlesTinySamples) {
  EXPECT_EQ(ErrorBound(0.0, 1.0, 5, 11.0), 1.0);
  EXPECT_EQ(ErrorBound(0.0, 100.0, 2048, 11.0), 1.0);
  EXPECT_EQ(ErrorBound(-0.2, 1.0, 1'000'000'000'000LL, 11.0),
            ErrorBound(0.2, 1.0, 1'000'000'000'000LL, 11.0));
}

TEST(ErrorBound, MatchesArbitraryPrecisionEvaluation) {
  using Big = boost::multiprecision::cpp_dec_float_50;
  const Big n = 2048, p = 11, d2 = 1, delta = Big(5) / 100;
  const Big e = boost::multiprecision::exp(Big(1));
  const Big inner = (p * boost::multiprecision::log(2 * n * e / p) +
                     boost::multiprecision::log(4 / delta)) / n;
  const Big expected = boost::multiprecision::pow(Big(2), Big(5) / 4) *
                       boost::multiprecision::sqrt(d2) *
                       boost::multiprecision::pow(inner, Big(3) / 8);
  ASSERT_LT(expected, 1);
  EXPECT_NEAR(ErrorBound(0.0, 1.0, 2048, 11.0, 0.05), expected.convert_to<double>(), 1e-13);
}

TEST(PseudoDim, Defaults) {
  EXPECT_EQ(LinearPseudoDim(12), 13.0);
  EXPECT_NEAR(ReluPseudoDim(100, 3), 100.0 * 3.0 * std::log(100.0), 1e-9);
}

// --- conditions ----------------------------------------------------------

DisparityReport QualificationReport(double delta_observed, double r_eps_bar_each) {
  DisparityReport report;
  report.notion = FairnessNotion::kQualificationParity;
  report.delta_observed = delta_observed;
  report.groups.resize(2);
  for (auto& g : report.groups) {
    g.r = 0.5;
    g.eps_bar = r_eps_bar_each / 0.5;
    g.phi_tilde = 0.5;
  }
  return report;
}

TEST(CheckConditions, Examples) {
  const auto ok = CheckConditions(QualificationReport(0.02, 0.01), 0.05, BiasSource::kBound);
  EXPECT_TRUE(ok.disparity_ok);
  EXPECT_TRUE(ok.bias_ok);
  EXPECT_TRUE(ok.overall());
  const auto bad = CheckConditions(QualificationReport(0.03, 0.01), 0.05, BiasSource::kBound);
  EXPECT_FALSE(bad.disparity_ok);
  EXPECT_FALSE(bad.overall());
  const auto loose = CheckConditions(QualificationReport(0.0, 0.02), 0.05, BiasSource::kBound);
  EXPECT_FALSE(loose.bias_ok);
}

TEST(CheckConditions, VacuousOpportunityCertificateFailsBoth) {
  DisparityReport report = QualificationReport(0.0, 0.0);
  report.notion = FairnessNotion::kEqualityOfOpportunity;
  report.groups[0].eps_bar = 1.0;
  report.groups[0].r = 0.6;
  report.groups[0].phi_tilde = 0.5;  // v = 0.6 / 0.5 > 1
  const auto v = CheckConditions(report, 0.05, BiasSource::kBound);
  EXPECT_FALSE(v.disparity_ok);
  EXPECT_FALSE(v.bias_ok);
}

TEST(CheckConditions, SoundOnRandomInstances) {
  Rng rng(9);
  int exercised = 0;
  for (auto n : kAllNotions) {
    oracle::InstanceOptions opts;
    opts.constraint = oracle::Constraint::kNearFair;
    opts.notion = n;
    for (int i = 0; i < 200; ++i) {
      const auto inst = oracle::RandomInstance(rng, opts);
      const auto exact = oracle::Enumerate(inst, n);
      if (!exact.kappa_defined) continue;
      const DisparityReport report = oracle::ToReport(exact);
      for (double omega : {0.01, 0.05, 0.1}) {
        if (CheckConditions(report, omega, BiasSource::kTrue).overall()) {
          ++exercised;
          EXPECT_LE(std::abs(*exact.delta_true), omega + 1e-12);
        }
      }
    }
  }
  EXPECT_GT(exercised, 0);
}

// --- multi-group ---------------------------------------------------------

TEST(MultiGroupDisparity, MaxMinusMin) {
  const std::vector<double> three{0.9, 0.5, 0.7};
  EXPECT_NEAR(MultiGroupDisparity(three), 0.4, 1e-15);
  const std::vector<double> two{0.3, 0.55};
  EXPECT_NEAR(MultiGroupDisparity(two), std::abs(0.55 - 0.3), 1e-15);
  const std::vector<double> one{0.3};
  EXPECT_THROW(MultiGroupDisparity(one), ConfigError);
}

}  // namespace
}  // namespace sellf::metrics
