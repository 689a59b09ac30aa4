#include "sellf/metrics/bounds.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace sellf::metrics {

double ErrorBoundComplexity(double d2, std::int64_t n, double pdim,
                            double delta_conf) {
  if (n < 1 || d2 < 0.0 || pdim < 1.0 || !(delta_conf > 0.0 && delta_conf < 1.0)) {
    throw ConfigError("error bound needs n >= 1, d2 >= 0, pdim >= 1, delta in (0,1)");
  }
  const double m = static_cast<double>(n);
  if (m < pdim) return std::numeric_limits<double>::infinity();
  const double capacity =
      pdim * std::log(2.0 * m * std::numbers::e / pdim) + std::log(4.0 / delta_conf);
  return std::pow(2.0, 1.25) * std::sqrt(d2) * std::pow(capacity / m, 0.375);
}

double ErrorBound(double eps_hat, double d2, std::int64_t n, double pdim,
                  double delta_conf) {
  const double complexity = ErrorBoundComplexity(d2, n, pdim, delta_conf);
  return std::min(1.0, std::abs(eps_hat) + complexity);
}

double LinearPseudoDim(int input_dim) { return input_dim + 1.0; }

double ReluPseudoDim(long long weights, int layers) {
  const double w = static_cast<double>(weights);
  return std::max(1.0, w * layers * std::log(w));
}

namespace {

double BiasTerm(const GroupTerms& g, BiasSource source) {
  return source == BiasSource::kTrue ? g.r * g.eps : g.r * std::abs(g.eps_bar);
}

// Bias term divided by phi_tilde; infinite when phi_tilde is 0 and there
// is bias to divide.
double ScaledBiasTerm(const GroupTerms& g, BiasSource source) {
  const double b = BiasTerm(g, source);
  if (g.phi_tilde > 0.0) return b / g.phi_tilde;
  if (b == 0.0) return 0.0;
  return b > 0.0 ? std::numeric_limits<double>::infinity()
                 : -std::numeric_limits<double>::infinity();
}

}  // namespace

double OpportunitySlack(const DisparityReport& report, BiasSource source) {
  double v = -std::numeric_limits<double>::infinity();
  for (const auto& g : report.groups) v = std::max(v, ScaledBiasTerm(g, source));
  return v;
}

ConditionVerdict CheckConditions(const DisparityReport& report, double omega,
                                 BiasSource source) {
  if (!(omega > 0.0)) throw ConfigError("omega must be > 0");
  if (report.groups.size() < 2) {
    throw ConfigError("conditions need at least two groups");
  }
  const bool opportunity =
      report.notion == FairnessNotion::kEqualityOfOpportunity;
  double threshold = omega / 2.0;
  if (opportunity) {
    const double v = OpportunitySlack(report, source);
    if (!(v < 1.0)) return {false, false};
    threshold *= 1.0 - v;
  }

  double bias_total;
  if (source == BiasSource::kTrue) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& g : report.groups) {
      const double b = opportunity ? ScaledBiasTerm(g, source) : BiasTerm(g, source);
      lo = std::min(lo, b);
      hi = std::max(hi, b);
    }
    bias_total = hi - lo;
  } else {
    bias_total = 0.0;
    for (const auto& g : report.groups) {
      bias_total += opportunity ? ScaledBiasTerm(g, source) : BiasTerm(g, source);
    }
  }
  ConditionVerdict verdict;
  verdict.bias_ok = bias_total <= threshold;
  verdict.disparity_ok = std::abs(report.delta_observed) <= threshold;
  return verdict;
}

}  // namespace sellf::metrics
