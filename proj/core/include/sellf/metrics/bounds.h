#pragma once

#include "sellf/metrics/disparity.h"

namespace sellf::metrics {

inline constexpr double kDefaultDeltaConf = 0.05;

// Importance-weighted generalization bound on the predictor's bias:
//   eps_bar = |eps_hat| + 2^(5/4) sqrt(d2) ((p log(2 n e / p) + log(4 / delta)) / n)^(3/8)
// saturated at 1. Returns 1 when n < pdim, where the complexity term is
// not meaningful.
double ErrorBound(double eps_hat, double d2, std::int64_t n, double pdim,
                  double delta_conf = kDefaultDeltaConf);

double ErrorBoundComplexity(double d2, std::int64_t n, double pdim,
                            double delta_conf = kDefaultDeltaConf);

// Pseudo-dimension defaults: input_dim + 1 for a linear predictor,
// W * L * log(W) for a rectified-linear network with W weights, L layers.
double LinearPseudoDim(int input_dim);
double ReluPseudoDim(long long weights, int layers);

enum class BiasSource {
  kTrue,   // uses eps (sufficient conditions with the true bias)
  kBound,  // uses |eps_bar| (observable conditions)
};

// Sufficient conditions for |delta_true| <= omega. Works for any group
// count: the true-bias check uses max - min of r*eps (of r*eps/phi_tilde
// under equality of opportunity), the bound check the sum of r*|eps_bar|
// (over phi_tilde). Equality-of-opportunity thresholds scale by (1 - v);
// v >= 1 fails both conditions.
ConditionVerdict CheckConditions(const DisparityReport& report, double omega,
                                 BiasSource source);

// v = max_i r^i b^i / phi_tilde^i with b = eps (true) or |eps_bar| (bound).
double OpportunitySlack(const DisparityReport& report, BiasSource source);

}  // namespace sellf::metrics
