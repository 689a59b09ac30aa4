#pragma once

#include <algorithm>
#include <optional>
#include <vector>

#include "sellf/common.h"

namespace sellf::metrics {

// Mass of one group over (label, action) cells. Works both for counts of
// simulated records and for exact probabilities from a tabular instance.
struct JointMass {
  double cell[2][2] = {{0.0, 0.0}, {0.0, 0.0}};  // [label][action]

  void Add(int label, int action, double mass = 1.0) {
    cell[label][action] += mass;
  }
  double Total() const {
    return cell[0][0] + cell[0][1] + cell[1][0] + cell[1][1];
  }
  double Positives() const { return cell[1][0] + cell[1][1]; }
  double Accepted() const { return cell[0][1] + cell[1][1]; }

  // Group utility under `notion`; empty when the conditioning cell has no
  // mass (no samples, or no positive labels for equality of opportunity).
  std::optional<double> Utility(FairnessNotion notion) const {
    switch (notion) {
      case FairnessNotion::kQualificationParity:
        if (Total() <= 0.0) return std::nullopt;
        return Positives() / Total();
      case FairnessNotion::kAccuracyParity:
        if (Total() <= 0.0) return std::nullopt;
        return (cell[1][1] + cell[0][0]) / Total();
      case FairnessNotion::kEqualityOfOpportunity:
        if (Positives() <= 0.0) return std::nullopt;
        return cell[1][1] / Positives();
    }
    return std::nullopt;
  }

  // Utility restricted to accepted mass. Under acceptance the accuracy
  // indicator 1{Y=A} reduces to Y, so both label-rate notions share it.
  std::optional<double> AcceptedUtility(FairnessNotion notion) const {
    if (notion == FairnessNotion::kEqualityOfOpportunity) return 1.0;
    if (Accepted() <= 0.0) return std::nullopt;
    return cell[1][1] / Accepted();
  }
};

// mu^1 - mu^0 for two groups, max - min otherwise. Empty if any group's
// utility is undefined.
inline std::optional<double> GroupGap(const std::vector<std::optional<double>>& u) {
  if (u.size() < 2) return std::nullopt;
  for (const auto& v : u) {
    if (!v) return std::nullopt;
  }
  if (u.size() == 2) return *u[1] - *u[0];
  double lo = *u[0], hi = *u[0];
  for (const auto& v : u) {
    lo = std::min(lo, *v);
    hi = std::max(hi, *v);
  }
  return hi - lo;
}

inline std::optional<double> Gap(const std::vector<JointMass>& groups,
                                 FairnessNotion notion) {
  std::vector<std::optional<double>> u;
  u.reserve(groups.size());
  for (const auto& g : groups) u.push_back(g.Utility(notion));
  return GroupGap(u);
}

inline std::optional<double> AcceptedGap(const std::vector<JointMass>& groups,
                                         FairnessNotion notion) {
  std::vector<std::optional<double>> u;
  u.reserve(groups.size());
  for (const auto& g : groups) u.push_back(g.AcceptedUtility(notion));
  return GroupGap(u);
}

}  // namespace sellf::metrics
