#include "sellf/metrics/disparity.h"

#include <algorithm>
#include <string>

namespace sellf::metrics {

namespace {

void CheckGroup(GroupId z, int group_count) {
  if (z < 0 || z >= group_count) {
    throw EstimationError("record group " + std::to_string(z) +
                          " outside 0.." + std::to_string(group_count - 1));
  }
}

// Names the first group whose conditioning cell is empty.
[[noreturn]] void ThrowEmptyCell(const std::vector<JointMass>& groups,
                                 FairnessNotion notion, bool accepted,
                                 std::string_view what) {
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const auto& g = groups[i];
    const bool empty = accepted ? g.Accepted() <= 0.0
                       : notion == FairnessNotion::kEqualityOfOpportunity
                           ? g.Positives() <= 0.0
                           : g.Total() <= 0.0;
    if (!empty) continue;
    std::string cell = accepted ? "A=1"
                       : notion == FairnessNotion::kEqualityOfOpportunity
                           ? "Y=1"
                           : "any record";
    throw EstimationError(std::string(what) + ": empty cell {Z=" +
                          std::to_string(i) + ", " + cell + "}");
  }
  throw EstimationError(std::string(what) + ": fewer than two groups");
}

double GapOrThrow(const std::vector<JointMass>& groups, FairnessNotion notion,
                  std::string_view what) {
  if (auto gap = Gap(groups, notion)) return *gap;
  ThrowEmptyCell(groups, notion, false, what);
}

}  // namespace

double GroupDistribution::Total() const {
  double t = 0.0;
  for (int y = 0; y < 2; ++y)
    for (int a = 0; a < 2; ++a)
      for (int h = 0; h < 2; ++h) t += mass[y][a][h];
  return t;
}

JointMass GroupDistribution::Truth() const {
  JointMass m;
  for (int y = 0; y < 2; ++y)
    for (int a = 0; a < 2; ++a) m.Add(y, a, mass[y][a][0] + mass[y][a][1]);
  return m;
}

JointMass GroupDistribution::Observed() const {
  JointMass m;
  for (int y = 0; y < 2; ++y) {
    for (int h = 0; h < 2; ++h) {
      m.Add(y, 1, mass[y][1][h]);
      m.Add(h, 0, mass[y][0][h]);
    }
  }
  return m;
}

double DisparityTrue(std::span<const fmdp::TransitionRecord> records,
                     std::span<const fmdp::HiddenRecord> hidden,
                     FairnessNotion notion, int group_count) {
  if (records.size() != hidden.size()) {
    throw EstimationError("truth channel does not match the records");
  }
  std::vector<JointMass> groups(group_count);
  for (std::size_t i = 0; i < records.size(); ++i) {
    CheckGroup(records[i].z, group_count);
    groups[records[i].z].Add(hidden[i].y_true, records[i].a);
  }
  return GapOrThrow(groups, notion, "true disparity");
}

double DisparityAccepted(std::span<const fmdp::TransitionRecord> records,
                         FairnessNotion notion, int group_count) {
  if (notion == FairnessNotion::kEqualityOfOpportunity) return 0.0;
  std::vector<JointMass> groups(group_count);
  for (const auto& rec : records) {
    CheckGroup(rec.z, group_count);
    if (rec.a == 1) groups[rec.z].Add(*rec.y_obs, 1);
  }
  if (auto gap = AcceptedGap(groups, notion)) return *gap;
  ThrowEmptyCell(groups, notion, true, "accepted-only disparity");
}

double DisparityObserved(std::span<const fmdp::TransitionRecord> records,
                         FairnessNotion notion, int group_count) {
  std::vector<JointMass> groups(group_count);
  for (const auto& rec : records) {
    CheckGroup(rec.z, group_count);
    groups[rec.z].Add(rec.y_tilde, rec.a);
  }
  return GapOrThrow(groups, notion, "observed disparity");
}

std::vector<GroupDistribution> Distributions(
    std::span<const fmdp::TransitionRecord> records,
    std::span<const fmdp::HiddenRecord> hidden, int group_count) {
  if (records.size() != hidden.size()) {
    throw EstimationError("truth channel does not match the records");
  }
  std::vector<GroupDistribution> out(group_count);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& rec = records[i];
    CheckGroup(rec.z, group_count);
    const int y = hidden[i].y_true;
    out[rec.z].Add(y, rec.a, rec.a == 1 ? y : rec.y_tilde);
  }
  return out;
}

DisparityReport Decompose(const std::vector<GroupDistribution>& groups,
                          FairnessNotion notion) {
  if (groups.size() < 2) throw ConfigError("need at least two groups");
  DisparityReport report;
  report.notion = notion;
  std::vector<JointMass> truth, observed;
  for (const auto& g : groups) {
    truth.push_back(g.Truth());
    observed.push_back(g.Observed());
  }
  report.delta_true = GapOrThrow(truth, notion, "true disparity");
  report.delta_observed = GapOrThrow(observed, notion, "observed disparity");
  if (auto acc = AcceptedGap(truth, notion)) {
    report.delta_accepted = *acc;
  } else {
    ThrowEmptyCell(truth, notion, true, "accepted-only disparity");
  }

  for (std::size_t i = 0; i < groups.size(); ++i) {
    const auto& g = groups[i];
    GroupTerms t;
    const double total = g.Total();
    double rejected = 0.0, bias = 0.0;
    for (int y = 0; y < 2; ++y) {
      for (int h = 0; h < 2; ++h) {
        rejected += g.mass[y][0][h];
        bias += g.mass[y][0][h] * (h - y);
      }
    }
    t.r = rejected / total;
    t.eps = rejected > 0.0 ? bias / rejected : 0.0;
    t.phi_tilde = observed[i].Positives() / total;
    if (t.phi_tilde > 0.0) t.kappa = 1.0 - t.r * t.eps / t.phi_tilde;
    t.mu_true = *truth[i].Utility(notion);
    t.mu_observed = *observed[i].Utility(notion);
    if (notion == FairnessNotion::kEqualityOfOpportunity && !t.kappa) {
      throw EstimationError("decomposition: phi_tilde = 0 in group " +
                            std::to_string(i) + ", kappa undefined");
    }
    report.groups.push_back(t);
  }
  report.delta_decomposed = DecomposedObserved(report.groups, notion);
  return report;
}

double DecomposedObserved(const std::vector<GroupTerms>& groups,
                          FairnessNotion notion) {
  if (groups.size() == 2) {
    const auto& g0 = groups[0];
    const auto& g1 = groups[1];
    const double delta = g1.mu_true - g0.mu_true;
    const double bias = g1.r * g1.eps - g0.r * g0.eps;
    switch (notion) {
      case FairnessNotion::kQualificationParity:
        return delta + bias;
      case FairnessNotion::kAccuracyParity:
        return delta - bias;
      case FairnessNotion::kEqualityOfOpportunity:
        return g1.mu_true * g1.kappa.value() - g0.mu_true * g0.kappa.value();
    }
  }
  // Several groups: each group's observed utility is rebuilt from its own
  // terms and the gap is max - min.
  std::vector<std::optional<double>> rebuilt;
  for (const auto& g : groups) {
    switch (notion) {
      case FairnessNotion::kQualificationParity:
        rebuilt.push_back(g.mu_true + g.r * g.eps);
        break;
      case FairnessNotion::kAccuracyParity:
        rebuilt.push_back(g.mu_true - g.r * g.eps);
        break;
      case FairnessNotion::kEqualityOfOpportunity:
        rebuilt.push_back(g.mu_true * g.kappa.value());
        break;
    }
  }
  return GroupGap(rebuilt).value();
}

std::optional<double> IpwErrorEstimate(std::span<const double> predicted,
                                       std::span<const int> labels,
                                       std::span<const double> weights) {
  if (predicted.size() != labels.size() || labels.size() != weights.size()) {
    throw EstimationError("IPW inputs have mismatched lengths");
  }
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    num += weights[j] * (predicted[j] - labels[j]);
    den += weights[j];
  }
  if (weights.empty() || den <= 0.0) return std::nullopt;
  return num / den;
}

double MultiGroupDisparity(std::span<const double> utilities) {
  if (utilities.size() < 2) {
    throw ConfigError("multi-group disparity needs at least two groups");
  }
  const auto [lo, hi] = std::minmax_element(utilities.begin(), utilities.end());
  return *hi - *lo;
}

}  // namespace sellf::metrics
