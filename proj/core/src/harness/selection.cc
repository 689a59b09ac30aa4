#include "sellf/harness/selection.h"

#include <algorithm>

namespace sellf::harness {

double ClipDisparity(double disparity, double omega) {
  return std::max(disparity - omega, 0.0);
}

std::size_t SelectIndex(std::span<const Candidate> candidates) {
  if (candidates.empty()) throw EstimationError("no candidates to select from");
  double best_clip = candidates[0].clip;
  for (const auto& c : candidates) best_clip = std::min(best_clip, c.clip);
  std::size_t best = candidates.size();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    if (c.clip != best_clip) continue;
    if (best == candidates.size()) {
      best = i;
      continue;
    }
    const auto& b = candidates[best];
    if (c.reward > b.reward ||
        (c.reward == b.reward &&
         std::pair(c.beta1, c.beta2) < std::pair(b.beta1, b.beta2))) {
      best = i;
    }
  }
  return best;
}

std::size_t SelectResult(std::span<const ResultRow> rows) {
  std::vector<Candidate> candidates;
  candidates.reserve(rows.size());
  for (const auto& r : rows) {
    candidates.push_back({ClipDisparity(r.selection_disparity, r.omega), r.reward,
                          r.beta1, r.beta2});
  }
  return SelectIndex(candidates);
}

std::vector<ResultRow> SelectPerAlgorithm(const std::vector<ResultRow>& rows) {
  if (rows.empty()) throw EstimationError("empty results table");
  std::vector<std::string> order;
  for (const auto& r : rows) {
    if (std::find(order.begin(), order.end(), r.algorithm) == order.end()) {
      order.push_back(r.algorithm);
    }
  }
  std::vector<ResultRow> chosen;
  for (const auto& algorithm : order) {
    std::vector<ResultRow> subset;
    for (const auto& r : rows) {
      if (r.algorithm == algorithm) subset.push_back(r);
    }
    chosen.push_back(subset[SelectResult(subset)]);
  }
  return chosen;
}

}  // namespace sellf::harness
