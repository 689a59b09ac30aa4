#pragma once

#include <span>
#include <vector>

#include "sellf/harness/experiment.h"

namespace sellf::harness {

// Clip of a time-averaged absolute disparity against the constraint:
// max(disparity - omega, 0). Every config within the constraint clips to 0.
double ClipDisparity(double disparity, double omega);

struct Candidate {
  double clip = 0.0;
  double reward = 0.0;
  double beta1 = 0.0;
  double beta2 = 0.0;
};

// Keeps candidates attaining the minimum clip and returns the index of the
// highest reward among them; remaining ties go to the lowest (beta1, beta2).
// Throws EstimationError on an empty list.
std::size_t SelectIndex(std::span<const Candidate> candidates);

// Applies the rule to result rows of one algorithm, clipping each row's
// selection disparity at its omega.
std::size_t SelectResult(std::span<const ResultRow> rows);

// One chosen row per algorithm present, in order of first appearance.
std::vector<ResultRow> SelectPerAlgorithm(const std::vector<ResultRow>& rows);

}  // namespace sellf::harness
