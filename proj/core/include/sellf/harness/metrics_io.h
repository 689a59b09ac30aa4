#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sellf/learn/trainer.h"

namespace sellf::harness {

inline constexpr std::string_view kMetricsVersion = "#sellf-metrics,v1";

struct GroupColumns {
  double r = 0.0;
  double eps_hat = 0.0;
  double eps_bar = 1.0;
  double d2 = 0.0;
  double phi_tilde = 0.0;

  bool operator==(const GroupColumns&) const = default;
};

// One line of a metrics file. Training rows index by iteration, evaluation
// rows by step; `kind` tells them apart.
struct MetricsRow {
  std::string run_id;
  std::string kind = "train";  // "train" or "eval"
  std::int64_t index = 0;
  std::int64_t seed = 0;
  double reward_cumulative = 0.0;
  double resource = 0.0;
  std::optional<double> delta_true;
  double delta_observed = 0.0;
  double delta_accepted = 0.0;
  std::vector<GroupColumns> groups;
  double renyi = 0.0;
  double max_weight = 0.0;
  double min_cum_accept = 1.0;
  std::int64_t floor_events = 0;
  int disparity_ok = 0;
  int bias_ok = 0;
  double wall_clock = 0.0;

  bool operator==(const MetricsRow&) const = default;
};

MetricsRow FromIteration(const std::string& run_id, std::int64_t seed,
                         const learn::IterationMetrics& m,
                         double reward_cumulative, double wall_clock);

// The version line, then the column header, then one line per row.
// Numbers use %.17g so values survive a round trip exactly; an absent
// delta_true is an empty field.
void WriteMetricsHeader(std::ostream& out, int group_count);
void WriteMetricsRow(std::ostream& out, const MetricsRow& row);
void WriteMetrics(std::ostream& out, const std::vector<MetricsRow>& rows,
                  int group_count);

// Throws LoadError on a version or column mismatch.
std::vector<MetricsRow> ReadMetrics(std::istream& in);
std::vector<MetricsRow> ReadMetricsFile(const std::string& path);

std::string FormatDouble(double v);

}  // namespace sellf::harness
