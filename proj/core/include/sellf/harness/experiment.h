#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sellf/approx/mlp.h"
#include "sellf/envs/env_spec.h"
#include "sellf/harness/config.h"
#include "sellf/harness/metrics_io.h"
#include "sellf/learn/trainer.h"

namespace sellf::harness {

inline constexpr const char* kPolicyFile = "policy.ckpt";
inline constexpr const char* kValueFile = "value.ckpt";
inline constexpr const char* kPredictorFile = "predictor.ckpt";
inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kMetricsFile = "metrics.csv";

// git-style blob hash (sha1 over "blob <size>\0" + bytes) of a file.
std::string ContentHash(const std::string& path);

struct TrainOutcome {
  std::string run_dir;
  std::vector<learn::IterationMetrics> rows;
  approx::Mlp policy;
  approx::Mlp predictor;
};

// Trains and writes checkpoints, a manifest and the metrics file into
// <output_dir>/<run_id>. On a numerical failure the last good networks go
// to diagnostic_*.ckpt and the TrainingError propagates.
TrainOutcome RunTraining(const RunConfig& config, std::ostream* progress = nullptr);

struct EvalOptions {
  int seeds = 10;
  int horizon = 10000;
  int trace_every = 10;  // 0 keeps no per-step trace
  std::uint64_t base_seed = 1000;
  FairnessNotion notion = FairnessNotion::kEqualityOfOpportunity;
  fmdp::ActionRule rule = fmdp::ActionRule::kStochastic;
  int pool_size = 0;
};

struct SeedSummary {
  std::uint64_t seed = 0;
  // Time averages over the horizon of the population disparity of the pool.
  double mean_abs_delta = 0.0;   // mean_t |delta_t|
  double abs_mean_delta = 0.0;   // |mean_t delta_t|
  double mean_abs_observed = 0.0;  // running imputed disparity
  double mean_abs_accepted = 0.0;  // running accepted-only disparity
  double max_abs_accepted = 0.0;
  double final_resource = 0.0;
};

struct Stat {
  double mean = 0.0;
  double std = 0.0;
};

struct EvalSummary {
  std::vector<SeedSummary> seeds;
  Stat mean_abs_delta;
  Stat abs_mean_delta;
  Stat mean_abs_observed;
  Stat mean_abs_accepted;
  Stat reward;
  std::vector<MetricsRow> trace;
};

Stat MeanStd(const std::vector<double>& values);

// Deploys a frozen policy. The ground-truth channel is read for the
// delta_true column; imputation uses `predictor` when given and a constant
// 0.5 otherwise.
EvalSummary Evaluate(const approx::Mlp& policy, const approx::Mlp* predictor,
                     const envs::EnvSpec& env, const EvalOptions& options,
                     const std::string& run_id = "eval");

// --- sweeps ---------------------------------------------------------------

struct ResultRow {
  std::string run_id;
  std::string algorithm;
  std::string notion;
  double beta1 = 0.0;
  double beta2 = 0.0;
  std::int64_t seed = 0;
  double omega = 0.05;
  // The disparity the algorithm may legitimately select on: accepted-only
  // for PPO/POCAR, true for POCAR_ORACLE, imputed for SELLF variants.
  double selection_disparity = 0.0;
  double mean_abs_delta = 0.0;
  double mean_abs_delta_std = 0.0;
  double abs_mean_delta = 0.0;
  double reward = 0.0;
  double reward_std = 0.0;
  double mean_abs_observed = 0.0;
  double mean_abs_accepted = 0.0;

  bool operator==(const ResultRow&) const = default;
};

double SelectionDisparity(learn::Algorithm algorithm, const EvalSummary& eval);

void WriteResults(std::ostream& out, const std::vector<ResultRow>& rows);
std::vector<ResultRow> ReadResults(std::istream& in);
std::vector<ResultRow> ReadResultsFile(const std::string& path);

struct SweepSpec {
  std::vector<RunConfig> runs;
  EvalOptions eval;
  int workers = 1;
  std::string output_dir = "sweeps";
};

// Grid file: {"base": {config}, "grid": {field: [values...]},
// "evaluate": {"seeds", "horizon", "trace_every"}, "workers", "output_dir"}.
// Runs are the Cartesian product of the grid fields in key order.
SweepSpec ParseSweep(const std::string& json_text);
SweepSpec LoadSweep(const std::string& path);

// Trains and evaluates each run over a worker pool, writes each run's
// artifacts plus eval.csv, and returns rows in grid order.
std::vector<ResultRow> RunSweep(const SweepSpec& sweep, std::ostream* progress = nullptr);

}  // namespace sellf::harness
