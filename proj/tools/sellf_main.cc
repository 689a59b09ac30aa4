// Command-line front end: train, evaluate, sweep, select, verify, export-env.
//
// Exit codes: 0 success, 1 usage or unexpected error, 2 invalid
// configuration, 3 environment table or checkpoint cannot be loaded,
// 4 training failed numerically, 5 selection or verification failed.

#include <CLI11/CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

#include "sellf/approx/mlp.h"
#include "sellf/envs/loader.h"
#include "sellf/harness/config.h"
#include "sellf/harness/experiment.h"
#include "sellf/harness/metrics_io.h"
#include "sellf/harness/selection.h"
#include "sellf/learn/trainer.h"
#include "sellf/oracle/theorem_suite.h"

namespace fs = std::filesystem;
using namespace sellf;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kConfig = 2, kLoad = 3, kTraining = 4, kCheck = 5 };

int Train(const std::string& config_path, bool quiet) {
  harness::RunConfig config = harness::LoadRunConfig(config_path);
  harness::ApplyEnvironmentOverrides(config);
  const auto outcome = harness::RunTraining(config, quiet ? nullptr : &std::cerr);
  std::cout << outcome.run_dir << "\n";
  return kOk;
}

struct EvaluateArgs {
  std::string checkpoint;
  std::string env;
  std::string data_dir;
  std::string notion;
  std::string predictor;
  std::string out;
  bool semi_stochastic = false;
  int seeds = 10;
  int horizon = 10000;
  int trace_every = 10;
  std::uint64_t base_seed = 1000;
};

int Evaluate(const EvaluateArgs& args) {
  fs::path policy_path = args.checkpoint;
  std::string predictor_path = args.predictor;
  std::string notion = args.notion;
  bool semi = args.semi_stochastic;
  std::string env_name = args.env;
  if (fs::is_directory(policy_path)) {
    const fs::path dir = policy_path;
    policy_path = dir / harness::kPolicyFile;
    const fs::path manifest_path = dir / harness::kManifestFile;
    if (fs::exists(manifest_path)) {
      std::ifstream in(manifest_path);
      const auto manifest = nlohmann::json::parse(in);
      const auto& cfg = manifest.at("config");
      if (notion.empty()) notion = cfg.at("notion").get<std::string>();
      if (env_name.empty()) env_name = cfg.at("env").get<std::string>();
      const auto algorithm = learn::ParseAlgorithm(cfg.at("algorithm").get<std::string>());
      semi = semi || learn::RuleFor(algorithm) == fmdp::ActionRule::kSemiStochastic;
      if (predictor_path.empty() && learn::UsesPredictorTraining(algorithm)) {
        predictor_path = (dir / harness::kPredictorFile).string();
      }
    }
  }
  if (env_name.empty()) throw ConfigError("--env: required when no manifest is present");
  if (notion.empty()) notion = "opportunity";
  const std::string data_dir = args.data_dir.empty() ? envs::DefaultDataDir() : args.data_dir;
  const envs::EnvSpec env = envs::LoadEnv(data_dir, env_name);
  const approx::Mlp policy = approx::LoadCheckpointFile(policy_path.string());
  std::optional<approx::Mlp> predictor;
  if (!predictor_path.empty()) predictor = approx::LoadCheckpointFile(predictor_path);

  harness::EvalOptions options;
  options.seeds = args.seeds;
  options.horizon = args.horizon;
  options.trace_every = args.trace_every;
  options.base_seed = args.base_seed;
  options.notion = ParseFairnessNotion(notion);
  options.rule = semi ? fmdp::ActionRule::kSemiStochastic : fmdp::ActionRule::kStochastic;
  const auto summary = harness::Evaluate(policy, predictor ? &*predictor : nullptr, env,
                                         options, policy_path.parent_path().filename().string());
  if (!args.out.empty()) {
    std::ofstream out(args.out, std::ios::binary);
    if (!out) throw ConfigError("--out: cannot write " + args.out);
    harness::WriteMetrics(out, summary.trace, env.group_count);
  }
  std::cout << "seed,mean_abs_delta,abs_mean_delta,mean_abs_observed,mean_abs_accepted,reward\n";
  for (const auto& s : summary.seeds) {
    std::cout << s.seed << ',' << s.mean_abs_delta << ',' << s.abs_mean_delta << ','
              << s.mean_abs_observed << ',' << s.mean_abs_accepted << ','
              << s.final_resource << "\n";
  }
  std::cout << "mean |delta| " << summary.mean_abs_delta.mean << " (+- "
            << summary.mean_abs_delta.std << "), |mean delta| "
            << summary.abs_mean_delta.mean << " (+- " << summary.abs_mean_delta.std
            << "), reward " << summary.reward.mean << " (+- " << summary.reward.std
            << ")\n";
  return kOk;
}

int Sweep(const std::string& grid, const std::string& results_path) {
  harness::SweepSpec spec = harness::LoadSweep(grid);
  for (auto& run : spec.runs) harness::ApplyEnvironmentOverrides(run);
  const auto rows = harness::RunSweep(spec, &std::cerr);
  const std::string path =
      results_path.empty() ? (fs::path(spec.output_dir) / "results.csv").string() : results_path;
  fs::create_directories(fs::path(path).parent_path().empty() ? fs::path(".")
                                                              : fs::path(path).parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  harness::WriteResults(out, rows);
  std::cout << path << "\n";
  return kOk;
}

int Select(const std::string& results) {
  const auto rows = harness::ReadResultsFile(results);
  const auto chosen = harness::SelectPerAlgorithm(rows);
  harness::WriteResults(std::cout, chosen);
  return kOk;
}

int Verify(int instances, std::uint64_t seed) {
  const auto checks = oracle::RunTheoremSuite(instances, seed);
  std::cout << oracle::FormatSuite(checks);
  for (const auto& c : checks) {
    if (!c.passed()) return kCheck;
  }
  return kOk;
}

int ExportEnv(const std::string& name, const std::string& data_dir) {
  const envs::EnvSpec env =
      envs::LoadEnv(data_dir.empty() ? envs::DefaultDataDir() : data_dir, name);
  std::cout << envs::ExportEnv(env);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Long-term fair decision making under selective labels"};
  app.require_subcommand(1);

  std::string config_path;
  bool quiet = false;
  auto* train = app.add_subcommand("train", "Train one configuration");
  train->add_option("config", config_path, "JSON run configuration")->required();
  train->add_flag("-q,--quiet", quiet, "Suppress per-iteration progress");

  EvaluateArgs eval;
  auto* evaluate = app.add_subcommand("evaluate", "Deploy a trained policy");
  evaluate->add_option("checkpoint", eval.checkpoint, "Run directory or policy checkpoint")
      ->required();
  evaluate->add_option("--env", eval.env, "Environment name");
  evaluate->add_option("--data-dir", eval.data_dir, "Directory of environment tables");
  evaluate->add_option("--seeds", eval.seeds, "Number of evaluation seeds");
  evaluate->add_option("--horizon", eval.horizon, "Steps per seed");
  evaluate->add_option("--trace-every", eval.trace_every, "Trace stride (0: none)");
  evaluate->add_option("--base-seed", eval.base_seed, "First evaluation seed");
  evaluate->add_option("--notion", eval.notion, "qualification, accuracy or opportunity");
  evaluate->add_option("--predictor", eval.predictor, "Predictor checkpoint for imputation");
  evaluate->add_flag("--semi-stochastic", eval.semi_stochastic, "Use the semi-stochastic rule");
  evaluate->add_option("--out", eval.out, "Write the per-step trace here");

  std::string grid, results_out;
  auto* sweep = app.add_subcommand("sweep", "Train and evaluate a hyperparameter grid");
  sweep->add_option("grid", grid, "JSON grid file")->required();
  sweep->add_option("--results", results_out, "Results table path");

  std::string results_in;
  auto* select = app.add_subcommand("select", "Pick one configuration per algorithm");
  select->add_option("results", results_in, "Results table from sweep")->required();

  int instances = 100;
  std::uint64_t verify_seed = 1;
  auto* verify = app.add_subcommand("verify", "Run the tabular theorem suite");
  verify->add_option("--instances", instances, "Random instances per check")
      ->check(CLI::PositiveNumber);
  verify->add_option("--seed", verify_seed, "Instance generator seed");

  std::string env_name, data_dir;
  auto* export_env = app.add_subcommand("export-env", "Print a loaded environment table");
  export_env->add_option("name", env_name, "Environment name")->required();
  export_env->add_option("--data-dir", data_dir, "Directory of environment tables");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help and friends exit 0; every other parse failure is a usage error.
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (*train) return Train(config_path, quiet);
    if (*evaluate) return Evaluate(eval);
    if (*sweep) return Sweep(grid, results_out);
    if (*select) return Select(results_in);
    if (*verify) return Verify(instances, verify_seed);
    if (*export_env) return ExportEnv(env_name, data_dir);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kConfig;
  } catch (const LoadError& e) {
    std::cerr << "load error: " << e.what() << "\n";
    return kLoad;
  } catch (const learn::TrainingError& e) {
    std::cerr << "training failed: " << e.what() << "\n";
    return kTraining;
  } catch (const NumericalError& e) {
    std::cerr << "training failed: " << e.what() << "\n";
    return kTraining;
  } catch (const EstimationError& e) {
    std::cerr << "selection failed: " << e.what() << "\n";
    return kCheck;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
