#include "sellf/harness/experiment.h"

#include <openssl/evp.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>
#include <thread>

#include "sellf/envs/loader.h"
#include "sellf/fmdp/simulator.h"
#include "sellf/metrics/joint_mass.h"

namespace sellf::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kEvalStream = 7;
constexpr std::string_view kResultsVersion = "#sellf-results,v1";

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void WriteFile(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

}  // namespace

std::string ContentHash(const std::string& path) {
  const std::string bytes = ReadFile(path);
  const std::string header = "blob " + std::to_string(bytes.size()) + '\0';
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, header.data(), header.size()) != 1 ||
      EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw LoadError("cannot hash " + path);
  }
  EVP_MD_CTX_free(ctx);
  static const char* kHex = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex += kHex[digest[i] >> 4];
    hex += kHex[digest[i] & 15];
  }
  return hex;
}

TrainOutcome RunTraining(const RunConfig& config, std::ostream* progress) {
  const std::string data_dir = config.ResolvedDataDir();
  const envs::EnvSpec env = envs::LoadEnv(data_dir, config.env);
  const std::string env_path = data_dir + "/" + config.env + ".json";
  const std::string run_id = config.ResolvedRunId();
  const fs::path dir = fs::path(config.output_dir) / run_id;
  fs::create_directories(dir);

  std::ofstream metrics(dir / kMetricsFile, std::ios::binary);
  if (!metrics) throw ConfigError("cannot write metrics in " + dir.string());
  WriteMetricsHeader(metrics, env.group_count);

  const auto start = std::chrono::steady_clock::now();
  double reward_cumulative = 0.0;
  learn::TrainHooks hooks;
  hooks.on_iteration = [&](const learn::IterationMetrics& m) {
    reward_cumulative += m.reward_window;
    const double elapsed =
        config.record_wall_clock
            ? std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                  .count()
            : 0.0;
    WriteMetricsRow(metrics, FromIteration(run_id, static_cast<std::int64_t>(config.train.seed),
                                           m, reward_cumulative, elapsed));
    metrics.flush();
    if (progress) {
      *progress << run_id << " iteration " << m.iteration << " steps " << m.steps
                << " reward " << m.reward_window << " delta_observed "
                << m.delta_observed << "\n";
    }
  };
  learn::Trainer trainer(config.train, env, hooks);
  std::vector<learn::IterationMetrics> rows;
  try {
    rows = trainer.RunAll();
  } catch (const learn::TrainingError& e) {
    approx::SaveCheckpointFile(e.policy(), (dir / "diagnostic_policy.ckpt").string());
    approx::SaveCheckpointFile(e.predictor(), (dir / "diagnostic_predictor.ckpt").string());
    throw;
  }
  approx::SaveCheckpointFile(trainer.policy(), (dir / kPolicyFile).string());
  approx::SaveCheckpointFile(trainer.value(), (dir / kValueFile).string());
  approx::SaveCheckpointFile(trainer.predictor(), (dir / kPredictorFile).string());

  json manifest = {
      {"format", "sellf-run/1"},
      {"run_id", run_id},
      {"config", json::parse(SerializeRunConfig(config))},
      {"seed", config.train.seed},
      {"env", {{"name", env.name}, {"path", env_path}, {"content_hash", ContentHash(env_path)}}},
      {"iterations", trainer.iteration()},
      {"snapshots", trainer.history().size()},
      {"checkpoints",
       {{"policy", kPolicyFile}, {"value", kValueFile}, {"predictor", kPredictorFile}}},
      {"metrics", kMetricsFile},
  };
  if (config.record_wall_clock) {
    manifest["elapsed_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  WriteFile(dir / kManifestFile, manifest.dump(2) + "\n");
  return {dir.string(), std::move(rows), trainer.policy(), trainer.predictor()};
}

Stat MeanStd(const std::vector<double>& values) {
  Stat s;
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double var = 0.0;
    for (double v : values) var += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(var / static_cast<double>(values.size() - 1));
  }
  return s;
}

EvalSummary Evaluate(const approx::Mlp& policy, const approx::Mlp* predictor,
                     const envs::EnvSpec& env, const EvalOptions& options,
                     const std::string& run_id) {
  if (options.seeds < 1 || options.horizon < 1) {
    throw ConfigError("evaluation needs at least one seed and one step");
  }
  if (policy.input_dim() != env.input_dim() ||
      (predictor && predictor->input_dim() != env.input_dim())) {
    throw LoadError("checkpoint input dimension " + std::to_string(policy.input_dim()) +
                    " does not match environment '" + env.name + "' (" +
                    std::to_string(env.input_dim()) + ")");
  }
  const fmdp::NetworkModel policy_model(policy, env);
  const fmdp::ConstantModel coin(0.5);
  std::optional<fmdp::NetworkModel> predictor_model;
  if (predictor) predictor_model.emplace(*predictor, env);
  const fmdp::DecisionModel& imputer =
      predictor_model ? static_cast<const fmdp::DecisionModel&>(*predictor_model) : coin;
  fmdp::StepOptions step_options;
  step_options.rule = options.rule;

  EvalSummary out;
  std::vector<double> mad, amd, mao, maa, reward;
  for (int s = 0; s < options.seeds; ++s) {
    const std::uint64_t seed = options.base_seed + static_cast<std::uint64_t>(s);
    fmdp::RunState run =
        fmdp::InitRunState(env, DeriveSeed(seed, kEvalStream), options.pool_size);
    fmdp::PoolDisparityTracker tracker(env, policy_model, options.rule, run.pool);
    std::vector<metrics::JointMass> observed(env.group_count);
    SeedSummary summary;
    summary.seed = seed;
    double sum_delta = 0.0;
    for (int t = 0; t < options.horizon; ++t) {
      const fmdp::StepResult step =
          fmdp::SampleStep(run, env, policy_model, imputer, step_options);
      const auto& rec = step.record;
      observed[rec.z].Add(rec.y_tilde, rec.a);
      tracker.Update(run.pool[static_cast<std::size_t>(rec.individual_id)]);
      const double delta = tracker.Gap(options.notion).value_or(0.0);
      const double d_obs = metrics::Gap(observed, options.notion).value_or(0.0);
      const double d_acc = metrics::AcceptedGap(observed, options.notion).value_or(0.0);
      sum_delta += delta;
      summary.mean_abs_delta += std::abs(delta);
      summary.mean_abs_observed += std::abs(d_obs);
      summary.mean_abs_accepted += std::abs(d_acc);
      summary.max_abs_accepted = std::max(summary.max_abs_accepted, std::abs(d_acc));
      if (options.trace_every > 0 &&
          ((t + 1) % options.trace_every == 0 || t + 1 == options.horizon)) {
        MetricsRow row;
        row.run_id = run_id;
        row.kind = "eval";
        row.index = t + 1;
        row.seed = static_cast<std::int64_t>(seed);
        row.reward_cumulative = run.resource;
        row.resource = run.resource;
        row.delta_true = delta;
        row.delta_observed = d_obs;
        row.delta_accepted = d_acc;
        row.groups.resize(env.group_count);
        for (int g = 0; g < env.group_count; ++g) {
          const double total = observed[g].Total();
          row.groups[g].r = total > 0.0 ? (observed[g].cell[0][0] + observed[g].cell[1][0]) / total : 0.0;
          row.groups[g].phi_tilde = total > 0.0 ? observed[g].Positives() / total : 0.0;
        }
        out.trace.push_back(std::move(row));
      }
    }
    const double h = static_cast<double>(options.horizon);
    summary.mean_abs_delta /= h;
    summary.mean_abs_observed /= h;
    summary.mean_abs_accepted /= h;
    summary.abs_mean_delta = std::abs(sum_delta / h);
    summary.final_resource = run.resource;
    mad.push_back(summary.mean_abs_delta);
    amd.push_back(summary.abs_mean_delta);
    mao.push_back(summary.mean_abs_observed);
    maa.push_back(summary.mean_abs_accepted);
    reward.push_back(summary.final_resource);
    out.seeds.push_back(summary);
  }
  out.mean_abs_delta = MeanStd(mad);
  out.abs_mean_delta = MeanStd(amd);
  out.mean_abs_observed = MeanStd(mao);
  out.mean_abs_accepted = MeanStd(maa);
  out.reward = MeanStd(reward);
  return out;
}

double SelectionDisparity(learn::Algorithm algorithm, const EvalSummary& eval) {
  switch (algorithm) {
    case learn::Algorithm::kPpo:
    case learn::Algorithm::kPocar:
      return eval.mean_abs_accepted.mean;
    case learn::Algorithm::kPocarOracle:
      return eval.mean_abs_delta.mean;
    case learn::Algorithm::kSellf:
    case learn::Algorithm::kSellfSemiStochastic:
      return eval.mean_abs_observed.mean;
  }
  return eval.mean_abs_observed.mean;
}

// --- results table --------------------------------------------------------

namespace {

constexpr const char* kResultColumns =
    "run_id,algorithm,notion,beta1,beta2,seed,omega,selection_disparity,"
    "mean_abs_delta,mean_abs_delta_std,abs_mean_delta,reward,reward_std,"
    "mean_abs_observed,mean_abs_accepted";

double ParseNumber(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw LoadError("results: bad number '" + s + "'");
  }
  if (used != s.size()) throw LoadError("results: bad number '" + s + "'");
  return v;
}

}  // namespace

void WriteResults(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << kResultsVersion << "\n" << kResultColumns << "\n";
  for (const auto& r : rows) {
    out << r.run_id << ',' << r.algorithm << ',' << r.notion << ','
        << FormatDouble(r.beta1) << ',' << FormatDouble(r.beta2) << ',' << r.seed
        << ',' << FormatDouble(r.omega) << ',' << FormatDouble(r.selection_disparity)
        << ',' << FormatDouble(r.mean_abs_delta) << ','
        << FormatDouble(r.mean_abs_delta_std) << ',' << FormatDouble(r.abs_mean_delta)
        << ',' << FormatDouble(r.reward) << ',' << FormatDouble(r.reward_std) << ','
        << FormatDouble(r.mean_abs_observed) << ','
        << FormatDouble(r.mean_abs_accepted) << "\n";
  }
}

std::vector<ResultRow> ReadResults(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kResultsVersion) {
    throw LoadError("not a sellf results file");
  }
  if (!std::getline(in, line) || line != kResultColumns) {
    throw LoadError("results header does not match v1");
  }
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::string field;
    std::istringstream s(line);
    while (std::getline(s, field, ',')) f.push_back(field);
    if (f.size() != 15) throw LoadError("results row has the wrong field count");
    ResultRow r;
    r.run_id = f[0];
    r.algorithm = f[1];
    r.notion = f[2];
    r.beta1 = ParseNumber(f[3]);
    r.beta2 = ParseNumber(f[4]);
    r.seed = static_cast<std::int64_t>(ParseNumber(f[5]));
    r.omega = ParseNumber(f[6]);
    r.selection_disparity = ParseNumber(f[7]);
    r.mean_abs_delta = ParseNumber(f[8]);
    r.mean_abs_delta_std = ParseNumber(f[9]);
    r.abs_mean_delta = ParseNumber(f[10]);
    r.reward = ParseNumber(f[11]);
    r.reward_std = ParseNumber(f[12]);
    r.mean_abs_observed = ParseNumber(f[13]);
    r.mean_abs_accepted = ParseNumber(f[14]);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<ResultRow> ReadResultsFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open results file " + path);
  return ReadResults(in);
}

// --- sweeps ---------------------------------------------------------------

SweepSpec ParseSweep(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed grid file: ") + e.what());
  }
  for (const auto& item : j.items()) {
    const auto& k = item.key();
    if (k != "base" && k != "grid" && k != "evaluate" && k != "workers" &&
        k != "output_dir") {
      throw ConfigError(k + ": unknown grid field");
    }
  }
  SweepSpec spec;
  const json base = j.value("base", json::object());
  const json grid = j.value("grid", json::object());
  if (!base.is_object() || !grid.is_object()) {
    throw ConfigError("base and grid must be objects");
  }
  spec.workers = j.value("workers", 1);
  if (spec.workers < 1) throw ConfigError("workers: must be >= 1");
  spec.output_dir = j.value("output_dir", spec.output_dir);
  if (j.contains("evaluate")) {
    const json& e = j.at("evaluate");
    spec.eval.seeds = e.value("seeds", spec.eval.seeds);
    spec.eval.horizon = e.value("horizon", spec.eval.horizon);
    spec.eval.trace_every = e.value("trace_every", spec.eval.trace_every);
    spec.eval.base_seed = e.value("base_seed", spec.eval.base_seed);
  }

  std::vector<std::pair<std::string, std::vector<json>>> axes;
  for (const auto& item : grid.items()) {
    if (!item.value().is_array() || item.value().empty()) {
      throw ConfigError(item.key() + ": grid values must be a non-empty array");
    }
    axes.emplace_back(item.key(), item.value().get<std::vector<json>>());
  }
  std::vector<std::size_t> pos(axes.size(), 0);
  while (true) {
    json config = base;
    for (std::size_t a = 0; a < axes.size(); ++a) {
      config[axes[a].first] = axes[a].second[pos[a]];
    }
    if (!config.contains("output_dir")) config["output_dir"] = spec.output_dir;
    spec.runs.push_back(ParseRunConfig(config.dump()));
    bool wrapped = true;
    for (std::size_t a = axes.size(); a-- > 0;) {
      if (++pos[a] < axes[a].second.size()) {
        wrapped = false;
        break;
      }
      pos[a] = 0;
    }
    if (wrapped) break;
  }
  return spec;
}

SweepSpec LoadSweep(const std::string& path) {
  try {
    return ParseSweep(ReadFile(path));
  } catch (const LoadError&) {
    throw ConfigError("cannot open grid file " + path);
  }
}

std::vector<ResultRow> RunSweep(const SweepSpec& sweep, std::ostream* progress) {
  const std::size_t n = sweep.runs.size();
  std::vector<ResultRow> results(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;

  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        const RunConfig& config = sweep.runs[i];
        const TrainOutcome trained = RunTraining(config);
        const envs::EnvSpec env = envs::LoadEnv(config.ResolvedDataDir(), config.env);
        EvalOptions eval = sweep.eval;
        eval.notion = config.train.notion;
        eval.rule = learn::RuleFor(config.train.algorithm);
        eval.pool_size = config.train.pool_size;
        const bool imputes = learn::UsesPredictorTraining(config.train.algorithm);
        const EvalSummary summary = Evaluate(trained.policy, imputes ? &trained.predictor : nullptr,
                                             env, eval, config.ResolvedRunId());
        {
          std::ofstream out(fs::path(trained.run_dir) / "eval.csv", std::ios::binary);
          WriteMetrics(out, summary.trace, env.group_count);
        }
        ResultRow& r = results[i];
        r.run_id = config.ResolvedRunId();
        r.algorithm = std::string(learn::ToString(config.train.algorithm));
        r.notion = std::string(ToString(config.train.notion));
        r.beta1 = config.train.beta1;
        r.beta2 = config.train.beta2;
        r.seed = static_cast<std::int64_t>(config.train.seed);
        r.omega = config.train.omega;
        r.selection_disparity = SelectionDisparity(config.train.algorithm, summary);
        r.mean_abs_delta = summary.mean_abs_delta.mean;
        r.mean_abs_delta_std = summary.mean_abs_delta.std;
        r.abs_mean_delta = summary.abs_mean_delta.mean;
        r.reward = summary.reward.mean;
        r.reward_std = summary.reward.std;
        r.mean_abs_observed = summary.mean_abs_observed.mean;
        r.mean_abs_accepted = summary.mean_abs_accepted.mean;
        if (progress) {
          std::lock_guard lock(log_mutex);
          *progress << "finished " << r.run_id << " |delta| " << r.mean_abs_delta
                    << " reward " << r.reward << "\n";
        }
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int workers = std::max(1, std::min<int>(sweep.workers, static_cast<int>(n)));
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

}  // namespace sellf::harness
