// Microbenchmarks for the hot paths of a training iteration.

#include <benchmark/benchmark.h>

#include "sellf/approx/mlp.h"
#include "sellf/envs/loader.h"
#include "sellf/fmdp/simulator.h"
#include "sellf/learn/losses.h"
#include "sellf/learn/trainer.h"
#include "sellf/oracle/tabular.h"

namespace {

using namespace sellf;

const envs::EnvSpec& Lending() {
  static const envs::EnvSpec env = envs::LoadEnv(SELLF_BENCH_DATA_DIR, "lending");
  return env;
}

void BM_PolicyForward(benchmark::State& state) {
  Rng rng(1);
  const approx::Mlp net = approx::MakeInitialized(approx::Architecture::kTanhMlp, 12, rng, 0.01);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(12, state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(net.Forward(x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PolicyForward)->Arg(64)->Arg(2048);

void BM_PolicyGradient(benchmark::State& state) {
  Rng rng(1);
  const approx::Mlp net = approx::MakeInitialized(approx::Architecture::kTanhMlp, 12, rng, 0.01);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(12, state.range(0));
  const approx::LossClosure loss = [](const Eigen::RowVectorXd& l, Eigen::RowVectorXd& d) {
    d = Eigen::RowVectorXd::Constant(l.size(), 1.0 / l.size());
    return l.mean();
  };
  for (auto _ : state) benchmark::DoNotOptimize(approx::Grad(net, x, loss));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PolicyGradient)->Arg(64);

void BM_CollectRollout(benchmark::State& state) {
  const envs::EnvSpec& env = Lending();
  Rng rng(2);
  const approx::Mlp net = approx::MakeInitialized(approx::Architecture::kTanhMlp,
                                                  env.input_dim(), rng, 0.01);
  const fmdp::NetworkModel policy(net, env);
  const fmdp::ConstantModel predictor(0.5);
  fmdp::RunState run = fmdp::InitRunState(env, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fmdp::CollectRollout(run, env, policy, predictor,
                                                  FairnessNotion::kEqualityOfOpportunity,
                                                  2048, {}, nullptr, 0));
  }
  state.SetItemsProcessed(state.iterations() * 2048);
}
BENCHMARK(BM_CollectRollout)->Unit(benchmark::kMillisecond);

void BM_TrainingIteration(benchmark::State& state) {
  learn::TrainConfig c;
  c.algorithm = static_cast<learn::Algorithm>(state.range(0));
  c.beta1 = 5.0;
  c.beta2 = 0.1;
  c.total_steps = 1'000'000'000;
  learn::Trainer trainer(c, Lending());
  for (auto _ : state) benchmark::DoNotOptimize(trainer.RunIteration());
  state.SetLabel(std::string(learn::ToString(c.algorithm)));
}
BENCHMARK(BM_TrainingIteration)
    ->Arg(static_cast<int>(learn::Algorithm::kPpo))
    ->Arg(static_cast<int>(learn::Algorithm::kSellf))
    ->Unit(benchmark::kMillisecond)
    ->Iterations(5);

void BM_Enumerate(benchmark::State& state) {
  Rng rng(4);
  oracle::InstanceOptions o;
  o.max_support = 50;
  const oracle::TabularInstance inst = oracle::RandomInstance(rng, o);
  for (auto _ : state) {
    benchmark::DoNotOptimize(oracle::Enumerate(inst, FairnessNotion::kAccuracyParity));
  }
}
BENCHMARK(BM_Enumerate);

}  // namespace
BENCHMARK_MAIN();
