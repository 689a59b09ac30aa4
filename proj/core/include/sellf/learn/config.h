#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "sellf/approx/mlp.h"
#include "sellf/common.h"
#include "sellf/fmdp/types.h"

namespace sellf::learn {

enum class Algorithm { kPpo, kPocar, kPocarOracle, kSellf, kSellfSemiStochastic };

std::string_view ToString(Algorithm algorithm);
Algorithm ParseAlgorithm(std::string_view text);

bool UsesPredictorTraining(Algorithm algorithm);
bool UsesHiddenLabels(Algorithm algorithm);
fmdp::ActionRule RuleFor(Algorithm algorithm);

struct TrainConfig {
  Algorithm algorithm = Algorithm::kSellf;
  FairnessNotion notion = FairnessNotion::kEqualityOfOpportunity;
  double omega = 0.05;
  double beta1 = 0.0;
  double beta2 = 0.0;
  std::int64_t total_steps = 500000;
  int n_steps = 2048;
  int minibatch = 64;
  int ppo_epochs = 10;
  int predictor_steps = 25;
  int predictor_minibatch = 64;
  double clip_eps = 0.2;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double lr_policy = 1e-5;
  double lr_value = 1e-3;
  double lr_predictor = 1e-2;
  double lr_predictor_decay = 0.95;
  double value_coef = 0.5;
  double max_grad_norm = 0.5;
  bool normalize_advantage = true;
  // Lets tests switch predictor training off for SELLF variants.
  bool train_predictor = true;
  approx::Architecture predictor_arch = approx::Architecture::kLinear;
  int subsample = 10;
  // Samples per group used for the importance-weighted error estimate.
  int ipw_eval_samples = 2048;
  // <= 0 picks the architecture default.
  double pdim = 0.0;
  double delta_conf = 0.05;
  int pool_size = 0;  // <= 0 uses the environment default
  // Redraw the pool from the initial distribution at the start of every
  // collection window, making each window an episode of its own.
  bool reset_pool = false;
  std::uint64_t seed = 0;

  // Throws ConfigError naming the first invalid field.
  void Validate() const;
  std::int64_t Iterations() const {
    return (total_steps + n_steps - 1) / n_steps;
  }
};

}  // namespace sellf::learn
