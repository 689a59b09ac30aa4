#include "sellf/learn/config.h"

#include <cmath>

namespace sellf::learn {

std::string_view ToString(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::kPpo:
      return "PPO";
    case Algorithm::kPocar:
      return "POCAR";
    case Algorithm::kPocarOracle:
      return "POCAR_ORACLE";
    case Algorithm::kSellf:
      return "SELLF";
    case Algorithm::kSellfSemiStochastic:
      return "SELLF_SEMISTO";
  }
  return "unknown";
}

Algorithm ParseAlgorithm(std::string_view text) {
  for (Algorithm a : {Algorithm::kPpo, Algorithm::kPocar, Algorithm::kPocarOracle,
                      Algorithm::kSellf, Algorithm::kSellfSemiStochastic}) {
    if (text == ToString(a)) return a;
  }
  throw ConfigError("unknown algorithm '" + std::string(text) + "'");
}

bool UsesPredictorTraining(Algorithm algorithm) {
  return algorithm == Algorithm::kSellf ||
         algorithm == Algorithm::kSellfSemiStochastic;
}

bool UsesHiddenLabels(Algorithm algorithm) {
  return algorithm == Algorithm::kPocarOracle;
}

fmdp::ActionRule RuleFor(Algorithm algorithm) {
  return algorithm == Algorithm::kSellfSemiStochastic
             ? fmdp::ActionRule::kSemiStochastic
             : fmdp::ActionRule::kStochastic;
}

void TrainConfig::Validate() const {
  auto require = [](bool ok, const char* field, const char* rule) {
    if (!ok) throw ConfigError(std::string(field) + ": " + rule);
  };
  require(omega > 0.0 && std::isfinite(omega), "omega", "must be > 0");
  require(beta1 >= 0.0 && std::isfinite(beta1), "beta1", "must be >= 0");
  require(beta2 >= 0.0 && std::isfinite(beta2), "beta2", "must be >= 0");
  require(clip_eps > 0.0 && clip_eps < 1.0, "clip_eps", "must lie in (0, 1)");
  require(total_steps >= 1, "total_steps", "must be >= 1");
  require(n_steps >= 1, "n_steps", "must be >= 1");
  require(minibatch >= 1, "minibatch", "must be >= 1");
  require(ppo_epochs >= 0, "ppo_epochs", "must be >= 0");
  require(predictor_steps >= 0, "predictor_steps", "must be >= 0");
  require(predictor_minibatch >= 1, "predictor_minibatch", "must be >= 1");
  require(gamma >= 0.0 && gamma <= 1.0, "gamma", "must lie in [0, 1]");
  require(gae_lambda >= 0.0 && gae_lambda <= 1.0, "gae_lambda",
          "must lie in [0, 1]");
  require(lr_policy >= 0.0, "lr_policy", "must be >= 0");
  require(lr_value >= 0.0, "lr_value", "must be >= 0");
  require(lr_predictor >= 0.0, "lr_predictor", "must be >= 0");
  require(lr_predictor_decay > 0.0 && lr_predictor_decay <= 1.0,
          "lr_predictor_decay", "must lie in (0, 1]");
  require(value_coef >= 0.0, "value_coef", "must be >= 0");
  require(max_grad_norm > 0.0, "max_grad_norm", "must be > 0");
  require(subsample >= 0, "subsample", "must be >= 0");
  require(ipw_eval_samples >= 1, "ipw_eval_samples", "must be >= 1");
  require(delta_conf > 0.0 && delta_conf < 1.0, "delta_conf",
          "must lie in (0, 1)");
}

}  // namespace sellf::learn
