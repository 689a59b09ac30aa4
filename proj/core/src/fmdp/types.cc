#include "sellf/fmdp/types.h"

namespace sellf::fmdp {

double Reward(int y, int a, double cost) {
  if (!(cost > 0.0 && cost < 1.0)) {
    throw ConfigError("acceptance cost must lie in (0,1)");
  }
  return a * (y - cost);
}

std::vector<std::size_t> MemoryBuffer::IndicesOfGroup(GroupId z) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (samples_[i].z == z) out.push_back(i);
  }
  return out;
}

NetworkModel::NetworkModel(const approx::Mlp& net, const envs::EnvSpec& env)
    : net_(net), env_(env) {
  if (net.input_dim() != env.input_dim()) {
    throw LoadError("network input " + std::to_string(net.input_dim()) +
                    " does not match environment input " +
                    std::to_string(env.input_dim()));
  }
}

double NetworkModel::Probability(std::span<const double> x, GroupId z) const {
  Features input(env_.input_dim());
  env_.EncodeInput(x, z, input);
  return net_.Probability(input);
}

int SemiStochasticAction(double pi, Rng& rng) {
  return UniformUnit(rng) < EffectiveAcceptProb(pi, ActionRule::kSemiStochastic)
             ? 1
             : 0;
}

}  // namespace sellf::fmdp
