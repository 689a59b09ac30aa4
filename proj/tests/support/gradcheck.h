#pragma once

// Central finite-difference oracle for network losses, shared by the unit
// tests and the acceptance binary.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "sellf/approx/mlp.h"
#include "sellf/learn/losses.h"

namespace sellf::testing {

struct GradCheck {
  Eigen::Index coordinates = 0;
  Eigen::Index agreeing = 0;
  double worst = 0.0;
  double fraction() const {
    return coordinates ? static_cast<double>(agreeing) / coordinates : 0.0;
  }
};

// Coordinates where both derivatives are below `tiny` agree trivially;
// elsewhere the relative error |a - n| / max(|a|, |n|) must be <= tol.
inline GradCheck CompareToFiniteDifferences(const approx::Mlp& net,
                                            const Eigen::MatrixXd& inputs,
                                            const approx::LossClosure& loss,
                                            double h = 1e-5, double tol = 1e-4,
                                            double tiny = 1e-9) {
  const auto analytic = approx::Grad(net, inputs, loss).gradient;
  approx::Mlp probe = net;
  Eigen::RowVectorXd scratch;
  auto eval = [&](const approx::Mlp& m) {
    return loss(m.Forward(inputs), scratch);
  };
  GradCheck out;
  out.coordinates = analytic.size();
  for (Eigen::Index k = 0; k < analytic.size(); ++k) {
    const double orig = net.parameters()[k];
    probe.mutable_parameters()[k] = orig + h;
    const double up = eval(probe);
    probe.mutable_parameters()[k] = orig - h;
    const double down = eval(probe);
    probe.mutable_parameters()[k] = orig;
    const double numeric = (up - down) / (2.0 * h);
    const double a = analytic[k];
    const double scale = std::max(std::abs(a), std::abs(numeric));
    const double rel = scale < tiny ? 0.0 : std::abs(a - numeric) / scale;
    out.worst = std::max(out.worst, rel);
    if (rel <= tol) ++out.agreeing;
  }
  return out;
}

// Random parameters at a scale where tanh units are not saturated.
inline approx::Mlp RandomNet(approx::Architecture arch, int dim, std::mt19937_64& rng) {
  approx::Mlp net(arch, dim);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd p = net.parameters();
  const double scale = arch == approx::Architecture::kLinear ? 0.5 : 0.3;
  for (Eigen::Index k = 0; k < p.size(); ++k) p[k] = scale * normal(rng);
  net.set_parameters(p);
  return net;
}

inline Eigen::MatrixXd RandomInputs(int dim, int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd x(dim, n);
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, j) = u(rng);
  }
  return x;
}

enum class LossKind { kPpoClip, kRenyi, kWeightedCrossEntropy, kValue };

inline const char* LossName(LossKind kind) {
  switch (kind) {
    case LossKind::kPpoClip: return "ppo_clip";
    case LossKind::kRenyi: return "renyi";
    case LossKind::kWeightedCrossEntropy: return "weighted_cross_entropy";
    case LossKind::kValue: return "value_mse";
  }
  return "?";
}

// A random instance of each learner loss over `n` outputs of `net`.
inline approx::LossClosure RandomLoss(LossKind kind, const approx::Mlp& net,
                                      const Eigen::MatrixXd& inputs,
                                      std::mt19937_64& rng) {
  const auto n = static_cast<std::size_t>(inputs.cols());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  switch (kind) {
    case LossKind::kPpoClip: {
      learn::PpoBatch batch;
      const Eigen::RowVectorXd logits = net.Forward(inputs);
      for (std::size_t j = 0; j < n; ++j) {
        const double p = approx::Sigmoid(logits[static_cast<Eigen::Index>(j)]);
        const int a = u(rng) < 0.5 ? 1 : 0;
        // Old probabilities a generic distance away, so some samples sit in
        // the clipped region and some do not.
        const double ratio = 0.6 + 0.8 * u(rng);
        const double taken = a == 1 ? p : 1.0 - p;
        const double old_taken = std::clamp(taken / ratio, 1e-3, 1.0 - 1e-3);
        batch.actions.push_back(a);
        batch.old_accept_probs.push_back(a == 1 ? old_taken : 1.0 - old_taken);
        batch.advantages.push_back(2.0 * u(rng) - 1.0);
      }
      return [batch](const Eigen::RowVectorXd& l, Eigen::RowVectorXd& d) {
        return learn::PpoClipLoss(l, batch, 0.2, d);
      };
    }
    case LossKind::kRenyi: {
      learn::RenyiBatch batch;
      for (std::size_t j = 0; j < n; ++j) {
        batch.groups.push_back(u(rng) < 0.5 ? 0 : 1);
        batch.predecessor_reject.push_back(0.1 + 0.85 * u(rng));
      }
      batch.group_scale = {0.3 + u(rng), 0.3 + u(rng)};
      batch.accept_rate_cum = {0.2 + 0.7 * u(rng), 0.2 + 0.7 * u(rng)};
      batch.reject_rate = {0.2 + 0.7 * u(rng), 0.2 + 0.7 * u(rng)};
      return [batch](const Eigen::RowVectorXd& l, Eigen::RowVectorXd& d) {
        return learn::RenyiLoss(l, batch, d);
      };
    }
    case LossKind::kWeightedCrossEntropy: {
      std::vector<int> labels;
      std::vector<double> weights;
      std::vector<GroupId> groups;
      for (std::size_t j = 0; j < n; ++j) {
        labels.push_back(u(rng) < 0.5 ? 1 : 0);
        weights.push_back(0.1 + 3.0 * u(rng));
        groups.push_back(u(rng) < 0.5 ? 0 : 1);
      }
      return [labels, weights, groups](const Eigen::RowVectorXd& l, Eigen::RowVectorXd& d) {
        return learn::WeightedCrossEntropy(l, labels, weights, groups, 2, d);
      };
    }
    case LossKind::kValue: {
      std::vector<double> targets;
      for (std::size_t j = 0; j < n; ++j) targets.push_back(4.0 * u(rng) - 2.0);
      return [targets](const Eigen::RowVectorXd& v, Eigen::RowVectorXd& d) {
        return learn::ValueLoss(v, targets, 0.5, d);
      };
    }
  }
  return {};
}

}  // namespace sellf::testing
