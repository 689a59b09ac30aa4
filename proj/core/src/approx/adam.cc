#include "sellf/approx/adam.h"

#include <cmath>

#include "sellf/common.h"

namespace sellf::approx {

Adam::Adam(Eigen::Index size, AdamOptions options)
    : options_(options),
      m_(Eigen::VectorXd::Zero(size)),
      v_(Eigen::VectorXd::Zero(size)) {}

void Adam::Step(Eigen::VectorXd& params, const Eigen::VectorXd& grad,
                double lr) {
  if (grad.size() != params.size() || grad.size() != m_.size()) {
    throw ConfigError("optimizer shape mismatch");
  }
  if (!grad.allFinite()) throw NumericalError("non-finite gradient");
  ++steps_;
  const double b1 = options_.beta1;
  const double b2 = options_.beta2;
  m_ = b1 * m_ + (1.0 - b1) * grad;
  v_ = b2 * v_ + (1.0 - b2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  const double step = lr * std::sqrt(c2) / c1;
  params.array() -=
      step * m_.array() / (v_.array().sqrt() + options_.epsilon * std::sqrt(c2));
}

void ClipGradientNorm(Eigen::VectorXd& grad, double max_norm) {
  const double norm = grad.norm();
  if (norm > max_norm && norm > 0.0) grad *= max_norm / norm;
}

}  // namespace sellf::approx
