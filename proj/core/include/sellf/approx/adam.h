#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace sellf::approx {

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adaptive-moment optimizer over a flat parameter vector.
class Adam {
 public:
  explicit Adam(Eigen::Index size, AdamOptions options = {});

  // Throws NumericalError if `grad` has non-finite entries.
  void Step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, double lr);

  std::int64_t step_count() const { return steps_; }

 private:
  AdamOptions options_;
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
  std::int64_t steps_ = 0;
};

// Rescales `grad` in place so its Euclidean norm is at most `max_norm`.
void ClipGradientNorm(Eigen::VectorXd& grad, double max_norm);

}  // namespace sellf::approx
