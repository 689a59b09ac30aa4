#pragma once

#include <Eigen/Dense>
#include <functional>
#include <iosfwd>
#include <span>
#include <string_view>

#include "sellf/common.h"

namespace sellf::approx {

inline constexpr int kHiddenWidth = 64;

// The three fixed function approximators used by the learners:
//   kTanhMlp  input -> 64 -> 64 -> 1 with tanh hidden units (policy, value)
//   kLinear   a single affine map (linear predictor)
//   kReluMlp  input -> 64 -> 64 -> 1 with rectified-linear hidden units
enum class Architecture { kTanhMlp, kLinear, kReluMlp };

std::string_view ToString(Architecture arch);
Architecture ParseArchitecture(std::string_view text);

double Sigmoid(double logit);

// Parameters live in one flat vector so optimizers, finite differences and
// checkpoints can treat every architecture the same way. Layer blocks are
// column-major views into it: W1, b1, W2, b2, W3, b3 (or W, b when linear).
class Mlp {
 public:
  Mlp(Architecture arch, int input_dim);

  static Eigen::Index ParameterCount(Architecture arch, int input_dim);

  Architecture architecture() const { return arch_; }
  int input_dim() const { return input_dim_; }
  Eigen::Index parameter_count() const { return params_.size(); }

  const Eigen::VectorXd& parameters() const { return params_; }
  Eigen::VectorXd& mutable_parameters() { return params_; }
  void set_parameters(const Eigen::VectorXd& params);

  // One logit per column of `inputs` (input_dim x n).
  Eigen::RowVectorXd Forward(const Eigen::MatrixXd& inputs) const;

  double Logit(std::span<const double> input) const;
  double Probability(std::span<const double> input) const {
    return Sigmoid(Logit(input));
  }

  // Parameter gradient given d(loss)/d(logit) for each column of `inputs`.
  Eigen::VectorXd Backward(const Eigen::MatrixXd& inputs,
                           const Eigen::RowVectorXd& dlogits) const;

  bool operator==(const Mlp& other) const;

 private:
  void CheckInput(Eigen::Index rows) const;

  Architecture arch_;
  int input_dim_;
  Eigen::VectorXd params_;
};

// Orthogonal hidden layers with gain sqrt(2); the output layer is orthogonal
// with gain `output_scale` (0.01 for the policy head, 1 for value heads).
// The linear architecture uses the uniform(-1/sqrt(d), 1/sqrt(d)) scheme.
Mlp MakeInitialized(Architecture arch, int input_dim, Rng& rng,
                    double output_scale);

// A loss defined on network outputs. Returns the scalar loss and writes
// d(loss)/d(logit) per column into `dlogits`.
using LossClosure = std::function<double(const Eigen::RowVectorXd& logits,
                                         Eigen::RowVectorXd& dlogits)>;

struct LossGradient {
  double loss = 0.0;
  Eigen::VectorXd gradient;
};

// Analytic gradient of `loss(net(inputs))` by backpropagation.
// Throws NumericalError on a non-finite loss.
LossGradient Grad(const Mlp& net, const Eigen::MatrixXd& inputs,
                  const LossClosure& loss);

// Text checkpoint: an architecture header followed by hex-float parameters,
// so a load reproduces the parameters bit for bit.
void SaveCheckpoint(const Mlp& net, std::ostream& out);
Mlp LoadCheckpoint(std::istream& in);
void SaveCheckpointFile(const Mlp& net, const std::string& path);
Mlp LoadCheckpointFile(const std::string& path);

}  // namespace sellf::approx
