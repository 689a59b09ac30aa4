#include "sellf/approx/mlp.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace sellf::approx {

namespace {

using ConstMatMap = Eigen::Map<const Eigen::MatrixXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;
using MatMap = Eigen::Map<Eigen::MatrixXd>;
using VecMap = Eigen::Map<Eigen::VectorXd>;

constexpr int H = kHiddenWidth;

bool IsDeep(Architecture arch) { return arch != Architecture::kLinear; }

// Offsets of each block inside the flat parameter vector.
struct Layout {
  Eigen::Index w1, b1, w2, b2, w3, b3, total;
};

Layout MakeLayout(Architecture arch, int d) {
  Layout l{};
  if (!IsDeep(arch)) {
    l.w1 = 0;
    l.b1 = d;
    l.total = d + 1;
    return l;
  }
  l.w1 = 0;
  l.b1 = l.w1 + Eigen::Index{H} * d;
  l.w2 = l.b1 + H;
  l.b2 = l.w2 + Eigen::Index{H} * H;
  l.w3 = l.b2 + H;
  l.b3 = l.w3 + H;
  l.total = l.b3 + 1;
  return l;
}

Eigen::MatrixXd Activate(Architecture arch, const Eigen::MatrixXd& z) {
  if (arch == Architecture::kTanhMlp) return z.array().tanh().matrix();
  return z.cwiseMax(0.0);
}

// Derivative of the activation expressed through pre-activation z and
// activation h. ReLU uses the one-sided derivative 0 at the kink.
Eigen::MatrixXd ActivationSlope(Architecture arch, const Eigen::MatrixXd& z,
                                const Eigen::MatrixXd& h) {
  if (arch == Architecture::kTanhMlp) {
    return (1.0 - h.array().square()).matrix();
  }
  return (z.array() > 0.0).cast<double>().matrix();
}

struct ForwardCache {
  Eigen::MatrixXd z1, h1, z2, h2;
  Eigen::RowVectorXd out;
};

ForwardCache RunForward(Architecture arch, int d, const Eigen::VectorXd& p,
                        const Eigen::MatrixXd& x) {
  const Layout l = MakeLayout(arch, d);
  ForwardCache c;
  if (!IsDeep(arch)) {
    ConstMatMap w(p.data() + l.w1, 1, d);
    c.out = (w * x).array() + p[l.b1];
    return c;
  }
  ConstMatMap w1(p.data() + l.w1, H, d);
  ConstVecMap b1(p.data() + l.b1, H);
  ConstMatMap w2(p.data() + l.w2, H, H);
  ConstVecMap b2(p.data() + l.b2, H);
  ConstMatMap w3(p.data() + l.w3, 1, H);
  c.z1.noalias() = w1 * x;
  c.z1.colwise() += b1;
  c.h1 = Activate(arch, c.z1);
  c.z2.noalias() = w2 * c.h1;
  c.z2.colwise() += b2;
  c.h2 = Activate(arch, c.z2);
  c.out = (w3 * c.h2).array() + p[l.b3];
  return c;
}

Eigen::MatrixXd Orthogonal(Eigen::Index rows, Eigen::Index cols, double gain,
                           Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const Eigen::Index big = std::max(rows, cols);
  const Eigen::Index small = std::min(rows, cols);
  Eigen::MatrixXd g(big, small);
  for (Eigen::Index j = 0; j < small; ++j) {
    for (Eigen::Index i = 0; i < big; ++i) g(i, j) = normal(rng);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q =
      qr.householderQ() * Eigen::MatrixXd::Identity(big, small);
  const Eigen::MatrixXd r = qr.matrixQR().topRows(small);
  for (Eigen::Index j = 0; j < small; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  Eigen::MatrixXd w = rows >= cols ? q : Eigen::MatrixXd(q.transpose());
  return gain * w;
}

}  // namespace

std::string_view ToString(Architecture arch) {
  switch (arch) {
    case Architecture::kTanhMlp:
      return "tanh_mlp";
    case Architecture::kLinear:
      return "linear";
    case Architecture::kReluMlp:
      return "relu_mlp";
  }
  return "unknown";
}

Architecture ParseArchitecture(std::string_view text) {
  if (text == "tanh_mlp") return Architecture::kTanhMlp;
  if (text == "linear") return Architecture::kLinear;
  if (text == "relu_mlp") return Architecture::kReluMlp;
  throw ConfigError("unknown architecture '" + std::string(text) + "'");
}

double Sigmoid(double logit) {
  if (logit >= 0.0) return 1.0 / (1.0 + std::exp(-logit));
  const double e = std::exp(logit);
  return e / (1.0 + e);
}

Mlp::Mlp(Architecture arch, int input_dim)
    : arch_(arch),
      input_dim_(input_dim),
      params_(Eigen::VectorXd::Zero(ParameterCount(arch, input_dim))) {
  if (input_dim < 1) throw ConfigError("network input dimension must be >= 1");
}

Eigen::Index Mlp::ParameterCount(Architecture arch, int input_dim) {
  return MakeLayout(arch, input_dim).total;
}

void Mlp::set_parameters(const Eigen::VectorXd& params) {
  if (params.size() != params_.size()) {
    throw ConfigError("parameter block has " + std::to_string(params.size()) +
                      " entries, architecture expects " +
                      std::to_string(params_.size()));
  }
  if (!params.allFinite()) throw NumericalError("non-finite parameters");
  params_ = params;
}

void Mlp::CheckInput(Eigen::Index rows) const {
  if (rows != input_dim_) {
    throw ConfigError("input dimension " + std::to_string(rows) +
                      " does not match network input " +
                      std::to_string(input_dim_));
  }
}

Eigen::RowVectorXd Mlp::Forward(const Eigen::MatrixXd& inputs) const {
  CheckInput(inputs.rows());
  return RunForward(arch_, input_dim_, params_, inputs).out;
}

double Mlp::Logit(std::span<const double> input) const {
  CheckInput(static_cast<Eigen::Index>(input.size()));
  const Layout l = MakeLayout(arch_, input_dim_);
  const double* p = params_.data();
  ConstVecMap x(input.data(), input_dim_);
  if (!IsDeep(arch_)) {
    return ConstVecMap(p + l.w1, input_dim_).dot(x) + p[l.b1];
  }
  Eigen::Matrix<double, H, 1> h1 =
      ConstMatMap(p + l.w1, H, input_dim_) * x + ConstVecMap(p + l.b1, H);
  Eigen::Matrix<double, H, 1> z2;
  if (arch_ == Architecture::kTanhMlp) {
    h1 = h1.array().tanh().matrix();
    z2 = ConstMatMap(p + l.w2, H, H) * h1 + ConstVecMap(p + l.b2, H);
    z2 = z2.array().tanh().matrix();
  } else {
    h1 = h1.cwiseMax(0.0);
    z2 = ConstMatMap(p + l.w2, H, H) * h1 + ConstVecMap(p + l.b2, H);
    z2 = z2.cwiseMax(0.0);
  }
  return ConstVecMap(p + l.w3, H).dot(z2) + p[l.b3];
}

Eigen::VectorXd Mlp::Backward(const Eigen::MatrixXd& inputs,
                              const Eigen::RowVectorXd& dlogits) const {
  CheckInput(inputs.rows());
  const Layout l = MakeLayout(arch_, input_dim_);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(params_.size());
  if (!IsDeep(arch_)) {
    MatMap(grad.data() + l.w1, 1, input_dim_).noalias() =
        dlogits * inputs.transpose();
    grad[l.b1] = dlogits.sum();
    return grad;
  }
  const ForwardCache c = RunForward(arch_, input_dim_, params_, inputs);
  const double* p = params_.data();
  ConstMatMap w2(p + l.w2, H, H);
  ConstMatMap w3(p + l.w3, 1, H);

  MatMap(grad.data() + l.w3, 1, H).noalias() = dlogits * c.h2.transpose();
  grad[l.b3] = dlogits.sum();
  Eigen::MatrixXd dz2 = w3.transpose() * dlogits;
  dz2.array() *= ActivationSlope(arch_, c.z2, c.h2).array();
  MatMap(grad.data() + l.w2, H, H).noalias() = dz2 * c.h1.transpose();
  VecMap(grad.data() + l.b2, H) = dz2.rowwise().sum();
  Eigen::MatrixXd dz1 = w2.transpose() * dz2;
  dz1.array() *= ActivationSlope(arch_, c.z1, c.h1).array();
  MatMap(grad.data() + l.w1, H, input_dim_).noalias() =
      dz1 * inputs.transpose();
  VecMap(grad.data() + l.b1, H) = dz1.rowwise().sum();
  return grad;
}

bool Mlp::operator==(const Mlp& other) const {
  return arch_ == other.arch_ && input_dim_ == other.input_dim_ &&
         params_.size() == other.params_.size() &&
         std::equal(params_.data(), params_.data() + params_.size(),
                    other.params_.data());
}

Mlp MakeInitialized(Architecture arch, int input_dim, Rng& rng,
                    double output_scale) {
  Mlp net(arch, input_dim);
  const Layout l = MakeLayout(arch, input_dim);
  Eigen::VectorXd& p = net.mutable_parameters();
  if (!IsDeep(arch)) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(input_dim));
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      p[i] = bound * (2.0 * UniformUnit(rng) - 1.0);
    }
    return net;
  }
  const double gain = std::sqrt(2.0);
  MatMap(p.data() + l.w1, H, input_dim) = Orthogonal(H, input_dim, gain, rng);
  MatMap(p.data() + l.w2, H, H) = Orthogonal(H, H, gain, rng);
  MatMap(p.data() + l.w3, 1, H) = Orthogonal(1, H, output_scale, rng);
  return net;
}

LossGradient Grad(const Mlp& net, const Eigen::MatrixXd& inputs,
                  const LossClosure& loss) {
  const Eigen::RowVectorXd logits = net.Forward(inputs);
  Eigen::RowVectorXd dlogits = Eigen::RowVectorXd::Zero(logits.size());
  LossGradient out;
  out.loss = loss(logits, dlogits);
  if (!std::isfinite(out.loss)) throw NumericalError("non-finite loss");
  out.gradient = net.Backward(inputs, dlogits);
  return out;
}

void SaveCheckpoint(const Mlp& net, std::ostream& out) {
  out << "sellf-mlp 1 " << ToString(net.architecture()) << ' '
      << net.input_dim() << ' ' << net.parameter_count() << '\n';
  char buf[64];
  for (Eigen::Index i = 0; i < net.parameter_count(); ++i) {
    std::snprintf(buf, sizeof(buf), "%a\n", net.parameters()[i]);
    out << buf;
  }
}

Mlp LoadCheckpoint(std::istream& in) {
  std::string magic, arch_name;
  int version = 0, input_dim = 0;
  Eigen::Index count = 0;
  if (!(in >> magic >> version >> arch_name >> input_dim >> count) ||
      magic != "sellf-mlp" || version != 1) {
    throw LoadError("not a sellf-mlp v1 checkpoint");
  }
  Mlp net(ParseArchitecture(arch_name), input_dim);
  if (count != net.parameter_count()) {
    throw LoadError("checkpoint parameter count " + std::to_string(count) +
                    " does not match architecture");
  }
  Eigen::VectorXd params(count);
  std::string token;
  for (Eigen::Index i = 0; i < count; ++i) {
    if (!(in >> token)) throw LoadError("truncated checkpoint");
    params[i] = std::strtod(token.c_str(), nullptr);
  }
  net.set_parameters(params);
  return net;
}

void SaveCheckpointFile(const Mlp& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw LoadError("cannot write checkpoint " + path);
  SaveCheckpoint(net, out);
}

Mlp LoadCheckpointFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open checkpoint " + path);
  return LoadCheckpoint(in);
}

}  // namespace sellf::approx
