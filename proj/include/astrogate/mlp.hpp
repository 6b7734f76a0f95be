#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "astrogate/common.hpp"

namespace astrogate {

enum class Activation { logistic, tanh, relu };

inline Activation parse_activation(const std::string& s) {
  if (s == "logistic") return Activation::logistic;
  if (s == "tanh") return Activation::tanh;
  if (s == "relu") return Activation::relu;
  throw ValidationError("unknown activation '" + s + "' (logistic, tanh, relu)");
}

inline const char* activation_name(Activation a) {
  switch (a) {
    case Activation::logistic: return "logistic";
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
  }
  return "?";
}

/// Output-layer error term. `literal` keeps the extra sigma'(z) factor, `simplified` uses y_hat - y,
/// which is the exact BCE gradient with respect to the output pre-activation.
enum class OutputDelta { literal, simplified };

inline OutputDelta parse_output_delta(const std::string& s) {
  if (s == "literal") return OutputDelta::literal;
  if (s == "simplified") return OutputDelta::simplified;
  throw ValidationError("unknown output delta '" + s + "' (literal, simplified)");
}

/// widths = {d, n_1, ..., 1}; the output unit is always logistic.
struct MlpArchitecture {
  std::vector<std::size_t> widths;
  Activation hidden = Activation::logistic;

  void validate() const {
    if (widths.size() < 2) throw ValidationError("architecture needs an input and an output layer");
    for (auto w : widths)
      if (w == 0) throw ValidationError("layer widths must be >= 1");
    if (widths.back() != 1) throw ValidationError("output layer must have exactly one unit");
  }
  std::size_t n_layers() const { return widths.size() - 1; }
  std::size_t n_units() const {
    std::size_t n = 0;
    for (std::size_t l = 1; l < widths.size(); ++l) n += widths[l];
    return n;
  }
};

inline Eigen::VectorXd activate(const Eigen::VectorXd& z, Activation a) {
  switch (a) {
    case Activation::logistic: return z.unaryExpr([](double v) { return logistic(v); });
    case Activation::tanh: return z.array().tanh().matrix();
    case Activation::relu: return z.cwiseMax(0.0);
  }
  return z;
}

/// Derivative expressed through the pre-activation z and activation h.
inline Eigen::VectorXd activation_derivative(const Eigen::VectorXd& z, const Eigen::VectorXd& h, Activation a) {
  switch (a) {
    case Activation::logistic: return (h.array() * (1.0 - h.array())).matrix();
    case Activation::tanh: return (1.0 - h.array().square()).matrix();
    case Activation::relu: return (z.array() > 0.0).cast<double>().matrix();
  }
  return Eigen::VectorXd::Ones(z.size());
}

/// Dense feed-forward net. w[l] is (widths[l+1] x widths[l]).
struct Mlp {
  MlpArchitecture arch;
  std::vector<Eigen::MatrixXd> w;
  std::vector<Eigen::VectorXd> b;

  std::size_t n_layers() const { return w.size(); }
  std::size_t n_weights() const {
    std::size_t n = 0;
    for (const auto& m : w) n += static_cast<std::size_t>(m.size());
    return n;
  }
};

inline Mlp zero_mlp(const MlpArchitecture& arch) {
  arch.validate();
  Mlp m;
  m.arch = arch;
  for (std::size_t l = 0; l + 1 < arch.widths.size(); ++l) {
    const auto rows = static_cast<Eigen::Index>(arch.widths[l + 1]);
    const auto cols = static_cast<Eigen::Index>(arch.widths[l]);
    m.w.push_back(Eigen::MatrixXd::Zero(rows, cols));
    m.b.push_back(Eigen::VectorXd::Zero(rows));
  }
  return m;
}

/// Xavier-uniform weights, zero biases.
inline Mlp init_mlp(const MlpArchitecture& arch, std::uint64_t seed) {
  Mlp m = zero_mlp(arch);
  std::mt19937_64 rng(seed);
  for (auto& w : m.w) {
    const double a = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    std::uniform_real_distribution<double> u(-a, a);
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = u(rng);
  }
  return m;
}

struct ForwardPass {
  std::vector<Eigen::VectorXd> h;  // h[0] = x, h[l] = activation of layer l
  std::vector<Eigen::VectorXd> z;  // z[l-1] = pre-activation of layer l
  double y_hat = 0.5;
};

inline ForwardPass forward(const Mlp& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != model.w.front().cols())
    throw ValidationError("forward: input has " + std::to_string(x.size()) + " features, model expects " +
                          std::to_string(model.w.front().cols()));
  if (!x.allFinite()) throw ValidationError("forward: non-finite input");
  ForwardPass fp;
  fp.h.reserve(model.n_layers() + 1);
  fp.z.reserve(model.n_layers());
  fp.h.emplace_back(x);
  for (std::size_t l = 0; l < model.n_layers(); ++l) {
    fp.z.push_back(model.w[l] * fp.h.back() + model.b[l]);
    const bool last = l + 1 == model.n_layers();
    fp.h.push_back(activate(fp.z.back(), last ? Activation::logistic : model.arch.hidden));
  }
  fp.y_hat = fp.h.back()(0);
  return fp;
}

inline constexpr double kProbClamp = 1e-12;

inline double bce_single(double y_hat, double y) {
  const double p = std::clamp(y_hat, kProbClamp, 1.0 - kProbClamp);
  return -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
}

/// Mean Bernoulli negative log-likelihood, predictions clamped to [1e-12, 1 - 1e-12].
inline double bce_loss(std::span<const double> y_hat, std::span<const double> y) {
  if (y_hat.size() != y.size()) throw ValidationError("bce_loss: size mismatch");
  if (y_hat.empty()) throw ValidationError("bce_loss: empty batch");
  double s = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) s += bce_single(y_hat[k], y[k]);
  return s / static_cast<double>(y.size());
}

struct Gradients {
  std::vector<Eigen::VectorXd> delta;  // per layer
  std::vector<Eigen::MatrixXd> dw;     // delta_i h_j
  std::vector<Eigen::VectorXd> db;
};

inline Gradients backprop(const Mlp& model, const ForwardPass& fp, double y, OutputDelta mode) {
  const std::size_t nl = model.n_layers();
  Gradients g;
  g.delta.resize(nl);
  g.dw.resize(nl);
  g.db.resize(nl);
  const double err = fp.y_hat - y;
  const double out = mode == OutputDelta::literal ? err * fp.y_hat * (1.0 - fp.y_hat) : err;
  g.delta[nl - 1] = Eigen::VectorXd::Constant(1, out);
  for (std::size_t l = nl - 1; l > 0; --l) {
    const Eigen::VectorXd back = model.w[l].transpose() * g.delta[l];
    g.delta[l - 1] = back.cwiseProduct(activation_derivative(fp.z[l - 1], fp.h[l], model.arch.hidden));
  }
  for (std::size_t l = 0; l < nl; ++l) {
    g.dw[l] = g.delta[l] * fp.h[l].transpose();
    g.db[l] = g.delta[l];
  }
  return g;
}

inline bool predict_positive(double y_hat, double threshold = 0.5) { return y_hat >= threshold; }

}  // namespace astrogate
