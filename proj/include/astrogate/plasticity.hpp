#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "astrogate/common.hpp"
#include "astrogate/mlp.hpp"

namespace astrogate {

/// Weights of the five Ca2+ drive components.
struct GateCoeffs {
  double alpha = 1.2;   // local presynaptic activity
  double beta = 0.2;    // heterosynaptic drive (pre-activation)
  double gamma = 1.2;   // postsynaptic output
  double delta = 1.0;   // supervisor
  double eps_ca = 1.0;  // astrocytic signal

  void validate() const {
    if (!(alpha >= 0.0) || !(beta >= 0.0) || !(gamma >= 0.0) || !(delta >= 0.0) || !(eps_ca >= 0.0))
      throw ValidationError("gate coefficients must be >= 0");
  }
};

struct GateConfig {
  GateCoeffs coeffs;
  double k_steep = 1.0;
  double eta_theta = 0.01;

  void validate() const {
    coeffs.validate();
    if (!(k_steep > 0.0)) throw ValidationError("gate.k_steep must be > 0");
    if (!(eta_theta > 0.0 && eta_theta < 1.0)) throw ValidationError("gate.eta_theta must be in (0, 1)");
  }
};

struct UpdateHypers {
  double eta = 0.05;
  double lambda_m = 0.5;
  double lambda_w = 1e-4;
  double xi = 1e-3;
  double mu = 0.9;

  void validate() const {
    if (!(eta >= 0.0)) throw ValidationError("train.eta must be >= 0");
    if (!(lambda_m >= 0.0 && lambda_m <= 1.0)) throw ValidationError("train.lambda_m must be in [0, 1]");
    if (!(lambda_w >= 0.0)) throw ValidationError("train.lambda_w must be >= 0");
    if (!(xi >= 0.0)) throw ValidationError("train.xi must be >= 0");
    if (!(mu >= 0.0 && mu < 1.0)) throw ValidationError("train.mu must be in [0, 1)");
  }
};

/// C = alpha x_bar + beta [Wx] + gamma y_hat + delta Z + eps C_hat.
inline double total_ca_drive(double x_bar, double wx, double y_hat, double z_signal, double c_hat,
                             const GateCoeffs& k) {
  return k.alpha * x_bar + k.beta * wx + k.gamma * y_hat + k.delta * z_signal + k.eps_ca * c_hat;
}

/// Convenience overload: x_bar is the mean of the presynaptic vector, [Wx] its dot with w_row.
inline double total_ca_drive(const Eigen::VectorXd& x_vec, const Eigen::VectorXd& w_row, double y_hat,
                             double z_signal, double c_hat, const GateCoeffs& k) {
  return total_ca_drive(x_vec.mean(), w_row.dot(x_vec), y_hat, z_signal, c_hat, k);
}

/// 2y - 1 on the output layer, 0 on hidden layers.
inline double supervisor_signal(int y, bool output_layer) {
  if (y != 0 && y != 1) throw ValidationError("label must be 0 or 1");
  return output_layer ? 2.0 * y - 1.0 : 0.0;
}

inline double threshold_update(double theta, double c, double eta_theta) {
  return (1.0 - eta_theta) * theta + eta_theta * c;
}

inline double modulator(double c, double theta, double k_steep) { return 2.0 * logistic(k_steep * (c - theta)) - 1.0; }

/// Ring over unit indices, each unit linked to k neighbours per side; L = D - A.
/// k is clamped to n - 1 and a single unit gets the 1x1 zero matrix.
inline Eigen::MatrixXd build_synapse_laplacian(std::size_t n_units, std::size_t k_neighbors) {
  if (n_units == 0) throw ValidationError("synapse laplacian needs >= 1 unit");
  const auto n = static_cast<Eigen::Index>(n_units);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  const std::size_t k = std::min(k_neighbors, n_units - 1);
  for (std::size_t i = 0; i < n_units; ++i)
    for (std::size_t s = 1; s <= k; ++s) {
      const auto j = static_cast<Eigen::Index>((i + s) % n_units);
      if (j == static_cast<Eigen::Index>(i)) continue;
      a(static_cast<Eigen::Index>(i), j) = 1.0;
      a(j, static_cast<Eigen::Index>(i)) = 1.0;
    }
  Eigen::MatrixXd l = -a;
  l.diagonal() = a.rowwise().sum();
  return l;
}

/// Weights, per-unit gate state and momentum buffers of the Ca2+-gated learner.
struct GatedModel {
  Mlp net;
  std::vector<Eigen::VectorXd> theta;
  std::vector<Eigen::VectorXd> drive;      // last C per unit
  std::vector<Eigen::VectorXd> gate;       // last m per unit
  std::vector<Eigen::MatrixXd> prev_update;
  std::vector<Eigen::MatrixXd> laplacian;  // over each layer's postsynaptic units
  GateConfig gate_cfg;
  UpdateHypers hypers;
};

inline GatedModel make_gated_model(Mlp net, const GateConfig& gcfg, const UpdateHypers& hyp, std::size_t k_neighbors) {
  gcfg.validate();
  hyp.validate();
  GatedModel m;
  for (const auto& w : net.w) {
    m.theta.push_back(Eigen::VectorXd::Zero(w.rows()));
    m.drive.push_back(Eigen::VectorXd::Zero(w.rows()));
    m.gate.push_back(Eigen::VectorXd::Zero(w.rows()));
    m.prev_update.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
    m.laplacian.push_back(build_synapse_laplacian(static_cast<std::size_t>(w.rows()), k_neighbors));
  }
  m.net = std::move(net);
  m.gate_cfg = gcfg;
  m.hypers = hyp;
  return m;
}

/// Per-unit drives and gates for one sample. `c_hat` holds one signal per unit in layer-major order.
/// With `adapt_threshold`, theta moves toward C after m has been read against the old theta.
inline void compute_gates(GatedModel& m, const ForwardPass& fp, int y, const Eigen::Ref<const Eigen::VectorXd>& c_hat,
                          bool adapt_threshold) {
  const std::size_t nl = m.net.n_layers();
  Eigen::Index offset = 0;
  for (std::size_t l = 0; l < nl; ++l) {
    const bool output = l + 1 == nl;
    const double x_bar = fp.h[l].mean();
    const double z_sig = supervisor_signal(y, output);
    const Eigen::Index n = m.net.w[l].rows();
    for (Eigen::Index i = 0; i < n; ++i) {
      const double ch = offset + i < c_hat.size() ? c_hat(offset + i) : 0.0;
      const double c = total_ca_drive(x_bar, fp.z[l](i), fp.y_hat, z_sig, ch, m.gate_cfg.coeffs);
      m.drive[l](i) = c;
      m.gate[l](i) = modulator(c, m.theta[l](i), m.gate_cfg.k_steep);
      if (adapt_threshold) m.theta[l](i) = threshold_update(m.theta[l](i), c, m.gate_cfg.eta_theta);
    }
    offset += n;
  }
}

/// dw = -eta (1 + lambda_m m_i) delta_i h_j - lambda_w w_ij - xi [L W]_ij + mu dw_prev, then w += dw.
/// Biases take only the gated gradient step.
inline void gated_update(GatedModel& m, const Gradients& g) {
  const auto& hp = m.hypers;
  for (std::size_t l = 0; l < m.net.n_layers(); ++l) {
    const Eigen::VectorXd scale = (-hp.eta * (1.0 + hp.lambda_m * m.gate[l].array())).matrix();
    Eigen::MatrixXd dw = scale.asDiagonal() * g.dw[l];
    dw -= hp.lambda_w * m.net.w[l];
    dw -= hp.xi * (m.laplacian[l] * m.net.w[l]);
    dw += hp.mu * m.prev_update[l];
    const Eigen::VectorXd db = scale.cwiseProduct(g.db[l]);
    if (!dw.allFinite() || !db.allFinite())
      throw NumericDivergence("non-finite weight update in layer " + std::to_string(l + 1));
    m.net.w[l] += dw;
    m.net.b[l] += db;
    m.prev_update[l] = std::move(dw);
  }
}

}  // namespace astrogate
