#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "astrogate/common.hpp"
#include "astrogate/simulator.hpp"

namespace astrogate {

/// Nonnegative, column-stochastic cell -> synapse map (n_synapses x n_cells).
class SynapseMap {
 public:
  SynapseMap() = default;

  explicit SynapseMap(Eigen::MatrixXd q) : q_(std::move(q)) {
    if (q_.size() == 0) throw ValidationError("synapse map must be non-empty");
    if ((q_.array() < 0.0).any()) throw ValidationError("synapse map entries must be >= 0");
    for (Eigen::Index j = 0; j < q_.cols(); ++j)
      if (std::abs(q_.col(j).sum() - 1.0) > 1e-12) throw ValidationError("synapse map columns must sum to 1");
  }

  Eigen::Index n_synapses() const { return q_.rows(); }
  Eigen::Index n_cells() const { return q_.cols(); }
  const Eigen::MatrixXd& matrix() const { return q_; }

  std::uint64_t digest() const { return fnv1a_doubles(q_.data(), static_cast<std::size_t>(q_.size())); }

 private:
  Eigen::MatrixXd q_;
};

/// C_bar = Q c.
inline Eigen::VectorXd map_to_synapses(const SynapseMap& map, std::span<const double> c) {
  if (static_cast<Eigen::Index>(c.size()) != map.n_cells())
    throw ValidationError("map_to_synapses: cell vector length does not match map");
  Eigen::Map<const Eigen::VectorXd> cv(c.data(), static_cast<Eigen::Index>(c.size()));
  return map.matrix() * cv;
}

/// Round-robin partition: with at least as many synapses as cells, synapse s belongs to cell
/// s mod n_cells and each cell spreads its mass uniformly over its synapses; with fewer synapses,
/// cell c feeds synapse c mod n_synapses entirely. `random_sparse` instead gives every cell up to
/// `fan_out` random synapses with random positive weights.
inline SynapseMap build_default_map(std::size_t n_synapses, std::size_t n_cells, std::uint64_t seed = 0,
                                    bool random_sparse = false, std::size_t fan_out = 2) {
  if (n_synapses == 0 || n_cells == 0) throw ValidationError("build_default_map: sizes must be >= 1");
  const auto ns = static_cast<Eigen::Index>(n_synapses);
  const auto nc = static_cast<Eigen::Index>(n_cells);
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(ns, nc);
  if (random_sparse) {
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> order(n_synapses);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::uniform_real_distribution<double> weight(0.1, 1.0);
    const std::size_t k = std::clamp<std::size_t>(fan_out, 1, n_synapses);
    for (Eigen::Index j = 0; j < nc; ++j) {
      std::shuffle(order.begin(), order.end(), rng);
      double total = 0.0;
      for (std::size_t r = 0; r < k; ++r) {
        const double w = weight(rng);
        q(static_cast<Eigen::Index>(order[r]), j) = w;
        total += w;
      }
      q.col(j) /= total;
    }
  } else if (n_synapses >= n_cells) {
    for (Eigen::Index s = 0; s < ns; ++s) q(s, s % nc) = 1.0;
    for (Eigen::Index j = 0; j < nc; ++j) q.col(j) /= q.col(j).sum();
  } else {
    for (Eigen::Index j = 0; j < nc; ++j) q(j % ns, j) = 1.0;
  }
  // Renormalise exactly so the column sums survive the 1e-12 contract.
  for (Eigen::Index j = 0; j < nc; ++j) {
    const double sum = q.col(j).sum();
    if (sum != 1.0) q.col(j) /= sum;
  }
  return SynapseMap(std::move(q));
}

/// phi = 1 - exp(-dt / tau).
inline double smoothing_gain(double dt, double tau) {
  if (!(dt > 0.0)) throw ValidationError("smoothing gain: dt must be > 0");
  if (!(tau > 0.0)) return 1.0;
  return 1.0 - std::exp(-dt / tau);
}

/// Per-synapse smoothing and streaming z-normalisation of the mapped Ca2+ drive.
struct SynapseSignalState {
  Eigen::VectorXd c_bar;
  Eigen::VectorXd c_tilde;
  Eigen::VectorXd mu;
  Eigen::VectorXd sigma2;
  Eigen::VectorXd c_hat;
  double tau_s = 5.0;      // ms
  double tau_rho = 50.0;   // ms
  double epsilon = 1e-6;   // uM
  bool initialized = false;
};

/// C~ <- (1 - phi) C~ + phi C_bar. The first call seeds C~ with C_bar.
inline void ema_update(SynapseSignalState& st, const Eigen::VectorXd& c_bar, double dt) {
  st.c_bar = c_bar;
  if (st.c_tilde.size() != c_bar.size()) {
    st.c_tilde = c_bar;
    return;
  }
  const double phi = smoothing_gain(dt, st.tau_s);
  st.c_tilde = (1.0 - phi) * st.c_tilde + phi * c_bar;
}

/// Reads C_hat from the current moments, then advances mu and sigma^2 with gain rho.
/// Moments are seeded on first use with mu = C~ and sigma^2 = 1 uM^2.
inline const Eigen::VectorXd& znorm_update(SynapseSignalState& st, const Eigen::VectorXd& c_tilde, double rho) {
  if (!st.initialized) {
    st.mu = c_tilde;
    st.sigma2 = Eigen::VectorXd::Ones(c_tilde.size());
    st.initialized = true;
  }
  st.c_hat = (c_tilde - st.mu).array() / (st.sigma2.array().sqrt() + st.epsilon);
  const Eigen::VectorXd dev = c_tilde - st.mu;
  st.mu = (1.0 - rho) * st.mu + rho * c_tilde;
  st.sigma2 = (1.0 - rho) * st.sigma2.array() + rho * dev.array().square();
  return st.c_hat;
}

struct SignalConfig {
  double tau_s = 5.0;
  double tau_rho_factor = 10.0;  // tau_rho = factor * tau_s
  double epsilon = 1e-6;
};

/// Standardised synapse signals, row-major [step][synapse].
struct SignalSeries {
  std::size_t n_synapses = 0;
  std::vector<double> values;

  std::size_t n_steps() const { return n_synapses == 0 ? 0 : values.size() / n_synapses; }
  std::span<const double> row(std::size_t step) const {
    return std::span<const double>(values).subspan(step * n_synapses, n_synapses);
  }
  /// Cyclic replay: learning step t reads sample t mod N.
  std::span<const double> at_learning_step(std::uint64_t t) const {
    return row(static_cast<std::size_t>(t % n_steps()));
  }
};

/// Full cell -> synapse pipeline over a cached trajectory.
inline SignalSeries compute_signals(const Trajectory& traj, const SynapseMap& map, const SignalConfig& cfg) {
  if (traj.n_samples() < 2) throw ValidationError("signals: trajectory needs at least 2 samples");
  if (static_cast<Eigen::Index>(traj.n_cells) != map.n_cells())
    throw ValidationError("signals: trajectory cell count does not match synapse map");
  const double dt = traj.times[1] - traj.times[0];
  const double rho = smoothing_gain(dt, cfg.tau_rho_factor * cfg.tau_s);
  SynapseSignalState st;
  st.tau_s = cfg.tau_s;
  st.tau_rho = cfg.tau_rho_factor * cfg.tau_s;
  st.epsilon = cfg.epsilon;
  SignalSeries out;
  out.n_synapses = static_cast<std::size_t>(map.n_synapses());
  out.values.reserve(traj.n_samples() * out.n_synapses);
  for (std::size_t s = 0; s < traj.n_samples(); ++s) {
    ema_update(st, map_to_synapses(map, traj.c_row(s)), dt);
    const auto& c_hat = znorm_update(st, st.c_tilde, rho);
    out.values.insert(out.values.end(), c_hat.data(), c_hat.data() + c_hat.size());
  }
  return out;
}

}  // namespace astrogate
