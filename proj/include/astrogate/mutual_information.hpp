#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <span>
#include <vector>

#include "astrogate/common.hpp"
#include "astrogate/lattice.hpp"
#include "astrogate/simulator.hpp"

namespace astrogate {

/// Thrown when no bin has the transmitter off, so the receiver baseline is undefined.
class BaselineUndefined : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BinnedSeries {
  double bin_width_h = 1.0;
  std::vector<std::uint8_t> x;  // transmitter on in bin
  std::vector<std::uint8_t> y;  // receiver z-score above threshold
  std::vector<double> receiver_mean;
  double baseline_mu = 0.0;
  double baseline_sigma = 0.0;
  double tau_rx = 2.0;

  std::size_t size() const { return x.size(); }
};

struct MiProfile {
  std::vector<double> i_of_delta;  // bits, lag 0..delta_max
  std::size_t delta_star = 0;
  double i_star = 0.0;
};

inline constexpr double kBinZEpsilon = 1e-9;

/// Bins [k h, (k+1) h), k = 0..N-1 with N = floor(T_sim / h).
inline BinnedSeries bin_trajectory(const Trajectory& traj, const TransmitterSchedule& schedule,
                                   std::size_t receiver_cell, double h, double tau_rx) {
  if (!(h > 0.0)) throw ValidationError("bin width h must be > 0");
  if (receiver_cell >= traj.n_cells) throw ValidationError("receiver cell out of range");
  const double t_sim = traj.t_end();
  const auto n = static_cast<std::size_t>(std::floor(t_sim / h + 1e-9));
  if (n == 0) throw ValidationError("trajectory shorter than one bin");

  BinnedSeries out;
  out.bin_width_h = h;
  out.tau_rx = tau_rx;
  out.x.assign(n, 0);
  out.y.assign(n, 0);
  out.receiver_mean.assign(n, 0.0);

  for (std::size_t k = 0; k < n; ++k) {
    const double lo = static_cast<double>(k) * h;
    const double hi = static_cast<double>(k + 1) * h;
    for (const auto& [a, b] : schedule.on_intervals)
      if (a < hi && b > lo) {
        out.x[k] = 1;
        break;
      }
  }

  std::vector<std::size_t> counts(n, 0);
  for (std::size_t s = 0; s < traj.n_samples(); ++s) {
    const double t = traj.times[s];
    const auto k = static_cast<std::size_t>(std::floor(t / h + 1e-9));
    if (k >= n) continue;
    out.receiver_mean[k] += traj.c(s, receiver_cell);
    ++counts[k];
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (counts[k] == 0) throw ValidationError("bin " + std::to_string(k) + " contains no trajectory samples");
    out.receiver_mean[k] /= static_cast<double>(counts[k]);
  }

  double sum = 0.0;
  std::size_t n_off = 0;
  for (std::size_t k = 0; k < n; ++k)
    if (!out.x[k]) {
      sum += out.receiver_mean[k];
      ++n_off;
    }
  if (n_off == 0) throw BaselineUndefined("transmitter is on in every bin; receiver baseline undefined");
  out.baseline_mu = sum / static_cast<double>(n_off);
  double ss = 0.0;
  for (std::size_t k = 0; k < n; ++k)
    if (!out.x[k]) ss += (out.receiver_mean[k] - out.baseline_mu) * (out.receiver_mean[k] - out.baseline_mu);
  out.baseline_sigma = std::sqrt(ss / static_cast<double>(n_off));

  for (std::size_t k = 0; k < n; ++k) {
    const double z = (out.receiver_mean[k] - out.baseline_mu) / (out.baseline_sigma + kBinZEpsilon);
    out.y[k] = z > tau_rx ? 1 : 0;
  }
  return out;
}

/// Plug-in MI (bits) between x_k and y_{k+lag} over the N - lag overlapping pairs.
inline double lagged_mi_at(std::span<const std::uint8_t> x, std::span<const std::uint8_t> y, std::size_t lag) {
  const std::size_t n = std::min(x.size(), y.size());
  const std::size_t pairs = n - lag;
  std::size_t counts[2][2] = {{0, 0}, {0, 0}};
  for (std::size_t k = 0; k < pairs; ++k) ++counts[x[k] ? 1 : 0][y[k + lag] ? 1 : 0];
  const double total = static_cast<double>(pairs);
  double p[2][2];
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) p[a][b] = static_cast<double>(counts[a][b]) / total;
  const double px[2] = {p[0][0] + p[0][1], p[1][0] + p[1][1]};
  const double py[2] = {p[0][0] + p[1][0], p[0][1] + p[1][1]};
  double mi = 0.0;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      if (p[a][b] > 0.0) mi += p[a][b] * std::log2(p[a][b] / (px[a] * py[b]));
  return mi;
}

/// Profile for lags 0..delta_max. Argmax ties resolve to the smallest lag.
inline MiProfile lagged_mi(std::span<const std::uint8_t> x, std::span<const std::uint8_t> y, std::size_t delta_max) {
  if (x.size() != y.size()) throw ValidationError("lagged_mi: series lengths differ");
  const std::size_t n = x.size();
  if (delta_max >= n) throw ValidationError("lagged_mi: delta_max must be < N");
  if (n - delta_max < 4) throw ValidationError("lagged_mi: need N - delta_max >= 4 joint samples");
  MiProfile out;
  out.i_of_delta.resize(delta_max + 1);
  for (std::size_t d = 0; d <= delta_max; ++d) {
    double v = lagged_mi_at(x, y, d);
    if (v < -1e-12) throw std::logic_error("negative mutual information estimate");
    v = std::max(0.0, v);
    out.i_of_delta[d] = v;
    if (v > out.i_star) {
      out.i_star = v;
      out.delta_star = d;
    }
  }
  return out;
}

inline MiProfile lagged_mi(const BinnedSeries& s, std::size_t delta_max) { return lagged_mi(s.x, s.y, delta_max); }

struct HopSummary {
  std::size_t hop = 0;
  std::size_t n = 0;
  double mean_i_star = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

struct MiAnalysisConfig {
  double h = 1.0;
  double tau_rx = 2.0;
  std::size_t delta_max = 50;
};

/// Groups every non-transmitter cell by BFS hop distance from the transmitter and reports the mean
/// lag-optimised MI per hop with a normal-approximation 95% CI. Hops with fewer than two
/// (run, receiver) samples are skipped with a warning on stderr.
inline std::vector<HopSummary> distance_decay(const std::vector<Trajectory>& runs, const AstrocyteGraph& graph,
                                              const TransmitterSchedule& schedule, const MiAnalysisConfig& cfg) {
  const auto hops = graph.hop_distances(schedule.tx_cell);
  std::map<std::size_t, std::vector<double>> by_hop;
  for (const auto& traj : runs) {
    for (std::size_t cell = 0; cell < graph.n_cells(); ++cell) {
      if (cell == schedule.tx_cell) continue;
      const auto binned = bin_trajectory(traj, schedule, cell, cfg.h, cfg.tau_rx);
      by_hop[hops[cell]].push_back(lagged_mi(binned, cfg.delta_max).i_star);
    }
  }
  std::vector<HopSummary> out;
  for (const auto& [hop, values] : by_hop) {
    if (values.size() < 2) {
      std::fprintf(stderr, "warning: hop %zu has %zu sample(s); skipped\n", hop, values.size());
      continue;
    }
    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double half = 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    out.push_back({hop, values.size(), mean, mean - half, mean + half});
  }
  return out;
}

}  // namespace astrogate
