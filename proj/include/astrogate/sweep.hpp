#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "astrogate/common.hpp"
#include "astrogate/plasticity.hpp"

namespace astrogate {

inline constexpr std::array<const char*, 5> kCoeffNames{"alpha", "beta", "gamma", "delta", "eps_ca"};

struct SweepGrid {
  std::array<std::vector<double>, 5> axes{{{1.2}, {0.2}, {1.2}, {1.0}, {1.0}}};

  std::size_t size() const {
    std::size_t n = 1;
    for (const auto& a : axes) n *= a.size();
    return n;
  }

  /// Cartesian product, last axis fastest.
  std::vector<GateCoeffs> cells() const {
    for (std::size_t k = 0; k < axes.size(); ++k)
      if (axes[k].empty()) throw ValidationError(std::string("sweep.") + kCoeffNames[k] + " grid is empty");
    std::vector<GateCoeffs> out;
    std::array<std::size_t, 5> idx{};
    for (std::size_t c = 0; c < size(); ++c) {
      std::size_t rem = c;
      for (std::size_t k = axes.size(); k-- > 0;) {
        idx[k] = rem % axes[k].size();
        rem /= axes[k].size();
      }
      out.push_back({axes[0][idx[0]], axes[1][idx[1]], axes[2][idx[2]], axes[3][idx[3]], axes[4][idx[4]]});
    }
    return out;
  }
};

inline std::array<double, 5> coeff_vector(const GateCoeffs& g) { return {g.alpha, g.beta, g.gamma, g.delta, g.eps_ca}; }

/// Sample Pearson correlation; NaN when either side has zero variance or fewer than two points.
inline double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ValidationError("pearson: length mismatch");
  const std::size_t n = a.size();
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  double ma = 0.0, mb = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    ma += a[k];
    mb += b[k];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sab += (a[k] - ma) * (b[k] - mb);
    saa += (a[k] - ma) * (a[k] - ma);
    sbb += (b[k] - mb) * (b[k] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sab / std::sqrt(saa * sbb);
}

struct SweepStats {
  std::array<double, 5> pearson_r;
  std::array<double, 5> std_coef;  // standardised OLS coefficients; NaN for constant axes
};

/// Pearson r and standardised regression coefficients of accuracy on each gate coefficient.
/// Constant columns are left out of the regression. Degenerate inputs print a warning.
inline SweepStats sweep_statistics(const std::vector<GateCoeffs>& cells, std::span<const double> accuracy) {
  if (cells.empty()) throw ValidationError("sweep: empty grid");
  if (cells.size() != accuracy.size()) throw ValidationError("sweep: one accuracy per grid cell required");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  SweepStats st;
  st.pearson_r.fill(nan);
  st.std_coef.fill(nan);
  const std::size_t n = cells.size();
  std::array<std::vector<double>, 5> cols;
  for (const auto& c : cells) {
    const auto v = coeff_vector(c);
    for (std::size_t k = 0; k < 5; ++k) cols[k].push_back(v[k]);
  }
  for (std::size_t k = 0; k < 5; ++k) st.pearson_r[k] = pearson(cols[k], accuracy);
  if (n < 2) {
    std::fprintf(stderr, "warning: sweep has %zu cell(s); correlations undefined\n", n);
    return st;
  }
  auto standardise = [n](std::span<const double> v, double& sd) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    sd = std::sqrt(ss / static_cast<double>(n - 1));
    Eigen::VectorXd out(static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k < n; ++k) out(static_cast<Eigen::Index>(k)) = sd > 0.0 ? (v[k] - mean) / sd : 0.0;
    return out;
  };
  double sd_y = 0.0;
  const Eigen::VectorXd y = standardise(accuracy, sd_y);
  if (sd_y == 0.0) {
    std::fprintf(stderr, "warning: accuracy is constant across the sweep; regression undefined\n");
    return st;
  }
  std::vector<std::size_t> used;
  std::vector<Eigen::VectorXd> zs;
  for (std::size_t k = 0; k < 5; ++k) {
    double sd = 0.0;
    Eigen::VectorXd z = standardise(cols[k], sd);
    if (sd > 0.0) {
      used.push_back(k);
      zs.push_back(std::move(z));
    }
  }
  if (used.empty()) return st;
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(used.size()));
  for (std::size_t j = 0; j < used.size(); ++j) x.col(static_cast<Eigen::Index>(j)) = zs[j];
  const Eigen::VectorXd beta = x.colPivHouseholderQr().solve(y);
  for (std::size_t j = 0; j < used.size(); ++j) st.std_coef[used[j]] = beta(static_cast<Eigen::Index>(j));
  return st;
}

/// Index of the largest |standardised coefficient|, ignoring NaN; 5 when none is defined.
inline std::size_t top_coefficient(const SweepStats& st) {
  std::size_t best = 5;
  double best_v = -1.0;
  for (std::size_t k = 0; k < 5; ++k)
    if (std::isfinite(st.std_coef[k]) && std::abs(st.std_coef[k]) > best_v) {
      best_v = std::abs(st.std_coef[k]);
      best = k;
    }
  return best;
}

}  // namespace astrogate
