#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "astrogate/signal_map.hpp"

using namespace astrogate;

namespace {

Eigen::MatrixXd random_stochastic(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd q(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) q(i, j) = u(rng);
    q.col(j) /= q.col(j).sum();
  }
  return q;
}

}  // namespace

TEST(SynapseMap, IdentityPassesCellsThrough) {
  const SynapseMap map(Eigen::MatrixXd::Identity(5, 5));
  const std::vector<double> c{0.1, 2.0, 3.5, 0.0, 9.0};
  const auto out = map_to_synapses(map, c);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(out(i), c[static_cast<std::size_t>(i)]);
}

TEST(SynapseMap, OneCellSplitEvenly) {
  Eigen::MatrixXd q(2, 1);
  q << 0.5, 0.5;
  const auto out = map_to_synapses(SynapseMap(q), std::vector<double>{4.0});
  EXPECT_DOUBLE_EQ(out(0), 2.0);
  EXPECT_DOUBLE_EQ(out(1), 2.0);
  EXPECT_DOUBLE_EQ(out.sum(), 4.0);
}

TEST(SynapseMap, PreservesTotalMass) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index ns = 1 + trial % 17, nc = 1 + (trial * 7) % 13;
    const SynapseMap map(random_stochastic(ns, nc, rng));
    std::vector<double> c(static_cast<std::size_t>(nc));
    for (double& v : c) v = u(rng);
    double sum = 0.0;
    for (double v : c) sum += v;
    EXPECT_NEAR(map_to_synapses(map, c).sum(), sum, 1e-12 * std::max(1.0, sum));
  }
}

TEST(SynapseMap, RejectsInvalidMatrices) {
  Eigen::MatrixXd q(2, 1);
  q << 0.7, 0.7;
  EXPECT_THROW(SynapseMap{q}, ValidationError);
  q << 1.5, -0.5;
  EXPECT_THROW(SynapseMap{q}, ValidationError);
  EXPECT_THROW(map_to_synapses(SynapseMap(Eigen::MatrixXd::Identity(3, 3)), std::vector<double>{1.0, 2.0}),
               ValidationError);
}

TEST(DefaultMap, SquareIsOneEntryPerColumn) {
  const auto q = build_default_map(6, 6).matrix();
  for (Eigen::Index j = 0; j < 6; ++j) {
    EXPECT_EQ((q.col(j).array() != 0.0).count(), 1);
    EXPECT_EQ(q.col(j).sum(), 1.0);
  }
  EXPECT_TRUE(q.isApprox(Eigen::MatrixXd::Identity(6, 6)));
}

TEST(DefaultMap, FourSynapsesTwoCells) {
  const auto q = build_default_map(4, 2).matrix();
  for (Eigen::Index j = 0; j < 2; ++j) {
    EXPECT_EQ((q.col(j).array() == 0.5).count(), 2);
    EXPECT_EQ((q.col(j).array() == 0.0).count(), 2);
  }
}

TEST(DefaultMap, FewerSynapsesThanCellsAndRandomSparse) {
  const auto q = build_default_map(17, 54).matrix();
  EXPECT_EQ(q.rows(), 17);
  for (Eigen::Index j = 0; j < 54; ++j) EXPECT_EQ(q.col(j).sum(), 1.0);
  const auto r = build_default_map(17, 54, 5, true, 3);
  const auto r2 = build_default_map(17, 54, 5, true, 3);
  EXPECT_EQ(r.digest(), r2.digest());
  for (Eigen::Index j = 0; j < 54; ++j) {
    EXPECT_EQ((r.matrix().col(j).array() > 0.0).count(), 3);
    EXPECT_NEAR(r.matrix().col(j).sum(), 1.0, 1e-12);
  }
}

TEST(Smoothing, GainAtTauEqualDt) {
  EXPECT_DOUBLE_EQ(smoothing_gain(0.1, 0.1), 1.0 - std::exp(-1.0));
  EXPECT_NEAR(smoothing_gain(0.1, 0.1), 0.63212, 5e-6);
  EXPECT_EQ(smoothing_gain(0.1, 0.0), 1.0);
}

TEST(Smoothing, HalfGainScalarRecurrence) {
  SynapseSignalState st;
  st.tau_s = 1.0 / std::log(2.0);  // phi = 1 - e^{-ln 2} = 0.5 at dt = 1
  st.c_tilde = Eigen::VectorXd::Zero(1);
  ema_update(st, Eigen::VectorXd::Constant(1, 2.0), 1.0);
  EXPECT_NEAR(st.c_tilde(0), 1.0, 1e-15);
}

TEST(Smoothing, NoSmoothingLimitCopiesInput) {
  SynapseSignalState st;
  st.tau_s = 1e-300;
  st.c_tilde = Eigen::VectorXd::Zero(3);
  const Eigen::Vector3d c(1.0, -2.0, 5.0);
  ema_update(st, c, 0.1);
  EXPECT_TRUE(st.c_tilde.isApprox(c));
}

TEST(Smoothing, ConstantInputConvergesGeometrically) {
  SynapseSignalState st;
  st.tau_s = 5.0;
  st.c_tilde = Eigen::VectorXd::Zero(1);
  const double phi = smoothing_gain(0.1, 5.0);
  double prev_gap = 3.0;
  for (int k = 1; k <= 500; ++k) {
    ema_update(st, Eigen::VectorXd::Constant(1, 3.0), 0.1);
    const double gap = 3.0 - st.c_tilde(0);
    EXPECT_NEAR(gap, prev_gap * (1.0 - phi), 1e-12);
    prev_gap = gap;
  }
  EXPECT_LT(prev_gap, 3.0 * std::pow(1.0 - phi, 499));
}

TEST(Smoothing, FirstSampleSeedsState) {
  SynapseSignalState st;
  ema_update(st, Eigen::Vector2d(4.0, 1.0), 0.1);
  EXPECT_EQ(st.c_tilde, Eigen::Vector2d(4.0, 1.0));
}

TEST(ZNorm, AtMeanIsZero) {
  SynapseSignalState st;
  st.initialized = true;
  st.mu = Eigen::Vector2d(1.5, -3.0);
  st.sigma2 = Eigen::Vector2d(2.0, 0.1);
  const auto out = znorm_update(st, Eigen::Vector2d(1.5, -3.0), 0.1);
  EXPECT_EQ(out(0), 0.0);
  EXPECT_EQ(out(1), 0.0);
}

TEST(ZNorm, ScalarEvaluation) {
  SynapseSignalState st;
  st.initialized = true;
  st.epsilon = 1e-6;
  st.mu = Eigen::VectorXd::Zero(1);
  st.sigma2 = Eigen::VectorXd::Ones(1);
  const double got = znorm_update(st, Eigen::VectorXd::Constant(1, 2.0), 0.02)(0);
  EXPECT_DOUBLE_EQ(got, 2.0 / (1.0 + 1e-6));
  EXPECT_NEAR(got, 1.999998, 1e-6);
}

TEST(ZNorm, ConstantStreamCollapsesVariance) {
  SynapseSignalState st;
  for (int k = 0; k < 2000; ++k) {
    const auto& c_hat = znorm_update(st, Eigen::VectorXd::Constant(1, 7.0), 0.05);
    EXPECT_TRUE(std::isfinite(c_hat(0)));
    EXPECT_LE(std::abs(c_hat(0)), 1e-8);  // round-off in mu over epsilon
  }
  EXPECT_LT(st.sigma2(0), 1e-20);
}

TEST(ZNorm, AffineInvarianceOfStandardisedSignal) {
  // After the moments settle, a*x + b standardises to (nearly) the same values as x.
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  SynapseSignalState a, b;
  a.epsilon = b.epsilon = 0.0;
  double worst = 0.0;
  for (int k = 0; k < 3000; ++k) {
    const double x = std::sin(0.01 * k) + 0.3 * n(rng);
    const double za = znorm_update(a, Eigen::VectorXd::Constant(1, x), 0.01)(0);
    const double zb = znorm_update(b, Eigen::VectorXd::Constant(1, 4.0 * x + 9.0), 0.01)(0);
    if (k > 2000) worst = std::max(worst, std::abs(za - zb));
  }
  EXPECT_LT(worst, 1e-3);
}

TEST(Signals, PipelineShapesAndErrors) {
  Trajectory t;
  t.n_cells = 2;
  for (int s = 0; s < 10; ++s) {
    t.times.push_back(0.1 * s);
    t.c_series.push_back(1.0 + s);
    t.c_series.push_back(0.5 * s);
  }
  const auto map = build_default_map(4, 2);
  const auto sig = compute_signals(t, map, SignalConfig{});
  EXPECT_EQ(sig.n_synapses, 4u);
  EXPECT_EQ(sig.n_steps(), 10u);
  for (double v : sig.values) EXPECT_TRUE(std::isfinite(v));
  EXPECT_EQ(sig.at_learning_step(13)[0], sig.row(3)[0]);
  EXPECT_THROW(compute_signals(t, build_default_map(4, 3), SignalConfig{}), ValidationError);
  t.times.resize(1);
  EXPECT_THROW(compute_signals(t, map, SignalConfig{}), ValidationError);
}
