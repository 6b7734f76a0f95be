#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "astrogate/mlp.hpp"
#include "astrogate/plasticity.hpp"

using namespace astrogate;

namespace {

double sigmoid(double u) { return 1.0 / (1.0 + std::exp(-u)); }

Mlp random_net(std::vector<std::size_t> widths, Activation act, std::mt19937_64& rng) {
  Mlp m = init_mlp({std::move(widths), act}, rng());
  std::normal_distribution<double> n(0.0, 0.5);
  for (auto& b : m.b)
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = n(rng);
  return m;
}

template <class Loss>
std::vector<Eigen::MatrixXd> finite_difference(Mlp m, const Eigen::VectorXd& x, Loss loss, double h = 1e-6) {
  std::vector<Eigen::MatrixXd> out;
  for (auto& w : m.w) {
    Eigen::MatrixXd g(w.rows(), w.cols());
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) {
        const double keep = w(i, j);
        w(i, j) = keep + h;
        const double up = loss(forward(m, x).y_hat);
        w(i, j) = keep - h;
        const double down = loss(forward(m, x).y_hat);
        w(i, j) = keep;
        g(i, j) = (up - down) / (2.0 * h);
      }
    out.push_back(g);
  }
  return out;
}

double relative_error(const std::vector<Eigen::MatrixXd>& a, const std::vector<Eigen::MatrixXd>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t l = 0; l < a.size(); ++l) {
    num += (a[l] - b[l]).squaredNorm();
    den += b[l].squaredNorm();
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-12);
}

// 1-input, 1-output layer with fixed weight so gate and update arithmetic is scalar.
GatedModel scalar_model(double w, const UpdateHypers& hyp) {
  Mlp net = zero_mlp({{1, 1}, Activation::logistic});
  net.w[0](0, 0) = w;
  return make_gated_model(std::move(net), GateConfig{}, hyp, 2);
}

Gradients scalar_gradient(double delta, double h) {
  Gradients g;
  g.delta = {Eigen::VectorXd::Constant(1, delta)};
  g.dw = {Eigen::MatrixXd::Constant(1, 1, delta * h)};
  g.db = {Eigen::VectorXd::Constant(1, delta)};
  return g;
}

}  // namespace

TEST(Mlp, ZeroNetworkPredictsOneHalf) {
  const Mlp m = zero_mlp({{5, 7, 3, 1}, Activation::tanh});
  EXPECT_EQ(forward(m, Eigen::VectorXd::Constant(5, 3.0)).y_hat, 0.5);
  Mlp lin = zero_mlp({{1, 1}, Activation::logistic});
  lin.w[0](0, 0) = 1.0;
  EXPECT_EQ(forward(lin, Eigen::VectorXd::Zero(1)).y_hat, 0.5);
}

TEST(Mlp, HandEvaluatedTwoTwoOne) {
  Mlp m = zero_mlp({{2, 2, 1}, Activation::logistic});
  m.w[0] << 1.0, -1.0, 0.5, 2.0;
  m.b[0] << 0.0, -1.0;
  m.w[1] << 1.0, 1.0;
  m.b[1] << 0.5;
  // z1 = (1 - 2, 0.5 + 4 - 1) = (-1, 3.5)
  const double want = sigmoid(sigmoid(-1.0) + sigmoid(3.5) + 0.5);
  EXPECT_NEAR(forward(m, Eigen::Vector2d(1.0, 2.0)).y_hat, want, 1e-15);
}

TEST(Mlp, RejectsBadInput) {
  const Mlp m = zero_mlp({{2, 1}, Activation::logistic});
  EXPECT_THROW(forward(m, Eigen::Vector3d::Zero()), ValidationError);
  EXPECT_THROW(forward(m, Eigen::Vector2d(1.0, std::nan(""))), ValidationError);
  EXPECT_THROW(zero_mlp({{2, 2}, Activation::logistic}), ValidationError);
  EXPECT_THROW(zero_mlp({{2}, Activation::logistic}), ValidationError);
  EXPECT_THROW(parse_activation("softmax"), ValidationError);
}

TEST(Mlp, InitIsSeededAndBounded) {
  const MlpArchitecture arch{{8, 16, 1}, Activation::logistic};
  const Mlp a = init_mlp(arch, 5), b = init_mlp(arch, 5), c = init_mlp(arch, 6);
  EXPECT_EQ(a.w[0], b.w[0]);
  EXPECT_NE(a.w[0], c.w[0]);
  EXPECT_LE(a.w[0].cwiseAbs().maxCoeff(), std::sqrt(6.0 / 24.0));
  EXPECT_EQ(a.b[0].cwiseAbs().sum(), 0.0);
}

TEST(Loss, ExactPredictionIsNearZero) {
  EXPECT_LE(bce_single(1.0, 1.0), 1e-11);
  EXPECT_LE(bce_single(0.0, 0.0), 1e-11);
}

TEST(Loss, CoinFlipIsLnTwo) {
  EXPECT_NEAR(bce_single(0.5, 1.0), std::log(2.0), 1e-15);
  EXPECT_NEAR(bce_single(0.5, 0.0), 0.693147, 1e-6);
}

TEST(Loss, BatchIsMeanAndClampKeepsItFinite) {
  const std::vector<double> yh{0.9, 0.2}, y{1.0, 1.0};
  EXPECT_DOUBLE_EQ(bce_loss(yh, y), 0.5 * (-std::log(0.9) - std::log(0.2)));
  EXPECT_TRUE(std::isfinite(bce_single(0.0, 1.0)));
  EXPECT_NEAR(bce_single(0.0, 1.0), -std::log(kProbClamp), 1e-9);
  EXPECT_THROW(bce_loss(std::vector<double>{}, std::vector<double>{}), ValidationError);
}

TEST(Backprop, ZeroErrorZeroGradients) {
  std::mt19937_64 rng(1);
  const Mlp m = random_net({3, 4, 1}, Activation::logistic, rng);
  const Eigen::Vector3d x(0.2, -1.0, 0.5);
  const auto fp = forward(m, x);
  for (auto mode : {OutputDelta::literal, OutputDelta::simplified}) {
    const auto g = backprop(m, fp, fp.y_hat, mode);
    for (const auto& dw : g.dw) EXPECT_EQ(dw.cwiseAbs().maxCoeff(), 0.0);
    for (const auto& db : g.db) EXPECT_EQ(db.cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(Backprop, SimplifiedDeltaIsCrossEntropyGradient) {
  std::mt19937_64 rng(20);
  std::normal_distribution<double> n(0.0, 1.0);
  for (auto act : {Activation::logistic, Activation::tanh}) {
    for (int trial = 0; trial < 20; ++trial) {
      const Mlp m = random_net({3, 4, 1}, act, rng);
      const Eigen::Vector3d x(n(rng), n(rng), n(rng));
      const double y = trial % 2;
      const auto g = backprop(m, forward(m, x), y, OutputDelta::simplified);
      const auto fd = finite_difference(m, x, [y](double p) { return bce_single(p, y); });
      EXPECT_LE(relative_error(g.dw, fd), 1e-5) << "trial " << trial;
    }
  }
}

TEST(Backprop, LiteralDeltaIsSquaredErrorGradient) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Mlp m = random_net({3, 4, 1}, Activation::logistic, rng);
    const Eigen::Vector3d x(n(rng), n(rng), n(rng));
    const double y = trial % 2;
    const auto g = backprop(m, forward(m, x), y, OutputDelta::literal);
    const auto fd = finite_difference(m, x, [y](double p) { return 0.5 * (p - y) * (p - y); });
    EXPECT_LE(relative_error(g.dw, fd), 1e-5) << "trial " << trial;
  }
}

TEST(Drive, LinearCombination) {
  EXPECT_EQ(total_ca_drive(1, 2, 3, 1, 4, GateCoeffs{0, 0, 0, 0, 0}), 0.0);
  EXPECT_NEAR(total_ca_drive(1.0, 1.0, 1.0, 1.0, 123.0, GateCoeffs{1.2, 0.2, 1.2, 1.0, 0.0}), 3.6, 1e-15);
  const Eigen::Vector2d x(1.0, 3.0), w(0.5, -1.0);
  // x_bar = 2, [Wx] = -2.5
  EXPECT_NEAR(total_ca_drive(x, w, 0.25, -1.0, 2.0, GateCoeffs{1, 1, 1, 1, 1}), 2 - 2.5 + 0.25 - 1 + 2, 1e-15);
}

TEST(Drive, SupervisorSignal) {
  EXPECT_EQ(supervisor_signal(1, true), 1.0);
  EXPECT_EQ(supervisor_signal(0, true), -1.0);
  EXPECT_EQ(supervisor_signal(0, false), 0.0);
  EXPECT_EQ(supervisor_signal(1, false), 0.0);
  EXPECT_THROW(supervisor_signal(2, true), ValidationError);
}

TEST(Threshold, Recurrence) {
  EXPECT_EQ(threshold_update(0.3, 2.0, 1.0), 2.0);
  EXPECT_DOUBLE_EQ(threshold_update(0.0, 1.0, 0.1), 0.1);
  double th = 0.0;
  for (int k = 1; k <= 200; ++k) {
    th = threshold_update(th, 5.0, 0.05);
    EXPECT_NEAR(5.0 - th, 5.0 * std::pow(0.95, k), 1e-12);
  }
}

TEST(Modulator, ValuesAndShape) {
  EXPECT_EQ(modulator(1.3, 1.3, 2.0), 0.0);
  EXPECT_NEAR(modulator(1.5, 1.0, 2.0), (std::exp(1.0) - 1.0) / (std::exp(1.0) + 1.0), 1e-15);
  EXPECT_NEAR(modulator(1.5, 1.0, 2.0), 0.46212, 5e-6);
  EXPECT_NEAR(modulator(1.1, 1.0, 1e4), 1.0, 1e-12);
  double prev = -1.0;
  for (double c = -10.0; c <= 10.0; c += 0.05) {
    const double m = modulator(c, 0.5, 1.0);
    EXPECT_GT(m, -1.0);
    EXPECT_LT(m, 1.0);
    EXPECT_GE(m, prev);
    EXPECT_NEAR(m, -modulator(1.0 - c, 0.5, 1.0), 1e-15);  // odd about theta
    prev = m;
  }
}

TEST(GatedUpdate, ScalarEvaluation) {
  GatedModel m = scalar_model(0.0, {0.1, 0.5, 0.0, 0.0, 0.0});
  m.gate[0](0) = 0.5;
  gated_update(m, scalar_gradient(1.0, 2.0));
  EXPECT_NEAR(m.net.w[0](0, 0), -0.25, 1e-15);
}

TEST(GatedUpdate, ReducesToGradientDescent) {
  std::mt19937_64 rng(3);
  const Mlp net = random_net({3, 4, 1}, Activation::logistic, rng);
  GatedModel m = make_gated_model(net, GateConfig{}, {0.07, 0.0, 0.0, 0.0, 0.0}, 2);
  m.gate[0].setConstant(0.8);
  m.gate[1].setConstant(-0.3);
  const Eigen::Vector3d x(0.4, 0.1, -2.0);
  const auto g = backprop(net, forward(net, x), 1.0, OutputDelta::literal);
  gated_update(m, g);
  for (std::size_t l = 0; l < 2; ++l) {
    EXPECT_EQ(m.net.w[l], (net.w[l] + (-0.07) * g.dw[l]).eval());
    EXPECT_EQ(m.net.b[l], (net.b[l] + (-0.07) * g.db[l]).eval());
  }
}

TEST(GatedUpdate, FullDepressionGateStopsLearning) {
  GatedModel m = scalar_model(0.4, {0.3, 1.0, 0.0, 0.0, 0.0});
  m.gate[0](0) = -1.0;
  gated_update(m, scalar_gradient(2.0, 3.0));
  EXPECT_EQ(m.net.w[0](0, 0), 0.4);
  EXPECT_EQ(m.net.b[0](0), 0.0);
}

TEST(GatedUpdate, WeightDecayContracts) {
  std::mt19937_64 rng(4);
  const Mlp net = random_net({3, 5, 1}, Activation::logistic, rng);
  GatedModel m = make_gated_model(net, GateConfig{}, {0.1, 0.0, 0.02, 0.0, 0.0}, 2);
  Gradients zero;
  for (const auto& w : net.w) {
    zero.dw.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
    zero.db.push_back(Eigen::VectorXd::Zero(w.rows()));
  }
  gated_update(m, zero);
  for (std::size_t l = 0; l < 2; ++l) EXPECT_TRUE(m.net.w[l].isApprox(0.98 * net.w[l], 1e-15));
}

TEST(GatedUpdate, MomentumCarriesPreviousStep) {
  GatedModel m = scalar_model(0.0, {0.1, 0.0, 0.0, 0.0, 0.5});
  gated_update(m, scalar_gradient(1.0, 1.0));  // dw = -0.1
  gated_update(m, scalar_gradient(1.0, 1.0));  // dw = -0.1 + 0.5 * -0.1
  EXPECT_NEAR(m.net.w[0](0, 0), -0.1 - 0.15, 1e-15);
  EXPECT_NEAR(m.prev_update[0](0, 0), -0.15, 1e-15);
}

TEST(GatedUpdate, LaplacianTermMatchesEnergyGradient) {
  std::mt19937_64 rng(5);
  const double xi = 0.3;
  for (int trial = 0; trial < 10; ++trial) {
    const Mlp net = random_net({4, 6, 1}, Activation::logistic, rng);
    GatedModel m = make_gated_model(net, GateConfig{}, {0.0, 0.0, 0.0, xi, 0.0}, 2);
    Gradients zero;
    for (const auto& w : net.w) {
      zero.dw.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
      zero.db.push_back(Eigen::VectorXd::Zero(w.rows()));
    }
    gated_update(m, zero);
    for (std::size_t l = 0; l < 2; ++l) {
      const Eigen::MatrixXd lap = m.laplacian[l];
      auto energy = [&](const Eigen::MatrixXd& w) { return 0.5 * xi * (w.transpose() * lap * w).trace(); };
      Eigen::MatrixXd w = net.w[l];
      for (Eigen::Index i = 0; i < w.rows(); ++i)
        for (Eigen::Index j = 0; j < w.cols(); ++j) {
          const double h = 1e-6, keep = w(i, j);
          w(i, j) = keep + h;
          const double up = energy(w);
          w(i, j) = keep - h;
          const double down = energy(w);
          w(i, j) = keep;
          const double fd = (up - down) / (2 * h);
          EXPECT_NEAR(-(m.net.w[l](i, j) - net.w[l](i, j)), fd, 1e-6);
        }
    }
  }
}

TEST(GatedUpdate, NonFiniteUpdateThrows) {
  GatedModel m = scalar_model(0.0, {0.1, 0.5, 0.0, 0.0, 0.0});
  EXPECT_THROW(gated_update(m, scalar_gradient(std::numeric_limits<double>::infinity(), 1.0)), NumericDivergence);
}

TEST(SynapseLaplacian, SmallCases) {
  Eigen::Matrix2d two;
  two << 1, -1, -1, 1;
  EXPECT_EQ(build_synapse_laplacian(2, 1), two);
  Eigen::Matrix4d ring;
  ring << 2, -1, 0, -1, -1, 2, -1, 0, 0, -1, 2, -1, -1, 0, -1, 2;
  EXPECT_EQ(build_synapse_laplacian(4, 1), ring);
  EXPECT_EQ(build_synapse_laplacian(1, 3), Eigen::MatrixXd::Zero(1, 1));
  // k clamps to n - 1: complete graph
  const auto full = build_synapse_laplacian(4, 10);
  EXPECT_TRUE(full.diagonal().isApprox(Eigen::Vector4d::Constant(3.0)));
  EXPECT_EQ(full.rowwise().sum().cwiseAbs().maxCoeff(), 0.0);
  EXPECT_THROW(build_synapse_laplacian(0, 1), ValidationError);
}

TEST(ComputeGates, ReadsOldThresholdThenAdapts) {
  Mlp net = zero_mlp({{2, 1}, Activation::logistic});
  net.w[0] << 1.0, 0.5;
  GatedModel m = make_gated_model(net, GateConfig{{1.0, 1.0, 1.0, 1.0, 2.0}, 1.0, 0.1}, UpdateHypers{}, 2);
  m.theta[0](0) = 0.25;
  const Eigen::Vector2d x(2.0, 4.0);
  const auto fp = forward(m.net, x);
  compute_gates(m, fp, 1, Eigen::VectorXd::Constant(1, 0.5), true);
  // x_bar 3, [Wx] 4, y_hat, Z = +1, C_hat 0.5 weighted 2
  const double c = 3.0 + 4.0 + fp.y_hat + 1.0 + 1.0;
  EXPECT_NEAR(m.drive[0](0), c, 1e-14);
  EXPECT_NEAR(m.gate[0](0), 2.0 * sigmoid(c - 0.25) - 1.0, 1e-14);
  EXPECT_NEAR(m.theta[0](0), 0.9 * 0.25 + 0.1 * c, 1e-14);
}

TEST(Hypers, Validation) {
  EXPECT_THROW((UpdateHypers{0.1, 1.5, 0, 0, 0}.validate()), ValidationError);
  EXPECT_THROW((UpdateHypers{0.1, 0.5, 0, 0, 1.0}.validate()), ValidationError);
  EXPECT_THROW((GateConfig{{}, 1.0, 0.0}.validate()), ValidationError);
  EXPECT_THROW((GateCoeffs{-1, 0, 0, 0, 0}.validate()), ValidationError);
}
