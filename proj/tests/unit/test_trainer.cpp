#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "astrogate/checkpoint.hpp"
#include "astrogate/dataset.hpp"
#include "astrogate/trainer.hpp"

using namespace astrogate;

namespace {

SignalSource wobble() {
  return [](std::uint64_t t, int, Eigen::VectorXd& out) {
    for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = std::sin(0.37 * static_cast<double>(t) + static_cast<double>(i));
  };
}

Dataset tiny(const std::vector<double>& xs, const std::vector<int>& ys) {
  Dataset d;
  d.x = Eigen::Map<const Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
  d.y = ys;
  d.feature_names = {"f0"};
  return d;
}

}  // namespace

TEST(Metrics, ReferenceConfusionCounts) {
  const auto m = metrics_from_counts(1924, 1072, 6581, 423);
  EXPECT_EQ(m.total(), 10000u);
  EXPECT_EQ(m.accuracy, 0.8505);
  EXPECT_DOUBLE_EQ(m.fpr, 1072.0 / 7653.0);
  EXPECT_NEAR(m.fpr, 0.140, 5e-4);
  EXPECT_DOUBLE_EQ(m.precision, 1924.0 / 2996.0);
  EXPECT_DOUBLE_EQ(m.recall, 1924.0 / 2347.0);
}

TEST(Metrics, EmptyDenominatorsReadZero) {
  const auto m = metrics_from_counts(0, 0, 5, 0);
  EXPECT_EQ(m.accuracy, 1.0);
  EXPECT_EQ(m.precision, 0.0);
  EXPECT_EQ(m.recall, 0.0);
  EXPECT_EQ(m.f1, 0.0);
}

TEST(Evaluate, PerfectAndConstantPredictors) {
  const Dataset d = tiny({-2.0, -1.0, 1.0, 3.0, 0.5}, {0, 0, 1, 1, 1});
  Mlp sharp = zero_mlp({{1, 1}, Activation::logistic});
  sharp.w[0](0, 0) = 100.0;
  const auto p = evaluate(sharp, d).metrics;
  EXPECT_EQ(p.accuracy, 1.0);
  EXPECT_EQ(p.fp, 0u);
  EXPECT_EQ(p.fn, 0u);
  Mlp flat = zero_mlp({{1, 1}, Activation::logistic});
  flat.b[0](0) = -1e-3;  // y_hat just under 0.5 everywhere
  const auto c = evaluate(flat, d).metrics;
  EXPECT_EQ(c.tp + c.fp, 0u);
  EXPECT_EQ(c.tn, 2u);
  EXPECT_EQ(c.fn, 3u);
  EXPECT_THROW(evaluate(flat, Dataset{}), ValidationError);
}

TEST(Evaluate, ConfusionSumsToDatasetSize) {
  const auto d = synthesize(777, 3, 1.0, 8);
  const Mlp m = init_mlp({{3, 4, 1}, Activation::logistic}, 2);
  const auto e = evaluate(m, d);
  EXPECT_EQ(e.metrics.total(), 777u);
  EXPECT_EQ(e.metrics.tp + e.metrics.fn, d.positives());
}

TEST(Train, GateOffMatchesBaselineBitForBit) {
  const auto all = synthesize(1000, 4, 3.0, 17);
  TrainConfig cfg;
  cfg.arch = {{4, 6, 1}, Activation::logistic};
  cfg.epochs = 3;
  cfg.hypers = {0.05, 0.0, 0.0, 0.0, 0.0};
  const auto g = train(all, cfg, TrainMode::gated, wobble(), nullptr, true);
  const auto b = train(all, cfg, TrainMode::baseline, {}, nullptr, true);
  ASSERT_EQ(g.weight_trace.size(), 3u);
  for (std::size_t e = 0; e < 3; ++e)
    for (std::size_t l = 0; l < 2; ++l) EXPECT_EQ(g.weight_trace[e][l], b.weight_trace[e][l]);
}

TEST(Train, ZeroCalciumWeightAndNoModulationMatchesBaseline) {
  // baseline also drops the Laplacian term, so xi must be off on the gated side too
  const auto all = synthesize(400, 3, 3.0, 18);
  TrainConfig cfg;
  cfg.arch = {{3, 5, 1}, Activation::logistic};
  cfg.epochs = 2;
  cfg.gate.coeffs.eps_ca = 0.0;
  cfg.hypers.lambda_m = 0.0;
  cfg.hypers.xi = 0.0;
  const auto g = train(all, cfg, TrainMode::gated, wobble());
  const auto b = train(all, cfg, TrainMode::baseline, {});
  for (std::size_t l = 0; l < 2; ++l) EXPECT_EQ(g.model.net.w[l], b.model.net.w[l]);
}

TEST(Train, SeparableDataLearnedInBothModes) {
  const auto all = synthesize(2000, 2, 6.0, 23);
  SplitSpec sp;
  sp.n_train = 1000;
  sp.n_test = 1000;
  const auto split = split_dataset(all, sp, Normalization::zscore, 4);
  TrainConfig cfg;
  cfg.arch = {{2, 4, 1}, Activation::logistic};
  cfg.epochs = 100;
  for (auto mode : {TrainMode::gated, TrainMode::baseline}) {
    const auto r = train(split.train, cfg, mode, wobble(), &split.test);
    EXPECT_GE(evaluate(r.model.net, split.test).metrics.accuracy, 0.95) << mode_name(mode);
    EXPECT_EQ(r.history.size(), 100u);
    EXPECT_TRUE(std::isfinite(r.history.back().loss));
  }
}

TEST(Train, DeterministicForFixedSeeds) {
  const auto all = synthesize(300, 3, 2.0, 5);
  TrainConfig cfg;
  cfg.arch = {{3, 4, 1}, Activation::logistic};
  cfg.epochs = 4;
  const auto a = train(all, cfg, TrainMode::gated, wobble());
  const auto b = train(all, cfg, TrainMode::gated, wobble());
  EXPECT_EQ(a.model.net.w[0], b.model.net.w[0]);
  EXPECT_EQ(a.model.theta[1], b.model.theta[1]);
  cfg.shuffle_seed = 99;
  const auto c = train(all, cfg, TrainMode::gated, wobble());
  EXPECT_NE(a.model.net.w[0], c.model.net.w[0]);
}

TEST(Train, InputErrors) {
  const auto all = synthesize(50, 3, 2.0, 5);
  TrainConfig cfg;
  cfg.arch = {{4, 1}, Activation::logistic};
  EXPECT_THROW(train(all, cfg, TrainMode::baseline, {}), ValidationError);
  cfg.arch = {{3, 1}, Activation::logistic};
  EXPECT_THROW(train(all, cfg, TrainMode::gated, {}), ValidationError);
  EXPECT_THROW(train(Dataset{}, cfg, TrainMode::baseline, {}), ValidationError);
}

TEST(Train, ReplaySourceCyclesAndZeroFills) {
  SignalSeries s;
  s.n_synapses = 2;
  s.values = {1, 2, 3, 4, 5, 6};
  const auto src = replay_source(s);
  Eigen::VectorXd out = Eigen::VectorXd::Constant(3, 9.0);
  src(4, 0, out);  // row 1
  EXPECT_EQ(out, Eigen::Vector3d(3, 4, 0));
}

TEST(Checkpoint, RoundTrip) {
  const auto all = synthesize(200, 3, 2.0, 5);
  TrainConfig cfg;
  cfg.arch = {{3, 4, 1}, Activation::tanh};
  cfg.epochs = 2;
  const auto r = train(all, cfg, TrainMode::gated, wobble());
  const auto path = (std::filesystem::temp_directory_path() / "astrogate_ckpt_test.json").string();
  save_checkpoint(checkpoint_json(r.model, "gated", cfg.output_delta, cfg.k_neighbors), path);
  const auto back = load_checkpoint(path);
  EXPECT_EQ(back.net.arch.widths, cfg.arch.widths);
  EXPECT_EQ(back.net.arch.hidden, Activation::tanh);
  for (std::size_t l = 0; l < 2; ++l) {
    EXPECT_EQ(back.net.w[l], r.model.net.w[l]);
    EXPECT_EQ(back.net.b[l], r.model.net.b[l]);
    EXPECT_EQ(back.theta[l], r.model.theta[l]);
    EXPECT_EQ(back.prev_update[l], r.model.prev_update[l]);
  }
  EXPECT_EQ(evaluate(back.net, all).metrics.accuracy, evaluate(r.model.net, all).metrics.accuracy);
  std::filesystem::remove(path);
}
