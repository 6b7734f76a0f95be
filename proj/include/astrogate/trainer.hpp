#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "astrogate/common.hpp"
#include "astrogate/dataset.hpp"
#include "astrogate/mlp.hpp"
#include "astrogate/plasticity.hpp"
#include "astrogate/signal_map.hpp"

namespace astrogate {

struct Metrics {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double fpr = 0.0;

  std::size_t total() const { return tp + fp + tn + fn; }
};

/// Ratios with an empty denominator are reported as 0.
inline Metrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn) {
  Metrics m{tp, fp, tn, fn};
  auto ratio = [](std::size_t a, std::size_t b) { return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b); };
  m.accuracy = ratio(tp + tn, m.total());
  m.precision = ratio(tp, tp + fp);
  m.recall = ratio(tp, tp + fn);
  m.fpr = ratio(fp, fp + tn);
  m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

struct Evaluation {
  Metrics metrics;
  double loss = 0.0;
};

inline Evaluation evaluate(const Mlp& model, const Dataset& data, double threshold = 0.5) {
  if (data.size() == 0) throw ValidationError("evaluate: empty dataset");
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  double loss = 0.0;
  for (std::size_t r = 0; r < data.size(); ++r) {
    const double y_hat = forward(model, data.x.row(static_cast<Eigen::Index>(r)).transpose()).y_hat;
    loss += bce_single(y_hat, data.y[r]);
    const bool pos = predict_positive(y_hat, threshold);
    if (pos) (data.y[r] ? tp : fp)++;
    else (data.y[r] ? fn : tn)++;
  }
  return {metrics_from_counts(tp, fp, tn, fn), loss / static_cast<double>(data.size())};
}

/// Supplies the standardised Ca2+ signal (one value per unit, layer-major) for learning step t.
using SignalSource = std::function<void(std::uint64_t step, int label, Eigen::VectorXd& out)>;

/// Cyclic replay of a cached signal series; missing synapses read as 0.
inline SignalSource replay_source(const SignalSeries& series) {
  return [&series](std::uint64_t step, int, Eigen::VectorXd& out) {
    const auto row = series.at_learning_step(step);
    out.setZero();
    const auto n = std::min<std::size_t>(row.size(), static_cast<std::size_t>(out.size()));
    for (std::size_t i = 0; i < n; ++i) out(static_cast<Eigen::Index>(i)) = row[i];
  };
}

enum class TrainMode { gated, baseline };

inline const char* mode_name(TrainMode m) { return m == TrainMode::gated ? "gated" : "baseline"; }

struct TrainConfig {
  MlpArchitecture arch;
  GateConfig gate;
  UpdateHypers hypers;
  std::size_t k_neighbors = 2;
  OutputDelta output_delta = OutputDelta::literal;
  std::size_t epochs = 100;
  std::uint64_t init_seed = 1;
  std::uint64_t shuffle_seed = 2;
  double threshold = 0.5;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;  // mean online training loss over the epoch
  Metrics metrics;    // on the monitoring set at epoch end
};

struct TrainResult {
  GatedModel model;
  std::vector<EpochRecord> history;
  std::vector<std::vector<Eigen::MatrixXd>> weight_trace;  // per epoch, if requested
};

/// Online training. Baseline mode runs the same loop with lambda_m = xi = 0 and frozen thresholds.
/// Per-epoch metrics are taken on `monitor` (the training set when null).
inline TrainResult train(const Dataset& data, const TrainConfig& cfg, TrainMode mode, const SignalSource& signals,
                         const Dataset* monitor = nullptr, bool trace_weights = false) {
  if (data.size() == 0) throw ValidationError("train: empty dataset");
  cfg.arch.validate();
  if (cfg.arch.widths.front() != data.dims())
    throw ValidationError("train: dataset has " + std::to_string(data.dims()) + " features, architecture expects " +
                          std::to_string(cfg.arch.widths.front()));
  UpdateHypers hyp = cfg.hypers;
  if (mode == TrainMode::baseline) {
    hyp.lambda_m = 0.0;
    hyp.xi = 0.0;
  }
  TrainResult res;
  res.model = make_gated_model(init_mlp(cfg.arch, cfg.init_seed), cfg.gate, hyp, cfg.k_neighbors);
  GatedModel& m = res.model;
  const bool gated = mode == TrainMode::gated;
  if (gated && !signals) throw ValidationError("train: gated mode needs a Ca2+ signal source");

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(cfg.shuffle_seed);
  Eigen::VectorXd c_hat = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cfg.arch.n_units()));
  std::uint64_t step = 0;
  const Dataset& mon = monitor ? *monitor : data;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss = 0.0;
    for (std::size_t r : order) {
      const int y = data.y[r];
      const ForwardPass fp = forward(m.net, data.x.row(static_cast<Eigen::Index>(r)).transpose());
      loss += bce_single(fp.y_hat, y);
      const Gradients g = backprop(m.net, fp, y, cfg.output_delta);
      if (gated) {
        signals(step, y, c_hat);
        compute_gates(m, fp, y, c_hat, true);
      }
      gated_update(m, g);
      ++step;
    }
    res.history.push_back({epoch, loss / static_cast<double>(data.size()), evaluate(m.net, mon, cfg.threshold).metrics});
    if (trace_weights) res.weight_trace.push_back(m.net.w);
  }
  return res;
}

inline void write_metrics_csv(const std::vector<EpochRecord>& history, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "epoch,loss,accuracy,tp,fp,tn,fn\n";
  for (const auto& r : history)
    out << r.epoch << ',' << format_double(r.loss) << ',' << format_double(r.metrics.accuracy) << ',' << r.metrics.tp
        << ',' << r.metrics.fp << ',' << r.metrics.tn << ',' << r.metrics.fn << '\n';
}

}  // namespace astrogate
