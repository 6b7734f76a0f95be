#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "astrogate/common.hpp"

namespace astrogate {

/// Samples as rows of `x`; labels in {0,1}.
struct Dataset {
  Eigen::MatrixXd x;
  std::vector<int> y;
  std::vector<std::string> feature_names;

  std::size_t size() const { return y.size(); }
  std::size_t dims() const { return static_cast<std::size_t>(x.cols()); }
  std::size_t positives() const { return static_cast<std::size_t>(std::count(y.begin(), y.end(), 1)); }

  std::uint64_t digest() const {
    auto h = fnv1a_doubles(x.data(), static_cast<std::size_t>(x.size()));
    for (int v : y) h = fnv1a(v ? "1" : "0", h);
    return h;
  }
};

inline Dataset take_rows(const Dataset& d, const std::vector<std::size_t>& rows) {
  Dataset out;
  out.feature_names = d.feature_names;
  out.x.resize(static_cast<Eigen::Index>(rows.size()), d.x.cols());
  out.y.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.x.row(static_cast<Eigen::Index>(r)) = d.x.row(static_cast<Eigen::Index>(rows[r]));
    out.y.push_back(d.y[rows[r]]);
  }
  return out;
}

enum class Normalization { zscore, minmax, none };

inline Normalization parse_normalization(const std::string& s) {
  if (s == "zscore") return Normalization::zscore;
  if (s == "minmax") return Normalization::minmax;
  if (s == "none") return Normalization::none;
  throw ValidationError("unknown normalization '" + s + "' (zscore, minmax, none)");
}

/// Per-feature affine map x' = (x - shift) / scale, fitted on the training split.
struct NormalizationStats {
  Normalization kind = Normalization::zscore;
  Eigen::VectorXd shift;
  Eigen::VectorXd scale;
};

inline NormalizationStats fit_normalization(const Dataset& train, Normalization kind) {
  const auto d = train.x.cols();
  NormalizationStats st{kind, Eigen::VectorXd::Zero(d), Eigen::VectorXd::Ones(d)};
  if (kind == Normalization::none || train.size() == 0) return st;
  for (Eigen::Index j = 0; j < d; ++j) {
    const auto col = train.x.col(j);
    if (kind == Normalization::zscore) {
      const double mean = col.mean();
      const double var = (col.array() - mean).square().mean();
      st.shift(j) = mean;
      st.scale(j) = var > 0.0 ? std::sqrt(var) : 1.0;
    } else {
      const double lo = col.minCoeff();
      const double range = col.maxCoeff() - lo;
      st.shift(j) = lo;
      st.scale(j) = range > 0.0 ? range : 1.0;
    }
  }
  return st;
}

inline void apply_normalization(Dataset& d, const NormalizationStats& st) {
  if (st.kind == Normalization::none) return;
  for (Eigen::Index j = 0; j < d.x.cols(); ++j) d.x.col(j) = (d.x.col(j).array() - st.shift(j)) / st.scale(j);
}

struct SplitSpec {
  std::optional<std::size_t> n_train;
  std::optional<std::size_t> n_test;
  std::optional<double> ratio;  // train fraction; used when counts are unset
  bool stratify = false;

  void validate() const {
    if (ratio && !(*ratio > 0.0 && *ratio < 1.0)) throw ValidationError("dataset.ratio must be in (0, 1)");
    if (!ratio && (!n_train || !n_test)) throw ValidationError("dataset: set both n_train and n_test, or ratio");
    if (n_train && *n_train == 0) throw ValidationError("dataset.n_train must be >= 1");
    if (n_test && *n_test == 0) throw ValidationError("dataset.n_test must be >= 1");
  }
};

struct SplitResult {
  Dataset train;
  Dataset test;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
  NormalizationStats stats;
};

inline std::uint64_t rows_digest(const std::vector<std::size_t>& rows) {
  std::vector<double> v(rows.begin(), rows.end());
  return fnv1a_doubles(v.data(), v.size());
}

/// Seeded shuffle, then split by counts or ratio; optionally stratified by label.
/// Normalisation is fitted on the training rows only and applied to both splits.
inline SplitResult split_dataset(const Dataset& all, const SplitSpec& spec, Normalization norm, std::uint64_t seed) {
  spec.validate();
  const std::size_t n = all.size();
  std::size_t n_train = 0, n_test = 0;
  if (spec.n_train && spec.n_test) {
    n_train = *spec.n_train;
    n_test = *spec.n_test;
    if (n_train + n_test > n)
      throw ValidationError("dataset has " + std::to_string(n) + " rows, split asks for " +
                            std::to_string(n_train + n_test));
  } else {
    n_train = static_cast<std::size_t>(std::llround(*spec.ratio * static_cast<double>(n)));
    n_test = n - n_train;
  }
  if (n_train == 0 || n_test == 0) throw ValidationError("dataset split leaves an empty train or test set");

  std::mt19937_64 rng(seed);
  SplitResult out;
  if (!spec.stratify) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    out.train_rows.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.test_rows.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                         order.begin() + static_cast<std::ptrdiff_t>(n_train + n_test));
  } else {
    std::vector<std::size_t> cls[2];
    for (std::size_t r = 0; r < n; ++r) cls[all.y[r]].push_back(r);
    for (auto& c : cls) std::shuffle(c.begin(), c.end(), rng);
    const double frac_pos = static_cast<double>(cls[1].size()) / static_cast<double>(n);
    const auto pos_train = std::min(cls[1].size(), static_cast<std::size_t>(std::llround(frac_pos * n_train)));
    const auto pos_test =
        std::min(cls[1].size() - pos_train, static_cast<std::size_t>(std::llround(frac_pos * n_test)));
    const auto neg_train = n_train - pos_train;
    const auto neg_test = n_test - pos_test;
    if (neg_train + neg_test > cls[0].size()) throw ValidationError("stratified split: not enough negative rows");
    auto take = [](std::vector<std::size_t>& dst, const std::vector<std::size_t>& src, std::size_t from, std::size_t k) {
      dst.insert(dst.end(), src.begin() + static_cast<std::ptrdiff_t>(from),
                 src.begin() + static_cast<std::ptrdiff_t>(from + k));
    };
    take(out.train_rows, cls[1], 0, pos_train);
    take(out.train_rows, cls[0], 0, neg_train);
    take(out.test_rows, cls[1], pos_train, pos_test);
    take(out.test_rows, cls[0], neg_train, neg_test);
    std::shuffle(out.train_rows.begin(), out.train_rows.end(), rng);
    std::shuffle(out.test_rows.begin(), out.test_rows.end(), rng);
  }
  out.train = take_rows(all, out.train_rows);
  out.test = take_rows(all, out.test_rows);
  out.stats = fit_normalization(out.train, norm);
  apply_normalization(out.train, out.stats);
  apply_normalization(out.test, out.stats);
  return out;
}

/// Two unit-variance Gaussian clusters at +-(class_sep / 2) u for a random unit vector u.
inline Dataset synthesize(std::size_t n, std::size_t d, double class_sep, std::uint64_t seed, double label_noise = 0.0) {
  if (n < 2) throw ValidationError("synthesize: n must be >= 2");
  if (d < 1) throw ValidationError("synthesize: d must be >= 1");
  if (!(label_noise >= 0.0 && label_noise <= 1.0)) throw ValidationError("synthesize: label_noise must be in [0, 1]");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::VectorXd u(static_cast<Eigen::Index>(d));
  do {
    for (Eigen::Index j = 0; j < u.size(); ++j) u(j) = normal(rng);
  } while (u.norm() == 0.0);
  u.normalize();
  Dataset out;
  out.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  out.y.resize(n);
  for (std::size_t k = 0; k < d; ++k) out.feature_names.push_back("f" + std::to_string(k));
  for (std::size_t r = 0; r < n; ++r) {
    const int label = coin(rng) ? 1 : 0;
    const double side = label ? 0.5 * class_sep : -0.5 * class_sep;
    for (Eigen::Index j = 0; j < u.size(); ++j) out.x(static_cast<Eigen::Index>(r), j) = side * u(j) + normal(rng);
    const bool flip = label_noise > 0.0 && unif(rng) < label_noise;
    out.y[r] = flip ? 1 - label : label;
  }
  return out;
}

struct CsvSpec {
  std::string path;
  std::vector<std::string> feature_columns{"Dur", "Proto", "TotPkts", "TotBytes", "SrcBytes"};
  std::vector<std::string> categorical_columns{"Proto"};
  std::string label_column = "Label";
  std::vector<std::string> positive_markers{"Botnet"};
  char delimiter = ',';
};

struct CsvLoadReport {
  std::size_t rows_read = 0;
  std::size_t rows_rejected = 0;  // empty label field
};

/// Integer code for a categorical value: FNV-1a 64 reduced mod 2^31 so it stays exact as a double.
inline double categorical_code(std::string_view value) {
  return static_cast<double>(fnv1a(value) % (std::uint64_t{1} << 31));
}

inline std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, delim)) out.push_back(field);
  if (!line.empty() && line.back() == delim) out.emplace_back();
  for (auto& f : out)
    if (!f.empty() && f.back() == '\r') f.pop_back();
  return out;
}

/// Headered CSV -> raw (unnormalised) dataset. Label = 1 iff the label field contains a marker.
inline Dataset load_csv(const CsvSpec& spec, CsvLoadReport* report = nullptr) {
  std::ifstream in(spec.path);
  if (!in) throw ValidationError("cannot open dataset " + spec.path);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(spec.path + ": empty file");
  const auto header = split_line(line, spec.delimiter);
  auto find = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ValidationError(spec.path + ": missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  std::vector<std::size_t> cols;
  std::vector<bool> categorical;
  for (const auto& name : spec.feature_columns) {
    cols.push_back(find(name));
    categorical.push_back(std::find(spec.categorical_columns.begin(), spec.categorical_columns.end(), name) !=
                          spec.categorical_columns.end());
  }
  const std::size_t label_col = find(spec.label_column);

  std::vector<double> values;
  Dataset out;
  out.feature_names = spec.feature_columns;
  CsvLoadReport rep;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    ++rep.rows_read;
    const auto fields = split_line(line, spec.delimiter);
    if (fields.size() < header.size())
      throw ValidationError(spec.path + ":" + std::to_string(lineno) + ": expected " + std::to_string(header.size()) +
                            " fields, found " + std::to_string(fields.size()));
    const std::string& label = fields[label_col];
    if (label.empty()) {
      ++rep.rows_rejected;
      continue;
    }
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const std::string& f = fields[cols[k]];
      double v = 0.0;
      if (categorical[k]) {
        v = categorical_code(f);
      } else if (f.empty()) {
        v = 0.0;
      } else if (!parse_double(f, v) || !std::isfinite(v)) {
        throw ValidationError(spec.path + ":" + std::to_string(lineno) + ": column '" + spec.feature_columns[k] +
                              "' is not numeric: '" + f + "'");
      }
      values.push_back(v);
    }
    int y = 0;
    for (const auto& m : spec.positive_markers)
      if (label.find(m) != std::string::npos) y = 1;
    out.y.push_back(y);
  }
  const auto d = static_cast<Eigen::Index>(cols.size());
  out.x = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), static_cast<Eigen::Index>(out.y.size()), d);
  if (report) *report = rep;
  if (out.size() == 0) throw ValidationError(spec.path + ": no labelled rows");
  return out;
}

/// Normalised cache: header `label,<features...>`.
inline void write_dataset_csv(const Dataset& d, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "label";
  for (const auto& f : d.feature_names) out << ',' << f;
  out << '\n';
  for (std::size_t r = 0; r < d.size(); ++r) {
    out << d.y[r];
    for (Eigen::Index j = 0; j < d.x.cols(); ++j) out << ',' << format_double(d.x(static_cast<Eigen::Index>(r), j));
    out << '\n';
  }
}

}  // namespace astrogate
