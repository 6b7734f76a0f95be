#pragma once

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "astrogate/common.hpp"
#include "astrogate/dataset.hpp"
#include "astrogate/mlp.hpp"
#include "astrogate/mutual_information.hpp"
#include "astrogate/plasticity.hpp"
#include "astrogate/signal_map.hpp"
#include "astrogate/simulator.hpp"
#include "astrogate/sweep.hpp"

extern char** environ;

namespace astrogate::cli {

using json = nlohmann::ordered_json;

/// Every accepted key with its default. A null default means "unset"; its accepted type is in
/// nullable_types().
inline json default_config() {
  const SimParams p;
  const GateConfig g;
  const UpdateHypers h;
  const CsvSpec csv;
  return json{
      {"run",
       {{"seed", 42}, {"output_dir", "out"}, {"input_dir", nullptr}, {"jobs", 1}, {"run_index", 12},
        {"t_sim_ms", nullptr}, {"n_seeds", 10}, {"long_tx", false}}},
      {"lattice", {{"dims", {3, 3, 6}}, {"spacing_um", 1.0}}},
      {"sim",
       {{"v_ip3", p.v_ip3}, {"v_serca", p.v_serca}, {"v_plc", p.v_plc}, {"k1", p.k1}, {"k2", p.k2},
        {"k_i", p.k_i}, {"k_p", p.k_p}, {"hill_n", p.hill_n}, {"hill_m", p.hill_m}, {"hill_p", p.hill_p},
        {"kappa_o", p.kappa_o}, {"kappa_f", p.kappa_f}, {"kappa_d", p.kappa_d}, {"kappa_D", p.kappa_D},
        {"noise_sigma", p.noise_sigma}, {"dt", p.dt}, {"g_max", p.g_max}, {"rho_half", p.rho_half},
        {"a0", p.a0}, {"a1", p.a1}, {"a2", p.a2}, {"conductance_mode", "expected"}, {"sample_stride", 10}}},
      {"initial", {{"c0", 0.1}, {"er0", 2.0}, {"ip3_0", 0.1}}},
      {"schedule",
       {{"tx_cell", nullptr}, {"onset_ms", 10.0}, {"pulse_ms", 20.0}, {"gap_ms", 60.0}, {"delta_c_step", 2.0},
        {"injection_gain", 0.15}, {"injection_conc", nullptr}, {"amplification", nullptr}}},
      {"cache", {{"format", "binary"}}},
      {"signals",
       {{"tau_s", 5.0}, {"tau_rho_factor", 10.0}, {"epsilon", 1e-6}, {"map", "round_robin"}, {"fan_out", 2},
        {"n_synapses", nullptr}, {"trajectory", 0}}},
      {"model", {{"hidden_widths", {16}}, {"hidden_activation", "logistic"}, {"output_delta", "literal"}}},
      {"gate",
       {{"alpha", g.coeffs.alpha}, {"beta", g.coeffs.beta}, {"gamma", g.coeffs.gamma}, {"delta", g.coeffs.delta},
        {"eps_ca", g.coeffs.eps_ca}, {"k_steep", g.k_steep}, {"eta_theta", g.eta_theta}}},
      {"train",
       {{"mode", "both"}, {"epochs", 100}, {"eta", h.eta}, {"lambda_m", h.lambda_m}, {"lambda_w", h.lambda_w},
        {"xi", h.xi}, {"momentum", h.mu}, {"k_neighbors", 2}, {"threshold", 0.5}}},
      {"dataset",
       {{"source", "synthetic"}, {"path", nullptr}, {"feature_columns", csv.feature_columns},
        {"categorical_columns", csv.categorical_columns}, {"label_column", csv.label_column},
        {"positive_markers", csv.positive_markers}, {"delimiter", ","}, {"normalization", "zscore"},
        {"n_train", 8000}, {"n_test", 8000}, {"ratio", nullptr}, {"stratify", false}, {"synth_n", 16000},
        {"synth_d", 8}, {"class_sep", 6.0}, {"label_noise", 0.0}}},
      {"mi",
       {{"h_ms", 1.0}, {"tau_rx", 2.0}, {"delta_max", 50}, {"receiver", 9}, {"tau_rx_sweep", nullptr}}},
      {"sweep",
       {{"alpha", {0.0, 1.2}}, {"beta", {0.0, 0.2}}, {"gamma", {0.0, 1.2}}, {"delta", {0.0, 1.0}},
        {"eps_ca", {1.0}}, {"epochs", nullptr}, {"signal", "cache"}, {"label_scale", 5.0}}},
  };
}

inline const std::map<std::string, json::value_t>& nullable_types() {
  static const std::map<std::string, json::value_t> t{
      {"run.input_dir", json::value_t::string},        {"run.run_index", json::value_t::number_integer},
      {"run.t_sim_ms", json::value_t::number_float},   {"schedule.tx_cell", json::value_t::number_integer},
      {"schedule.injection_conc", json::value_t::number_float},
      {"schedule.amplification", json::value_t::number_float},
      {"signals.n_synapses", json::value_t::number_integer},
      {"dataset.path", json::value_t::string},         {"dataset.ratio", json::value_t::number_float},
      {"mi.tau_rx_sweep", json::value_t::array},       {"sweep.epochs", json::value_t::number_integer},
      {"dataset.n_train", json::value_t::number_integer}, {"dataset.n_test", json::value_t::number_integer},
  };
  return t;
}

class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

inline bool is_number(json::value_t t) {
  return t == json::value_t::number_integer || t == json::value_t::number_unsigned ||
         t == json::value_t::number_float;
}

inline const char* type_name(json::value_t t) {
  if (is_number(t)) return "number";
  switch (t) {
    case json::value_t::string: return "string";
    case json::value_t::boolean: return "boolean";
    case json::value_t::array: return "array";
    case json::value_t::object: return "object";
    default: return "null";
  }
}

/// Type-checked assignment of `value` at `path` (dotted) into `doc`.
inline void set_value(json& doc, const std::string& path, const json& value) {
  const auto dot = path.find('.');
  if (dot == std::string::npos || path.find('.', dot + 1) != std::string::npos)
    throw ConfigError("config key '" + path + "' must have the form section.key");
  const std::string section = path.substr(0, dot);
  const std::string key = path.substr(dot + 1);
  if (!doc.contains(section)) throw ConfigError("unknown config section '" + section + "'");
  auto& sec = doc[section];
  if (!sec.contains(key)) throw ConfigError("unknown config key '" + path + "'");
  static const json defaults = default_config();
  const json& current = defaults.at(section).at(key);
  json::value_t want = current.type();
  const auto nt = nullable_types().find(path);
  const bool nullable = nt != nullable_types().end();
  if (nullable) want = nt->second;
  if (value.is_null()) {
    if (!nullable) throw ConfigError("config key '" + path + "' cannot be null");
    sec[key] = value;
    return;
  }
  const bool ok = is_number(want) ? value.is_number() : value.type() == want;
  if (!ok)
    throw ConfigError("config key '" + path + "' expects " + type_name(want) + ", got " + type_name(value.type()));
  sec[key] = value;
}

inline void merge_document(json& doc, const json& src, const std::string& origin) {
  if (!src.is_object()) throw ConfigError(origin + ": top level must be an object");
  for (const auto& [section, body] : src.items()) {
    if (!doc.contains(section)) throw ConfigError(origin + ": unknown config section '" + section + "'");
    if (!body.is_object()) throw ConfigError(origin + ": section '" + section + "' must be an object");
    for (const auto& [key, value] : body.items()) set_value(doc, section + "." + key, value);
  }
}

/// `text` as JSON when it parses, otherwise as a plain string.
inline json parse_scalar(const std::string& text) {
  json v = json::parse(text, nullptr, false);
  if (v.is_discarded()) return json(text);
  return v;
}

/// ASTROGATE_SECTION__KEY=value, matched case-insensitively against known keys.
inline std::vector<std::pair<std::string, std::string>> env_overrides(const json& doc) {
  std::vector<std::pair<std::string, std::string>> out;
  auto lower = [](std::string s) {
    for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    return s;
  };
  for (char** e = environ; e && *e; ++e) {
    const std::string entry = *e;
    if (entry.rfind("ASTROGATE_", 0) != 0) continue;
    const auto eq = entry.find('=');
    const std::string name = lower(entry.substr(10, eq - 10));
    const std::string value = eq == std::string::npos ? "" : entry.substr(eq + 1);
    const auto sep = name.find("__");
    if (sep == std::string::npos) throw ConfigError("environment variable " + entry.substr(0, eq) +
                                                    " must look like ASTROGATE_SECTION__KEY");
    const std::string section = name.substr(0, sep);
    const std::string key = name.substr(sep + 2);
    std::string path;
    for (const auto& [s, body] : doc.items())
      if (lower(s) == section)
        for (const auto& [k, v] : body.items())
          if (lower(k) == key) path = s + "." + k;
    if (path.empty()) throw ConfigError("environment variable " + entry.substr(0, eq) + " names no config key");
    out.emplace_back(path, value);
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct ConfigSources {
  std::optional<std::string> file;
  std::vector<std::string> set_overrides;           // key=value
  std::vector<std::pair<std::string, json>> flags;  // from dedicated CLI flags
  bool use_env = true;
};

/// defaults < file < environment < --set < dedicated flags.
inline json resolve_config(const ConfigSources& src) {
  json doc = default_config();
  if (src.file) {
    std::ifstream in(*src.file);
    if (!in) throw ConfigError("cannot open config file " + *src.file);
    json file = json::parse(in, nullptr, false);
    if (file.is_discarded()) throw ConfigError(*src.file + ": not valid JSON");
    // A run manifest carries its full config under "config".
    if (file.contains("config") && file.contains("command")) file = file["config"];
    merge_document(doc, file, *src.file);
  }
  if (src.use_env)
    for (const auto& [path, value] : env_overrides(doc)) set_value(doc, path, parse_scalar(value));
  for (const auto& kv : src.set_overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    set_value(doc, kv.substr(0, eq), parse_scalar(kv.substr(eq + 1)));
  }
  for (const auto& [path, value] : src.flags) set_value(doc, path, value);
  return doc;
}

/// Typed view of a resolved config; construction performs all validation.
struct Settings {
  json doc;

  std::uint64_t seed = 0;
  std::string output_dir;
  std::string input_dir;
  std::size_t jobs = 1;
  std::optional<int> run_index;
  double t_sim = 0.0;
  std::size_t n_seeds = 1;

  std::array<std::size_t, 3> dims{};
  double spacing = 1.0;
  SimParams sim;
  std::size_t sample_stride = 1;
  InitialConditions initial;
  TransmitterSchedule schedule;
  std::string cache_format;

  SignalConfig signal_cfg;
  bool random_map = false;
  std::size_t fan_out = 2;
  std::optional<std::size_t> n_synapses;
  std::size_t signal_trajectory = 0;

  std::vector<std::size_t> hidden_widths;
  Activation hidden_activation = Activation::logistic;
  OutputDelta output_delta = OutputDelta::literal;
  GateConfig gate;
  UpdateHypers hypers;
  std::size_t k_neighbors = 2;
  std::size_t epochs = 100;
  std::string train_mode;
  double threshold = 0.5;

  bool synthetic = true;
  CsvSpec csv;
  Normalization normalization = Normalization::zscore;
  SplitSpec split;
  std::size_t synth_n = 0, synth_d = 0;
  double class_sep = 0.0, label_noise = 0.0;

  MiAnalysisConfig mi;
  std::size_t receiver = 9;
  std::vector<double> tau_rx_values;

  SweepGrid grid;
  std::size_t sweep_epochs = 100;
  std::string sweep_signal;
  double label_scale = 5.0;

  AstrocyteGraph graph() const { return build_lattice(dims, spacing); }

  std::vector<std::size_t> widths(std::size_t d) const {
    std::vector<std::size_t> w{d};
    w.insert(w.end(), hidden_widths.begin(), hidden_widths.end());
    w.push_back(1);
    return w;
  }
  std::size_t total_units() const {
    std::size_t n = 1;
    for (auto v : hidden_widths) n += v;
    return n;
  }
};

namespace detail {

inline const json& at(const json& doc, const char* section, const char* key) { return doc.at(section).at(key); }

inline double num(const json& doc, const char* section, const char* key) {
  return at(doc, section, key).get<double>();
}

inline std::size_t count(const json& doc, const char* section, const char* key, std::size_t min_value = 0) {
  const json& v = at(doc, section, key);
  const double d = v.get<double>();
  if (d != std::floor(d) || d < static_cast<double>(min_value))
    throw ConfigError(std::string(section) + "." + key + " must be an integer >= " + std::to_string(min_value));
  return static_cast<std::size_t>(d);
}

inline std::string str(const json& doc, const char* section, const char* key) {
  return at(doc, section, key).get<std::string>();
}

inline std::vector<double> numbers(const json& doc, const char* section, const char* key) {
  std::vector<double> out;
  for (const auto& v : at(doc, section, key)) {
    if (!v.is_number()) throw ConfigError(std::string(section) + "." + key + " must be an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

inline std::vector<std::string> strings(const json& doc, const char* section, const char* key) {
  std::vector<std::string> out;
  for (const auto& v : at(doc, section, key)) {
    if (!v.is_string()) throw ConfigError(std::string(section) + "." + key + " must be an array of strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

}  // namespace detail

inline Settings make_settings(const json& doc) {
  using namespace detail;
  Settings s;
  s.doc = doc;
  const double seed = num(doc, "run", "seed");
  if (seed < 0 || seed != std::floor(seed)) throw ConfigError("run.seed must be a non-negative integer");
  s.seed = at(doc, "run", "seed").get<std::uint64_t>();
  s.output_dir = str(doc, "run", "output_dir");
  if (s.output_dir.empty()) throw ConfigError("run.output_dir must be non-empty");
  s.input_dir = at(doc, "run", "input_dir").is_null() ? s.output_dir : str(doc, "run", "input_dir");
  s.jobs = count(doc, "run", "jobs", 1);
  s.n_seeds = count(doc, "run", "n_seeds", 1);
  const bool long_tx = at(doc, "run", "long_tx").get<bool>();

  RunScaling scaling{};
  if (!at(doc, "run", "run_index").is_null()) {
    const auto i = count(doc, "run", "run_index", 1);
    s.run_index = static_cast<int>(i);
    scaling = scale_for_run(*s.run_index);
  }
  if (!at(doc, "run", "t_sim_ms").is_null()) {
    s.t_sim = num(doc, "run", "t_sim_ms");
  } else if (s.run_index) {
    s.t_sim = scaling.t_sim;
  } else {
    throw ConfigError("run.t_sim_ms is required when run.run_index is null");
  }
  if (!(s.t_sim > 0.0)) throw ConfigError("run.t_sim_ms must be > 0");
  if (long_tx && !s.run_index) throw ConfigError("run.long_tx needs run.run_index");

  const auto dims = numbers(doc, "lattice", "dims");
  if (dims.size() != 3) throw ConfigError("lattice.dims must have three entries");
  for (std::size_t k = 0; k < 3; ++k) {
    if (dims[k] < 1 || dims[k] != std::floor(dims[k])) throw ConfigError("lattice.dims entries must be integers >= 1");
    s.dims[k] = static_cast<std::size_t>(dims[k]);
  }
  s.spacing = num(doc, "lattice", "spacing_um");
  if (!(s.spacing > 0.0)) throw ConfigError("lattice.spacing_um must be > 0");

  auto& p = s.sim;
  p.v_ip3 = num(doc, "sim", "v_ip3");
  p.v_serca = num(doc, "sim", "v_serca");
  p.v_plc = num(doc, "sim", "v_plc");
  p.k1 = num(doc, "sim", "k1");
  p.k2 = num(doc, "sim", "k2");
  p.k_i = num(doc, "sim", "k_i");
  p.k_p = num(doc, "sim", "k_p");
  p.hill_n = num(doc, "sim", "hill_n");
  p.hill_m = num(doc, "sim", "hill_m");
  p.hill_p = num(doc, "sim", "hill_p");
  p.kappa_o = num(doc, "sim", "kappa_o");
  p.kappa_f = num(doc, "sim", "kappa_f");
  p.kappa_d = num(doc, "sim", "kappa_d");
  p.kappa_D = num(doc, "sim", "kappa_D");
  p.noise_sigma = num(doc, "sim", "noise_sigma");
  p.dt = num(doc, "sim", "dt");
  p.g_max = num(doc, "sim", "g_max");
  p.rho_half = num(doc, "sim", "rho_half");
  p.a0 = num(doc, "sim", "a0");
  p.a1 = num(doc, "sim", "a1");
  p.a2 = num(doc, "sim", "a2");
  const auto mode = str(doc, "sim", "conductance_mode");
  if (mode == "expected") p.conductance_mode = ConductanceMode::expected;
  else if (mode == "sampled") p.conductance_mode = ConductanceMode::sampled;
  else throw ConfigError("sim.conductance_mode must be 'expected' or 'sampled'");
  p.validate();
  s.sample_stride = count(doc, "sim", "sample_stride", 1);

  s.initial = {num(doc, "initial", "c0"), num(doc, "initial", "er0"), num(doc, "initial", "ip3_0")};
  if (!(s.initial.c0 >= 0.0) || !(s.initial.er0 >= 0.0) || !(s.initial.ip3_0 >= 0.0))
    throw ConfigError("initial concentrations must be >= 0");

  const std::size_t n_cells = s.dims[0] * s.dims[1] * s.dims[2];
  auto& sch = s.schedule;
  sch.tx_cell = at(doc, "schedule", "tx_cell").is_null() ? s.graph().center_cell() : count(doc, "schedule", "tx_cell");
  auto scaled = [&](const char* key, double from_run) {
    if (!at(doc, "schedule", key).is_null()) return num(doc, "schedule", key);
    if (!s.run_index) throw ConfigError(std::string("schedule.") + key + " is required when run.run_index is null");
    return from_run;
  };
  sch.injection_conc = scaled("injection_conc", scaling.injection_conc);
  sch.amplification = scaled("amplification", scaling.amplification);
  sch.delta_c_step = num(doc, "schedule", "delta_c_step");
  sch.injection_gain = num(doc, "schedule", "injection_gain");
  const double pulse = long_tx ? scaling.long_tx_duration : num(doc, "schedule", "pulse_ms");
  const double onset = num(doc, "schedule", "onset_ms");
  if (!(onset >= 0.0) || onset >= s.t_sim) throw ConfigError("schedule.onset_ms must lie in [0, t_sim)");
  sch.on_intervals = pulse_train(onset, pulse, num(doc, "schedule", "gap_ms"), s.t_sim);
  sch.validate(n_cells, s.t_sim);

  s.cache_format = str(doc, "cache", "format");
  if (s.cache_format != "binary" && s.cache_format != "csv") throw ConfigError("cache.format must be 'binary' or 'csv'");

  s.signal_cfg = {num(doc, "signals", "tau_s"), num(doc, "signals", "tau_rho_factor"), num(doc, "signals", "epsilon")};
  if (!(s.signal_cfg.tau_s >= 0.0) || !(s.signal_cfg.tau_rho_factor > 0.0) || !(s.signal_cfg.epsilon > 0.0))
    throw ConfigError("signals: need tau_s >= 0, tau_rho_factor > 0, epsilon > 0");
  const auto map = str(doc, "signals", "map");
  if (map != "round_robin" && map != "random_sparse") throw ConfigError("signals.map must be round_robin or random_sparse");
  s.random_map = map == "random_sparse";
  s.fan_out = count(doc, "signals", "fan_out", 1);
  if (!at(doc, "signals", "n_synapses").is_null()) s.n_synapses = count(doc, "signals", "n_synapses", 1);
  s.signal_trajectory = count(doc, "signals", "trajectory");
  if (s.signal_trajectory >= s.n_seeds) throw ConfigError("signals.trajectory must be < run.n_seeds");

  for (double w : numbers(doc, "model", "hidden_widths")) {
    if (w < 1 || w != std::floor(w)) throw ConfigError("model.hidden_widths entries must be integers >= 1");
    s.hidden_widths.push_back(static_cast<std::size_t>(w));
  }
  try {
    s.hidden_activation = parse_activation(str(doc, "model", "hidden_activation"));
    s.output_delta = parse_output_delta(str(doc, "model", "output_delta"));
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }

  s.gate.coeffs = {num(doc, "gate", "alpha"), num(doc, "gate", "beta"), num(doc, "gate", "gamma"),
                   num(doc, "gate", "delta"), num(doc, "gate", "eps_ca")};
  s.gate.k_steep = num(doc, "gate", "k_steep");
  s.gate.eta_theta = num(doc, "gate", "eta_theta");
  s.gate.validate();
  s.hypers = {num(doc, "train", "eta"), num(doc, "train", "lambda_m"), num(doc, "train", "lambda_w"),
              num(doc, "train", "xi"), num(doc, "train", "momentum")};
  s.hypers.validate();
  s.k_neighbors = count(doc, "train", "k_neighbors", 1);
  s.epochs = count(doc, "train", "epochs", 1);
  s.train_mode = str(doc, "train", "mode");
  if (s.train_mode != "gated" && s.train_mode != "baseline" && s.train_mode != "both")
    throw ConfigError("train.mode must be gated, baseline or both");
  s.threshold = num(doc, "train", "threshold");
  if (!(s.threshold > 0.0 && s.threshold < 1.0)) throw ConfigError("train.threshold must be in (0, 1)");

  const auto source = str(doc, "dataset", "source");
  if (source != "synthetic" && source != "csv") throw ConfigError("dataset.source must be 'synthetic' or 'csv'");
  s.synthetic = source == "synthetic";
  if (!s.synthetic) {
    if (at(doc, "dataset", "path").is_null()) throw ConfigError("dataset.path is required when dataset.source is csv");
    s.csv.path = str(doc, "dataset", "path");
  }
  s.csv.feature_columns = strings(doc, "dataset", "feature_columns");
  if (s.csv.feature_columns.empty()) throw ConfigError("dataset.feature_columns must be non-empty");
  s.csv.categorical_columns = strings(doc, "dataset", "categorical_columns");
  s.csv.label_column = str(doc, "dataset", "label_column");
  s.csv.positive_markers = strings(doc, "dataset", "positive_markers");
  const auto delim = str(doc, "dataset", "delimiter");
  if (delim.size() != 1) throw ConfigError("dataset.delimiter must be a single character");
  s.csv.delimiter = delim[0];
  try {
    s.normalization = parse_normalization(str(doc, "dataset", "normalization"));
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("dataset: ") + e.what());
  }
  if (!at(doc, "dataset", "ratio").is_null()) {
    s.split.ratio = num(doc, "dataset", "ratio");
  } else {
    if (at(doc, "dataset", "n_train").is_null() || at(doc, "dataset", "n_test").is_null())
      throw ConfigError("dataset.n_train and dataset.n_test are required when dataset.ratio is null");
    s.split.n_train = count(doc, "dataset", "n_train", 1);
    s.split.n_test = count(doc, "dataset", "n_test", 1);
  }
  s.split.stratify = at(doc, "dataset", "stratify").get<bool>();
  s.split.validate();
  s.synth_n = count(doc, "dataset", "synth_n", 2);
  s.synth_d = count(doc, "dataset", "synth_d", 1);
  s.class_sep = num(doc, "dataset", "class_sep");
  s.label_noise = num(doc, "dataset", "label_noise");
  if (!(s.label_noise >= 0.0 && s.label_noise <= 1.0)) throw ConfigError("dataset.label_noise must be in [0, 1]");

  s.mi.h = num(doc, "mi", "h_ms");
  s.mi.tau_rx = num(doc, "mi", "tau_rx");
  s.mi.delta_max = count(doc, "mi", "delta_max");
  if (!(s.mi.h > 0.0)) throw ConfigError("mi.h_ms must be > 0");
  s.receiver = count(doc, "mi", "receiver");
  if (s.receiver >= n_cells) throw ConfigError("mi.receiver is not a lattice cell");
  if (!at(doc, "mi", "tau_rx_sweep").is_null()) {
    const auto r = numbers(doc, "mi", "tau_rx_sweep");
    if (r.size() != 3 || !(r[2] > 0.0) || r[1] < r[0])
      throw ConfigError("mi.tau_rx_sweep must be [from, to, step] with step > 0 and to >= from");
    const auto steps = static_cast<std::size_t>(std::floor((r[1] - r[0]) / r[2] + 1e-9));
    for (std::size_t k = 0; k <= steps; ++k) s.tau_rx_values.push_back(r[0] + static_cast<double>(k) * r[2]);
  }

  for (std::size_t k = 0; k < kCoeffNames.size(); ++k) {
    s.grid.axes[k] = numbers(doc, "sweep", kCoeffNames[k]);
    if (s.grid.axes[k].empty()) throw ConfigError(std::string("sweep.") + kCoeffNames[k] + " must be non-empty");
    for (double v : s.grid.axes[k])
      if (!(v >= 0.0)) throw ConfigError(std::string("sweep.") + kCoeffNames[k] + " values must be >= 0");
  }
  s.sweep_epochs = at(doc, "sweep", "epochs").is_null() ? s.epochs : count(doc, "sweep", "epochs", 1);
  s.sweep_signal = str(doc, "sweep", "signal");
  if (s.sweep_signal != "cache" && s.sweep_signal != "label") throw ConfigError("sweep.signal must be cache or label");
  s.label_scale = num(doc, "sweep", "label_scale");
  return s;
}

}  // namespace astrogate::cli
