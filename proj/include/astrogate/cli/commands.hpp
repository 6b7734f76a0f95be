#pragma once

#include <atomic>
#include <chrono>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "astrogate/checkpoint.hpp"
#include "astrogate/cli/config.hpp"
#include "astrogate/trainer.hpp"
#include "astrogate/trajectory_io.hpp"

namespace astrogate::cli {

namespace fs = std::filesystem;

inline constexpr const char* kToolVersion = "1.0.0";

/// Missing upstream artifact; reported with the command that produces it.
class MissingArtifact : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Runs f(0..n-1) on up to `jobs` threads; the first exception is rethrown after all workers stop.
template <class F>
void parallel_for(std::size_t n, std::size_t jobs, F&& f) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < jobs; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!err) err = std::current_exception();
          next = n;
        }
      }
    });
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Per-command provenance record. Output digests cover file bytes only; the timestamp lives here.
class Manifest {
 public:
  Manifest(std::string command, const Settings& s) : dir_(s.output_dir) {
    j_["tool"] = "astrogate";
    j_["version"] = kToolVersion;
    j_["command"] = std::move(command);
    j_["created_utc"] = utc_timestamp();
    j_["config"] = s.doc;
    j_["inputs"] = json::object();
    j_["outputs"] = json::object();
  }

  json& operator[](const char* key) { return j_[key]; }

  void input(const fs::path& path) { j_["inputs"][path.filename().string()] = file_digest(path.string()); }
  void output(const std::string& name) { j_["outputs"][name] = file_digest((dir_ / name).string()); }
  void outputs_from(const json& other) {
    for (const auto& [k, v] : other["outputs"].items()) j_["outputs"][k] = v;
  }
  const json& doc() const { return j_; }

  fs::path write(const std::string& name) const {
    const fs::path path = dir_ / name;
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j_.dump(2) << '\n';
    return path;
  }

 private:
  fs::path dir_;
  json j_;
};

inline json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifact("cannot open " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw std::runtime_error(path.string() + ": not valid JSON");
  return j;
}

inline void write_json(const json& j, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

inline void prepare_output_dir(const Settings& s) {
  std::error_code ec;
  fs::create_directories(s.output_dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + s.output_dir + ": " + ec.message());
}

inline std::string run_file_stem(std::size_t k) { return "trajectory_s" + std::to_string(k); }

inline std::vector<std::string> trajectory_files(const std::string& stem, const std::string& format) {
  if (format == "binary") return {stem + ".bin"};
  return {stem + "_c.csv", stem + "_er.csv", stem + "_ip3.csv"};
}

// ---------------------------------------------------------------- simulate

inline Manifest cmd_simulate(const Settings& s) {
  const Simulator sim(s.graph(), s.sim, s.schedule);
  prepare_output_dir(s);
  Manifest man("simulate", s);
  std::vector<json> runs(s.n_seeds);
  parallel_for(s.n_seeds, s.jobs, [&](std::size_t k) {
    const std::uint64_t seed = derive_seed(s.seed, "sim", k);
    Trajectory t = run_simulation(sim, s.t_sim, seed, RunOptions{s.sample_stride, s.initial});
    const auto stem = (fs::path(s.output_dir) / run_file_stem(k)).string();
    if (s.cache_format == "binary") io::write_trajectory_binary(t, stem + ".bin");
    else io::write_trajectory_csv(t, stem);
    runs[k] = {{"index", k}, {"seed", seed}, {"samples", t.n_samples()}, {"digest", hex64(t.digest())}};
  });
  for (std::size_t k = 0; k < s.n_seeds; ++k)
    for (const auto& f : trajectory_files(run_file_stem(k), s.cache_format)) man.output(f);
  man["runs"] = runs;
  man["stability_bound_ms"] = sim.stability_limit();
  man["params_digest"] = hex64(s.sim.digest());
  man["graph_digest"] = hex64(graph_digest(sim.graph()));
  man["schedule"] = {{"tx_cell", s.schedule.tx_cell},
                     {"on_intervals", s.schedule.on_intervals},
                     {"injection_conc", s.schedule.injection_conc},
                     {"amplification", s.schedule.amplification},
                     {"digest", hex64(s.schedule.digest())}};
  man["t_sim_ms"] = s.t_sim;
  man.write("simulate_manifest.json");
  std::cout << "simulate: " << s.n_seeds << " run(s), t_sim=" << format_double(s.t_sim) << " ms -> " << s.output_dir
            << '\n';
  return man;
}

/// Settings and manifest of the simulate run whose cache lives in `dir`.
struct SimulationCache {
  fs::path dir;
  json manifest;
  Settings settings;
  std::size_t n_runs = 0;
};

inline SimulationCache open_simulation_cache(const std::string& dir) {
  const fs::path path = fs::path(dir) / "simulate_manifest.json";
  if (!fs::exists(path))
    throw MissingArtifact("no trajectory cache in '" + dir + "'; run `astrogate simulate --output-dir " + dir +
                          "` first");
  SimulationCache c;
  c.dir = dir;
  c.manifest = read_json(path);
  c.settings = make_settings(c.manifest.at("config"));
  c.n_runs = c.manifest.at("runs").size();
  return c;
}

inline Trajectory load_run(const SimulationCache& c, std::size_t k, Manifest* man = nullptr) {
  const auto stem = (c.dir / run_file_stem(k)).string();
  const auto& fmt = c.settings.cache_format;
  for (const auto& f : trajectory_files(run_file_stem(k), fmt)) {
    if (!fs::exists(c.dir / f))
      throw MissingArtifact("trajectory file " + (c.dir / f).string() + " is missing; re-run `astrogate simulate`");
    if (man) man->input(c.dir / f);
  }
  return fmt == "binary" ? io::read_trajectory_binary(stem + ".bin") : io::read_trajectory_csv(stem);
}

// ---------------------------------------------------------------- signals

inline void write_signals_csv(const SignalSeries& sig, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "step";
  for (std::size_t i = 0; i < sig.n_synapses; ++i) out << ",synapse_" << i;
  out << '\n';
  for (std::size_t t = 0; t < sig.n_steps(); ++t) {
    out << t;
    for (double v : sig.row(t)) out << ',' << format_double(v);
    out << '\n';
  }
}

inline SignalSeries read_signals_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in)
    throw MissingArtifact("no signal cache at " + path.string() +
                          "; run `astrogate simulate` and `astrogate signals` first, or use --mode baseline");
  std::string line;
  if (!std::getline(in, line) || line.rfind("step", 0) != 0) throw std::runtime_error(path.string() + ": bad header");
  SignalSeries sig;
  sig.n_synapses = static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto fields = split_line(line, ',');
    if (fields.size() != sig.n_synapses + 1)
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": wrong column count");
    for (std::size_t k = 1; k < fields.size(); ++k) {
      double v = 0.0;
      if (!parse_double(fields[k], v)) throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": bad number");
      sig.values.push_back(v);
    }
  }
  if (sig.n_steps() == 0) throw std::runtime_error(path.string() + ": empty signal cache");
  return sig;
}

inline Manifest cmd_signals(const Settings& s) {
  const auto cache = open_simulation_cache(s.input_dir);
  if (s.signal_trajectory >= cache.n_runs)
    throw ValidationError("signals.trajectory = " + std::to_string(s.signal_trajectory) + " but the cache holds " +
                          std::to_string(cache.n_runs) + " run(s)");
  const std::size_t n_syn = s.n_synapses.value_or(s.total_units());
  const SynapseMap map = build_default_map(n_syn, cache.settings.graph().n_cells(), derive_seed(s.seed, "map", 0),
                                           s.random_map, s.fan_out);
  prepare_output_dir(s);
  Manifest man("signals", s);
  const Trajectory traj = load_run(cache, s.signal_trajectory, &man);
  const SignalSeries sig = compute_signals(traj, map, s.signal_cfg);
  write_signals_csv(sig, fs::path(s.output_dir) / "signals.csv");
  man.output("signals.csv");
  const double dt = traj.times[1] - traj.times[0];
  man["q_digest"] = hex64(map.digest());
  man["n_synapses"] = n_syn;
  man["smoothing"] = {{"tau_s", s.signal_cfg.tau_s},
                      {"tau_rho", s.signal_cfg.tau_rho_factor * s.signal_cfg.tau_s},
                      {"epsilon", s.signal_cfg.epsilon},
                      {"phi", smoothing_gain(dt, s.signal_cfg.tau_s)},
                      {"rho", smoothing_gain(dt, s.signal_cfg.tau_rho_factor * s.signal_cfg.tau_s)},
                      {"sample_dt_ms", dt}};
  man["source_trajectory_digest"] = hex64(traj.digest());
  man.write("signals_manifest.json");
  std::cout << "signals: " << sig.n_steps() << " steps x " << n_syn << " synapses -> " << s.output_dir << '\n';
  return man;
}

// ---------------------------------------------------------------- datasets

struct PreparedData {
  SplitResult split;
  json info;
};

inline PreparedData prepare_dataset(const Settings& s) {
  PreparedData out;
  Dataset all;
  if (s.synthetic) {
    all = synthesize(s.synth_n, s.synth_d, s.class_sep, derive_seed(s.seed, "synth", 0), s.label_noise);
    out.info["source"] = "synthetic";
  } else {
    CsvLoadReport rep;
    all = load_csv(s.csv, &rep);
    out.info["source"] = s.csv.path;
    out.info["file_digest"] = file_digest(s.csv.path);
    out.info["rows_read"] = rep.rows_read;
    out.info["rows_rejected"] = rep.rows_rejected;
  }
  out.split = split_dataset(all, s.split, s.normalization, derive_seed(s.seed, "shuffle", 1));
  const auto& st = out.split.stats;
  out.info["features"] = all.feature_names;
  out.info["normalization"] = {{"kind", s.doc["dataset"]["normalization"]},
                               {"shift", std::vector<double>(st.shift.data(), st.shift.data() + st.shift.size())},
                               {"scale", std::vector<double>(st.scale.data(), st.scale.data() + st.scale.size())}};
  out.info["n_train"] = out.split.train.size();
  out.info["n_test"] = out.split.test.size();
  out.info["positives_train"] = out.split.train.positives();
  out.info["positives_test"] = out.split.test.positives();
  out.info["train_rows_digest"] = hex64(rows_digest(out.split.train_rows));
  out.info["test_rows_digest"] = hex64(rows_digest(out.split.test_rows));
  return out;
}

inline Dataset read_dataset_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifact("no dataset cache at " + path.string() + "; run `astrogate train` first");
  std::string line;
  std::getline(in, line);
  const auto header = split_line(line, ',');
  if (header.empty() || header[0] != "label") throw std::runtime_error(path.string() + ": bad header");
  Dataset d;
  d.feature_names.assign(header.begin() + 1, header.end());
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_line(line, ',');
    if (f.size() != header.size()) throw std::runtime_error(path.string() + ": wrong column count");
    d.y.push_back(f[0] == "1" ? 1 : 0);
    for (std::size_t k = 1; k < f.size(); ++k) {
      double v = 0.0;
      if (!parse_double(f[k], v)) throw std::runtime_error(path.string() + ": bad number");
      values.push_back(v);
    }
  }
  d.x = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), static_cast<Eigen::Index>(d.y.size()), static_cast<Eigen::Index>(header.size() - 1));
  return d;
}

// ---------------------------------------------------------------- train / eval

inline std::vector<TrainMode> selected_modes(const std::string& mode) {
  if (mode == "gated") return {TrainMode::gated};
  if (mode == "baseline") return {TrainMode::baseline};
  return {TrainMode::gated, TrainMode::baseline};
}

inline TrainConfig train_config(const Settings& s, std::size_t d) {
  TrainConfig cfg;
  cfg.arch.widths = s.widths(d);
  cfg.arch.hidden = s.hidden_activation;
  cfg.gate = s.gate;
  cfg.hypers = s.hypers;
  cfg.k_neighbors = s.k_neighbors;
  cfg.output_delta = s.output_delta;
  cfg.epochs = s.epochs;
  cfg.init_seed = derive_seed(s.seed, "init", 0);
  cfg.shuffle_seed = derive_seed(s.seed, "shuffle", 0);
  cfg.threshold = s.threshold;
  return cfg;
}

inline json metrics_json(const Metrics& m) {
  return {{"accuracy", m.accuracy}, {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1},
          {"fpr", m.fpr},           {"tp", m.tp},               {"fp", m.fp},         {"tn", m.tn},
          {"fn", m.fn}};
}

inline Manifest cmd_train(const Settings& s) {
  const auto modes = selected_modes(s.train_mode);
  const bool need_signals = std::find(modes.begin(), modes.end(), TrainMode::gated) != modes.end();
  const fs::path signal_path = fs::path(s.input_dir) / "signals.csv";
  SignalSeries sig;
  if (need_signals) sig = read_signals_csv(signal_path);
  const PreparedData data = prepare_dataset(s);
  const TrainConfig cfg = train_config(s, data.split.train.dims());
  if (need_signals && sig.n_synapses < cfg.arch.n_units())
    std::cerr << "warning: signal cache has " << sig.n_synapses << " synapses for " << cfg.arch.n_units()
              << " units; the remainder read 0\n";

  prepare_output_dir(s);
  Manifest man("train", s);
  if (need_signals) man.input(signal_path);
  const fs::path out_dir = s.output_dir;
  write_dataset_csv(data.split.train, (out_dir / "dataset_train.csv").string());
  write_dataset_csv(data.split.test, (out_dir / "dataset_test.csv").string());

  std::vector<json> summaries(modes.size());
  parallel_for(modes.size(), s.jobs, [&](std::size_t k) {
    const TrainMode mode = modes[k];
    const std::string name = mode_name(mode);
    const SignalSource src = mode == TrainMode::gated ? replay_source(sig) : SignalSource{};
    const TrainResult res = train(data.split.train, cfg, mode, src, &data.split.test);
    write_metrics_csv(res.history, (out_dir / ("metrics_" + name + ".csv")).string());
    save_checkpoint(checkpoint_json(res.model, name, cfg.output_delta, cfg.k_neighbors),
                    (out_dir / ("checkpoint_" + name + ".json")).string());
    const auto& last = res.history.back();
    json summary = {{"mode", name}, {"epochs", cfg.epochs}, {"final_train_loss", last.loss},
                    {"test", metrics_json(last.metrics)}};
    write_json(summary, out_dir / ("summary_" + name + ".json"));
    summaries[k] = summary;
  });
  man.output("dataset_train.csv");
  man.output("dataset_test.csv");
  for (auto mode : modes) {
    const std::string name = mode_name(mode);
    for (const auto& f : {"metrics_" + name + ".csv", "checkpoint_" + name + ".json", "summary_" + name + ".json"})
      man.output(f);
  }
  man["dataset"] = data.info;
  man["seeds"] = {{"root", s.seed}, {"init", cfg.init_seed}, {"shuffle", cfg.shuffle_seed},
                  {"split", derive_seed(s.seed, "shuffle", 1)}, {"synth", derive_seed(s.seed, "synth", 0)}};
  man["architecture"] = cfg.arch.widths;
  man["summaries"] = summaries;
  man.write("train_manifest.json");
  for (const auto& sm : summaries)
    std::cout << "train[" << sm["mode"].get<std::string>() << "]: test accuracy "
              << format_double(sm["test"]["accuracy"].get<double>()) << '\n';
  return man;
}

inline Manifest cmd_eval(const Settings& s) {
  const auto modes = selected_modes(s.train_mode);
  const fs::path in_dir = s.input_dir;
  const Dataset test = read_dataset_csv(in_dir / "dataset_test.csv");
  std::vector<GatedModel> models;
  for (auto mode : modes) {
    const fs::path ck = in_dir / ("checkpoint_" + std::string(mode_name(mode)) + ".json");
    if (!fs::exists(ck)) throw MissingArtifact("no checkpoint at " + ck.string() + "; run `astrogate train` first");
    models.push_back(load_checkpoint(ck.string()));
  }
  prepare_output_dir(s);
  Manifest man("eval", s);
  man.input(in_dir / "dataset_test.csv");
  json results = json::object();
  for (std::size_t k = 0; k < modes.size(); ++k) {
    const std::string name = mode_name(modes[k]);
    man.input(in_dir / ("checkpoint_" + name + ".json"));
    const Evaluation ev = evaluate(models[k].net, test, s.threshold);
    json out = {{"mode", name}, {"threshold", s.threshold}, {"n", test.size()}, {"loss", ev.loss},
                {"metrics", metrics_json(ev.metrics)},
                {"confusion", {{"actual_0", {ev.metrics.tn, ev.metrics.fp}}, {"actual_1", {ev.metrics.fn, ev.metrics.tp}}}}};
    write_json(out, fs::path(s.output_dir) / ("eval_" + name + ".json"));
    man.output("eval_" + name + ".json");
    results[name] = out["metrics"];
    std::cout << "eval[" << name << "]: accuracy " << format_double(ev.metrics.accuracy) << ", FPR "
              << format_double(ev.metrics.fpr) << '\n';
  }
  man["results"] = results;
  man.write("eval_manifest.json");
  return man;
}

// ---------------------------------------------------------------- mi

inline void write_decay_rows(std::ostream& out, const std::vector<HopSummary>& hops, const std::string& prefix = "") {
  for (const auto& h : hops)
    out << prefix << h.hop << ',' << format_double(h.mean_i_star) << ',' << format_double(h.ci_low) << ','
        << format_double(h.ci_high) << '\n';
}

inline Manifest cmd_mi(const Settings& s) {
  const auto cache = open_simulation_cache(s.input_dir);
  const auto& sim_cfg = cache.settings;
  const AstrocyteGraph graph = sim_cfg.graph();
  if (s.receiver >= graph.n_cells()) throw ValidationError("mi.receiver is not a cell of the cached lattice");
  prepare_output_dir(s);
  Manifest man("mi", s);
  std::vector<Trajectory> runs(cache.n_runs);
  for (std::size_t k = 0; k < cache.n_runs; ++k)
    for (const auto& f : trajectory_files(run_file_stem(k), sim_cfg.cache_format)) man.input(cache.dir / f);
  parallel_for(cache.n_runs, s.jobs, [&](std::size_t k) { runs[k] = load_run(cache, k); });

  const fs::path out_dir = s.output_dir;
  std::ofstream per_run(out_dir / "mi_runs.csv", std::ios::trunc);
  per_run << "run,seed,receiver,delta_star,i_star\n";
  json run_rows = json::array();
  for (std::size_t k = 0; k < cache.n_runs; ++k) {
    const auto binned = bin_trajectory(runs[k], sim_cfg.schedule, s.receiver, s.mi.h, s.mi.tau_rx);
    const auto prof = lagged_mi(binned, s.mi.delta_max);
    const std::string name = "mi_profile_s" + std::to_string(k) + ".csv";
    std::ofstream out(out_dir / name, std::ios::trunc);
    out << "delta,mi_bits\n";
    for (std::size_t d = 0; d < prof.i_of_delta.size(); ++d) out << d << ',' << format_double(prof.i_of_delta[d]) << '\n';
    out.close();
    man.output(name);
    const auto seed = cache.manifest["runs"][k]["seed"].get<std::uint64_t>();
    per_run << k << ',' << seed << ',' << s.receiver << ',' << prof.delta_star << ',' << format_double(prof.i_star)
            << '\n';
    run_rows.push_back({{"run", k}, {"delta_star", prof.delta_star}, {"i_star", prof.i_star}});
  }
  per_run.close();
  man.output("mi_runs.csv");

  const auto decay = distance_decay(runs, graph, sim_cfg.schedule, s.mi);
  {
    std::ofstream out(out_dir / "distance_decay.csv", std::ios::trunc);
    out << "hop,mean_i_star,ci_low,ci_high\n";
    write_decay_rows(out, decay);
  }
  man.output("distance_decay.csv");

  if (!s.tau_rx_values.empty()) {
    std::vector<std::vector<HopSummary>> rows(s.tau_rx_values.size());
    parallel_for(rows.size(), s.jobs, [&](std::size_t k) {
      MiAnalysisConfig cfg = s.mi;
      cfg.tau_rx = s.tau_rx_values[k];
      rows[k] = distance_decay(runs, graph, sim_cfg.schedule, cfg);
    });
    std::ofstream out(out_dir / "tau_rx_sensitivity.csv", std::ios::trunc);
    out << "tau_rx,hop,mean_i_star,ci_low,ci_high\n";
    for (std::size_t k = 0; k < rows.size(); ++k) write_decay_rows(out, rows[k], format_double(s.tau_rx_values[k]) + ",");
    out.close();
    man.output("tau_rx_sensitivity.csv");
  }
  json hops = json::array();
  for (const auto& h : decay)
    hops.push_back({{"hop", h.hop}, {"n", h.n}, {"mean_i_star", h.mean_i_star}, {"ci_low", h.ci_low}, {"ci_high", h.ci_high}});
  man["runs"] = run_rows;
  man["distance_decay"] = hops;
  man.write("mi_manifest.json");
  std::cout << "mi: " << cache.n_runs << " run(s), receiver " << s.receiver << " -> " << s.output_dir << '\n';
  return man;
}

// ---------------------------------------------------------------- sweep

inline Manifest cmd_sweep(const Settings& s) {
  const auto cells = s.grid.cells();
  if (cells.empty()) throw ValidationError("sweep: empty grid");
  SignalSeries sig;
  const fs::path signal_path = fs::path(s.input_dir) / "signals.csv";
  if (s.sweep_signal == "cache") sig = read_signals_csv(signal_path);
  const PreparedData data = prepare_dataset(s);
  TrainConfig base = train_config(s, data.split.train.dims());
  base.epochs = s.sweep_epochs;

  prepare_output_dir(s);
  Manifest man("sweep", s);
  if (s.sweep_signal == "cache") man.input(signal_path);
  const double scale = s.label_scale;
  const SignalSource src = s.sweep_signal == "cache"
                               ? replay_source(sig)
                               : SignalSource([scale](std::uint64_t, int y, Eigen::VectorXd& out) {
                                   out.setConstant(scale * (2.0 * y - 1.0));
                                 });
  std::vector<double> acc(cells.size());
  parallel_for(cells.size(), s.jobs, [&](std::size_t k) {
    TrainConfig cfg = base;
    cfg.gate.coeffs = cells[k];
    const TrainResult res = train(data.split.train, cfg, TrainMode::gated, src, &data.split.test);
    acc[k] = evaluate(res.model.net, data.split.test, cfg.threshold).metrics.accuracy;
  });
  const fs::path out_dir = s.output_dir;
  {
    std::ofstream out(out_dir / "sweep.csv", std::ios::trunc);
    out << "alpha,beta,gamma,delta,eps_ca,accuracy\n";
    for (std::size_t k = 0; k < cells.size(); ++k) {
      for (double v : coeff_vector(cells[k])) out << format_double(v) << ',';
      out << format_double(acc[k]) << '\n';
    }
  }
  const SweepStats st = sweep_statistics(cells, acc);
  {
    std::ofstream out(out_dir / "sweep_stats.csv", std::ios::trunc);
    out << "coefficient,pearson_r,std_coef\n";
    for (std::size_t k = 0; k < kCoeffNames.size(); ++k)
      out << kCoeffNames[k] << ',' << format_double(st.pearson_r[k]) << ',' << format_double(st.std_coef[k]) << '\n';
  }
  man.output("sweep.csv");
  man.output("sweep_stats.csv");
  const auto top = top_coefficient(st);
  man["top_coefficient"] = top < kCoeffNames.size() ? json(kCoeffNames[top]) : json(nullptr);
  man["cells"] = cells.size();
  man.write("sweep_manifest.json");
  std::cout << "sweep: " << cells.size() << " cell(s); top coefficient "
            << (top < kCoeffNames.size() ? kCoeffNames[top] : "undefined") << '\n';
  return man;
}

// ---------------------------------------------------------------- pipeline / replay

inline Manifest cmd_pipeline(const Settings& in) {
  Settings s = in;
  s.input_dir = s.output_dir;
  Manifest man("pipeline", s);
  for (const auto& stage : {cmd_simulate(s), cmd_signals(s), cmd_train(s), cmd_eval(s), cmd_mi(s)})
    man.outputs_from(stage.doc());
  man.write("pipeline_manifest.json");
  return man;
}

inline Manifest run_command(const std::string& name, const Settings& s) {
  if (name == "simulate") return cmd_simulate(s);
  if (name == "signals") return cmd_signals(s);
  if (name == "train") return cmd_train(s);
  if (name == "eval") return cmd_eval(s);
  if (name == "mi") return cmd_mi(s);
  if (name == "sweep") return cmd_sweep(s);
  if (name == "pipeline") return cmd_pipeline(s);
  throw ValidationError("unknown command '" + name + "'");
}

/// Re-runs the command recorded in `manifest_path` into `output_dir`, reading inputs from the
/// original run's input directory, and compares output digests. Returns true when all match.
inline bool cmd_replay(const std::string& manifest_path, const std::string& output_dir, std::ostream& report) {
  const json old = read_json(manifest_path);
  if (!old.contains("command") || !old.contains("config") || !old.contains("outputs"))
    throw ValidationError(manifest_path + " is not an astrogate manifest");
  const std::string command = old["command"].get<std::string>();
  json doc = old["config"];
  const fs::path orig_out = doc["run"]["output_dir"].get<std::string>();
  if (fs::weakly_canonical(orig_out) == fs::weakly_canonical(output_dir))
    throw ValidationError("replay needs an output directory different from the recorded one");
  if (doc["run"]["input_dir"].is_null()) doc["run"]["input_dir"] = orig_out.string();
  doc["run"]["output_dir"] = output_dir;
  json resolved = default_config();
  merge_document(resolved, doc, manifest_path);
  const Manifest fresh = run_command(command, make_settings(resolved));
  bool ok = true;
  for (const auto& [name, digest] : old["outputs"].items()) {
    const auto& now = fresh.doc()["outputs"];
    const bool same = now.contains(name) && now[name] == digest;
    ok = ok && same;
    report << (same ? "match    " : "MISMATCH ") << name << '\n';
  }
  if (fresh.doc()["outputs"].size() != old["outputs"].size()) {
    report << "MISMATCH output set differs\n";
    ok = false;
  }
  return ok;
}

}  // namespace astrogate::cli
