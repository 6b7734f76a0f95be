// astrogate: batch driver for the Ca2+ simulator, signal cache, gated trainer and MI analysis.
//
// Exit codes: 0 ok, 1 invalid configuration or arguments, 2 runtime / numeric failure.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "astrogate/cli/commands.hpp"

using astrogate::cli::json;

namespace {

struct TauRxArg {
  std::string text;
  double step = 0.25;
};

void add_tau_rx(std::vector<std::pair<std::string, json>>& flags, const TauRxArg& arg) {
  const auto dots = arg.text.find("..");
  if (dots == std::string::npos) {
    double v = 0.0;
    if (!astrogate::parse_double(arg.text, v)) throw astrogate::ValidationError("--tau-rx: not a number: " + arg.text);
    flags.emplace_back("mi.tau_rx", v);
    return;
  }
  double lo = 0.0, hi = 0.0;
  if (!astrogate::parse_double(arg.text.substr(0, dots), lo) || !astrogate::parse_double(arg.text.substr(dots + 2), hi))
    throw astrogate::ValidationError("--tau-rx: expected FROM..TO, got " + arg.text);
  flags.emplace_back("mi.tau_rx_sweep", json::array({lo, hi, arg.step}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"astrogate - Ca2+-gated learning pipeline"};
  app.require_subcommand(1);
  app.fallthrough();

  astrogate::cli::ConfigSources src;
  std::string config_file;
  std::optional<std::string> output_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  app.add_option("--config", config_file, "JSON config file (a run manifest also works)");
  app.add_option("--output-dir", output_dir, "Output directory");
  app.add_option("--seed", seed, "Root seed");
  app.add_option("--jobs", jobs, "Worker threads");
  app.add_option("--set", src.set_overrides, "Override a config key: section.key=value")->allow_extra_args(false);

  std::optional<int> run_index;
  std::optional<double> t_sim;
  std::optional<std::size_t> n_seeds, epochs, receiver, delta_max;
  std::optional<double> h_ms;
  std::optional<std::string> mode, cache_format, sweep_signal;
  bool long_tx = false, no_ca = false;
  TauRxArg tau_rx;
  std::string manifest_path;

  auto* sim = app.add_subcommand("simulate", "Run the Ca2+ field simulator and cache trajectories");
  auto* sig = app.add_subcommand("signals", "Build the per-synapse signal cache from a trajectory");
  auto* trn = app.add_subcommand("train", "Train gated and/or baseline classifiers");
  auto* evl = app.add_subcommand("eval", "Evaluate trained checkpoints on the cached test split");
  auto* mi = app.add_subcommand("mi", "Lagged mutual information and distance decay");
  auto* swp = app.add_subcommand("sweep", "Gate-coefficient sensitivity sweep");
  auto* pipe = app.add_subcommand("pipeline", "simulate, signals, train, eval and mi in sequence");
  auto* rep = app.add_subcommand("replay", "Re-run a command from its manifest and compare output digests");
  (void)sig;

  for (auto* c : {sim, pipe}) {
    c->add_option("--run-index", run_index, "Run index i: conc 100i uM, amplification 0.5i, t_sim 40i ms");
    c->add_option("--t-sim", t_sim, "Simulation end time, ms");
    c->add_option("--seeds", n_seeds, "Number of seeded runs");
    c->add_flag("--long-tx", long_tx, "Transmitter pulses last 20i ms");
    c->add_option("--cache-format", cache_format, "binary or csv");
  }
  for (auto* c : {trn, evl, pipe}) c->add_option("--mode", mode, "gated, baseline or both");
  for (auto* c : {trn, pipe}) c->add_option("--epochs", epochs, "Training epochs");
  trn->add_flag("--no-ca", no_ca, "Baseline only; never reads the signal cache");
  swp->add_option("--epochs", epochs, "Training epochs per grid cell");
  swp->add_option("--signal", sweep_signal, "cache or label");
  mi->add_option("--tau-rx", tau_rx.text, "Threshold, or FROM..TO for a sensitivity table");
  mi->add_option("--step", tau_rx.step, "Step for a --tau-rx range");
  mi->add_option("--bin-width", h_ms, "Bin width h, ms");
  mi->add_option("--delta-max", delta_max, "Largest lag, bins");
  mi->add_option("--receiver", receiver, "Receiver cell index");
  rep->add_option("manifest", manifest_path, "Manifest written by an earlier command")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    if (command == "replay") {
      const std::string out = output_dir.value_or("replay");
      const bool ok = astrogate::cli::cmd_replay(manifest_path, out, std::cout);
      std::cout << (ok ? "replay: all outputs identical\n" : "replay: outputs differ\n");
      return ok ? 0 : 2;
    }

    if (!config_file.empty()) src.file = config_file;
    auto& f = src.flags;
    if (output_dir) f.emplace_back("run.output_dir", *output_dir);
    if (seed) f.emplace_back("run.seed", *seed);
    if (jobs) f.emplace_back("run.jobs", *jobs);
    if (run_index) f.emplace_back("run.run_index", *run_index);
    if (t_sim) f.emplace_back("run.t_sim_ms", *t_sim);
    if (n_seeds) f.emplace_back("run.n_seeds", *n_seeds);
    if (long_tx) f.emplace_back("run.long_tx", true);
    if (cache_format) f.emplace_back("cache.format", *cache_format);
    if (mode) f.emplace_back("train.mode", *mode);
    if (no_ca) f.emplace_back("train.mode", "baseline");
    if (epochs) f.emplace_back(command == "sweep" ? "sweep.epochs" : "train.epochs", *epochs);
    if (sweep_signal) f.emplace_back("sweep.signal", *sweep_signal);
    if (!tau_rx.text.empty()) add_tau_rx(f, tau_rx);
    if (h_ms) f.emplace_back("mi.h_ms", *h_ms);
    if (delta_max) f.emplace_back("mi.delta_max", *delta_max);
    if (receiver) f.emplace_back("mi.receiver", *receiver);

    const auto settings = astrogate::cli::make_settings(astrogate::cli::resolve_config(src));
    astrogate::cli::run_command(command, settings);
    return 0;
  } catch (const astrogate::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
