#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "astrogate/common.hpp"
#include "astrogate/lattice.hpp"

namespace astrogate {

enum class ConductanceMode { expected, sampled };

/// Kinetic, junction and noise constants of the multicellular Ca2+ model.
/// Concentrations in uM, time in ms.
struct SimParams {
  double v_ip3 = 0.6;      // IP3R max release rate, 1/ms
  double v_serca = 0.4;    // SERCA capacity, uM/ms
  double v_plc = 0.05;     // PLC production, uM/ms
  double k1 = 0.3;         // Ca half-saturation of IP3R, uM
  double k2 = 0.2;         // SERCA half-saturation, uM
  double k_i = 0.5;        // IP3 half-saturation, uM
  double k_p = 0.5;        // PLC half-saturation, uM
  double hill_n = 2.0;
  double hill_m = 2.0;
  double hill_p = 2.0;
  double kappa_o = 0.1;    // plasma-membrane extrusion, 1/ms
  double kappa_f = 0.05;   // ER leak / forward exchange, 1/ms
  double kappa_d = 0.05;   // IP3 degradation, 1/ms
  double kappa_D = 8.0;    // gap-junction diffusion, 1/ms
  double noise_sigma = 0.6;   // uM ms^-1/2, diagonal covariance
  double dt = 0.01;        // ms
  double g_max = 1.0;
  double rho_half = 0.5;   // HL/LH conductance fraction
  double a0 = 0.0;
  double a1 = 1.0;
  double a2 = 0.5;
  ConductanceMode conductance_mode = ConductanceMode::expected;

  /// Rates may be zero (reaction-free runs); half-saturations must be positive.
  void validate() const {
    auto nonneg = [](double v, const char* name) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError(std::string("sim.") + name + " must be finite and >= 0");
    };
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError(std::string("sim.") + name + " must be finite and > 0");
    };
    nonneg(v_ip3, "v_ip3");
    nonneg(v_serca, "v_serca");
    nonneg(v_plc, "v_plc");
    nonneg(kappa_o, "kappa_o");
    nonneg(kappa_f, "kappa_f");
    nonneg(kappa_d, "kappa_d");
    nonneg(kappa_D, "kappa_D");
    nonneg(noise_sigma, "noise_sigma");
    positive(k1, "k1");
    positive(k2, "k2");
    positive(k_i, "k_i");
    positive(k_p, "k_p");
    positive(dt, "dt");
    positive(g_max, "g_max");
    if (!(hill_n >= 1.0) || !(hill_m >= 1.0) || !(hill_p >= 1.0))
      throw ValidationError("sim.hill exponents must be >= 1");
    if (!(rho_half >= 0.0 && rho_half < 1.0)) throw ValidationError("sim.rho_half must be in [0, 1)");
    if (!std::isfinite(a0) || !std::isfinite(a1) || !std::isfinite(a2))
      throw ValidationError("sim.a0/a1/a2 must be finite");
  }

  std::array<double, 21> as_array() const {
    return {v_ip3, v_serca, v_plc, k1, k2, k_i, k_p, hill_n, hill_m, hill_p, kappa_o,
            kappa_f, kappa_d, kappa_D, noise_sigma, dt, g_max, rho_half, a0, a1, a2};
  }

  std::uint64_t digest() const {
    const auto values = as_array();
    auto h = fnv1a_doubles(values.data(), values.size());
    return fnv1a(conductance_mode == ConductanceMode::expected ? "expected" : "sampled", h);
  }
};

enum class JunctionLabel : std::uint8_t { HH, HL, LH, LL };

inline double hill(double x, double k, double exponent) {
  if (exponent == 2.0) return x * x / (k * k + x * x);
  const double xn = std::pow(x, exponent);
  return xn / (std::pow(k, exponent) + xn);
}

/// Probability that a single hemichannel between cells with Ca c_i, c_j is open.
inline double open_propensity(double c_i, double c_j, const SimParams& p) {
  return logistic(p.a0 + p.a1 * std::abs(c_i - c_j) + p.a2 * (c_i + c_j));
}

/// E[g | c] under two independent hemichannels open with probability p.
inline double expected_conductance(double p, const SimParams& params) {
  return params.g_max * (p * p + 2.0 * params.rho_half * p * (1.0 - p));
}

inline double label_conductance(JunctionLabel s, const SimParams& params) {
  switch (s) {
    case JunctionLabel::HH: return params.g_max;
    case JunctionLabel::HL:
    case JunctionLabel::LH: return params.g_max * params.rho_half;
    case JunctionLabel::LL: return 0.0;
  }
  return 0.0;
}

inline const char* label_name(JunctionLabel s) {
  switch (s) {
    case JunctionLabel::HH: return "HH";
    case JunctionLabel::HL: return "HL";
    case JunctionLabel::LH: return "LH";
    case JunctionLabel::LL: return "LL";
  }
  return "?";
}

struct NetworkState {
  std::vector<double> c;
  std::vector<double> er;
  std::vector<double> ip3;
  std::vector<JunctionLabel> junction;
  std::uint64_t step_count = 0;
  double time_tau = 0.0;

  std::size_t n_cells() const { return c.size(); }
};

struct InitialConditions {
  double c0 = 0.1;
  double er0 = 2.0;
  double ip3_0 = 0.1;
};

inline NetworkState initial_state(const AstrocyteGraph& graph, const InitialConditions& ic = {}) {
  NetworkState s;
  s.c.assign(graph.n_cells(), ic.c0);
  s.er.assign(graph.n_cells(), ic.er0);
  s.ip3.assign(graph.n_cells(), ic.ip3_0);
  s.junction.assign(graph.n_edges(), JunctionLabel::HH);
  return s;
}

/// Redraws every edge label from the product distribution of two independent hemichannels.
inline void junction_step(NetworkState& state, const AstrocyteGraph& graph, const SimParams& params,
                          std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  state.junction.resize(graph.n_edges());
  for (std::size_t k = 0; k < graph.n_edges(); ++k) {
    const auto& e = graph.edges()[k];
    const double p = open_propensity(state.c[e.i], state.c[e.j], params);
    const bool left_open = unif(rng) < p;
    const bool right_open = unif(rng) < p;
    state.junction[k] = left_open ? (right_open ? JunctionLabel::HH : JunctionLabel::HL)
                                  : (right_open ? JunctionLabel::LH : JunctionLabel::LL);
  }
}

/// Per-edge conductances used for diffusion in the current state.
inline std::vector<double> edge_conductances(const NetworkState& state, const AstrocyteGraph& graph,
                                             const SimParams& params) {
  std::vector<double> g(graph.n_edges());
  for (std::size_t k = 0; k < graph.n_edges(); ++k) {
    if (params.conductance_mode == ConductanceMode::sampled) {
      g[k] = label_conductance(state.junction[k], params);
    } else {
      const auto& e = graph.edges()[k];
      g[k] = expected_conductance(open_propensity(state.c[e.i], state.c[e.j], params), params);
    }
  }
  return g;
}

struct Fluxes {
  std::vector<double> j_in;
  std::vector<double> j_out;
};

inline Fluxes compute_fluxes(const NetworkState& s, const SimParams& p) {
  const std::size_t n = s.n_cells();
  Fluxes f{std::vector<double>(n), std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    f.j_in[i] = p.v_ip3 * hill(s.c[i], p.k1, p.hill_n) * hill(s.ip3[i], p.k_i, p.hill_m) * (s.er[i] - s.c[i]);
    f.j_out[i] = p.v_serca * hill(s.c[i], p.k2, p.hill_p) + p.kappa_o * s.c[i];
  }
  return f;
}

/// Transmitter drive at one cell. u_tx(tau) = 1 inside any [start, end) interval.
struct TransmitterSchedule {
  std::size_t tx_cell = 0;
  std::vector<std::pair<double, double>> on_intervals;
  double injection_conc = 500.0;  // uM, IP3 boost at schedule start
  double amplification = 2.5;
  double delta_c_step = 2.0;      // uM
  double injection_gain = 0.15;   // 1/ms; drive rate is gain * amplification * delta_c_step

  bool active(double tau) const {
    for (const auto& [a, b] : on_intervals)
      if (tau >= a && tau < b) return true;
    return false;
  }

  void validate(std::size_t n_cells, double t_sim) const {
    if (tx_cell >= n_cells) throw ValidationError("schedule.tx_cell out of range");
    double last_end = -std::numeric_limits<double>::infinity();
    for (const auto& [a, b] : on_intervals) {
      if (!(a < b)) throw ValidationError("schedule interval must have start < end");
      if (a < 0.0 || a >= t_sim) throw ValidationError("schedule interval must start inside [0, t_sim)");
      if (a < last_end) throw ValidationError("schedule intervals must be sorted and disjoint");
      last_end = b;
    }
    if (!(injection_conc >= 0.0) || !(amplification >= 0.0) || !(delta_c_step >= 0.0) || !(injection_gain >= 0.0))
      throw ValidationError("schedule drive parameters must be >= 0");
  }

  std::uint64_t digest() const {
    std::vector<double> v{static_cast<double>(tx_cell), injection_conc, amplification, delta_c_step, injection_gain};
    for (const auto& [a, b] : on_intervals) {
      v.push_back(a);
      v.push_back(b);
    }
    return fnv1a_doubles(v.data(), v.size());
  }
};

/// Run-index scaling: conc = 100 i uM, amplification 0.5 i, end time 40 i ms.
struct RunScaling {
  double injection_conc;
  double amplification;
  double t_sim;
  double long_tx_duration;  // 20 i ms
};

inline RunScaling scale_for_run(int run_index) {
  const double i = run_index;
  return {100.0 * i, 0.5 * i, 40.0 * i, 20.0 * i};
}

/// Pulses of `pulse_on` ms separated by `gap` ms off, starting at `onset`, clipped to t_sim.
inline std::vector<std::pair<double, double>> pulse_train(double onset, double pulse_on, double gap, double t_sim) {
  if (!(pulse_on > 0.0) || !(gap >= 0.0)) throw ValidationError("schedule: need pulse_on > 0 and gap >= 0");
  if (gap == 0.0) return {{onset, t_sim}};
  std::vector<std::pair<double, double>> out;
  for (double a = onset; a < t_sim; a += pulse_on + gap) out.emplace_back(a, std::min(a + pulse_on, t_sim));
  return out;
}

/// lambda_max of the all-open (g_max everywhere) weighted Laplacian.
inline double max_conductance_lambda(const SimParams& params, const AstrocyteGraph& graph) {
  if (graph.n_edges() == 0) return 0.0;
  std::vector<double> g(graph.n_edges(), params.g_max);
  return lambda_max_power(weighted_laplacian(graph, g));
}

/// Explicit-scheme step bound (kappa_o + V_SERCA + kappa_D lambda_max)^-1; +inf when every term is 0.
inline double stability_bound(const SimParams& params, const AstrocyteGraph& graph) {
  const double denom = params.kappa_o + params.v_serca + params.kappa_D * max_conductance_lambda(params, graph);
  return denom > 0.0 ? 1.0 / denom : std::numeric_limits<double>::infinity();
}

/// One Euler-Maruyama step of the reaction-diffusion field, in place.
/// Caller guarantees dt is within the stability bound.
inline void advance(NetworkState& s, const SimParams& p, const AstrocyteGraph& graph,
                    const TransmitterSchedule& schedule, std::mt19937_64& rng) {
  const std::size_t n = s.n_cells();
  const double dt = p.dt;
  const double tau = s.time_tau;

  junction_step(s, graph, p, rng);
  const std::vector<double> g = edge_conductances(s, graph, p);
  const Fluxes f = compute_fluxes(s, p);

  // L~ c accumulated edge by edge: (L~ c)_i = sum_j g_ij (c_i - c_j).
  std::vector<double> lc(n, 0.0);
  for (std::size_t k = 0; k < graph.n_edges(); ++k) {
    const auto& e = graph.edges()[k];
    const double flow = g[k] * (s.c[e.i] - s.c[e.j]);
    lc[e.i] += flow;
    lc[e.j] -= flow;
  }

  std::vector<double> c_next(n), er_next(n), ip3_next(n);
  const double noise_scale = std::sqrt(dt) * p.noise_sigma;
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    c_next[i] = s.c[i] + dt * (f.j_in[i] - f.j_out[i] - p.kappa_D * lc[i]);
    if (noise_scale > 0.0) c_next[i] += noise_scale * normal(rng);
    er_next[i] = s.er[i] + dt * (f.j_out[i] - f.j_in[i] - p.kappa_f * (s.er[i] - s.c[i]));
    ip3_next[i] = s.ip3[i] + dt * (p.v_plc * hill(s.c[i], p.k_p, 2.0) - p.kappa_d * s.ip3[i]);
  }

  if (schedule.active(tau))
    c_next[schedule.tx_cell] += schedule.injection_gain * schedule.amplification * schedule.delta_c_step * dt;
  if (!schedule.on_intervals.empty()) {
    const double start = schedule.on_intervals.front().first;
    if (tau <= start && start < tau + dt) ip3_next[schedule.tx_cell] += schedule.injection_conc;
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(c_next[i]) || !std::isfinite(er_next[i]) || !std::isfinite(ip3_next[i]))
      throw NumericDivergence("non-finite state at step " + std::to_string(s.step_count + 1) + " (cell " +
                              std::to_string(i) + ")");
    s.c[i] = std::max(0.0, c_next[i]);
    s.er[i] = std::max(0.0, er_next[i]);
    s.ip3[i] = std::max(0.0, ip3_next[i]);
  }
  ++s.step_count;
  s.time_tau = static_cast<double>(s.step_count) * dt;
}

/// Validated stepper bound to one graph / parameter set / schedule.
class Simulator {
 public:
  Simulator(AstrocyteGraph graph, SimParams params, TransmitterSchedule schedule)
      : graph_(std::move(graph)), params_(params), schedule_(std::move(schedule)) {
    params_.validate();
    if (!graph_.connected()) throw ValidationError("astrocyte graph must be connected");
    bound_ = stability_bound(params_, graph_);
    if (params_.dt > bound_)
      throw ValidationError("sim.dt = " + format_double(params_.dt) + " exceeds stability bound " +
                            format_double(bound_));
  }

  void step(NetworkState& state, std::mt19937_64& rng) const { advance(state, params_, graph_, schedule_, rng); }

  double stability_limit() const { return bound_; }
  const AstrocyteGraph& graph() const { return graph_; }
  const SimParams& params() const { return params_; }
  const TransmitterSchedule& schedule() const { return schedule_; }

 private:
  AstrocyteGraph graph_;
  SimParams params_;
  TransmitterSchedule schedule_;
  double bound_ = 0.0;
};

inline std::uint64_t graph_digest(const AstrocyteGraph& g) {
  std::vector<double> v{static_cast<double>(g.dims()[0]), static_cast<double>(g.dims()[1]),
                        static_cast<double>(g.dims()[2]), g.spacing()};
  return fnv1a_doubles(v.data(), v.size());
}

struct TrajectoryMeta {
  std::uint64_t params_digest = 0;
  std::uint64_t graph_digest = 0;
  std::uint64_t seed = 0;
  TransmitterSchedule schedule;
};

/// Sampled per-cell pools, row-major [sample][cell]. Immutable once produced.
struct Trajectory {
  std::size_t n_cells = 0;
  std::vector<double> times;
  std::vector<double> c_series;
  std::vector<double> e_series;
  std::vector<double> ip3_series;
  TrajectoryMeta meta;

  std::size_t n_samples() const { return times.size(); }
  double c(std::size_t sample, std::size_t cell) const { return c_series[sample * n_cells + cell]; }
  std::span<const double> c_row(std::size_t sample) const {
    return std::span<const double>(c_series).subspan(sample * n_cells, n_cells);
  }
  double t_end() const { return times.empty() ? 0.0 : times.back(); }

  std::uint64_t digest() const {
    auto h = fnv1a_doubles(times.data(), times.size());
    h = fnv1a_doubles(c_series.data(), c_series.size(), h);
    h = fnv1a_doubles(e_series.data(), e_series.size(), h);
    return fnv1a_doubles(ip3_series.data(), ip3_series.size(), h);
  }
};

inline void record_sample(Trajectory& t, const NetworkState& s) {
  t.times.push_back(s.time_tau);
  t.c_series.insert(t.c_series.end(), s.c.begin(), s.c.end());
  t.e_series.insert(t.e_series.end(), s.er.begin(), s.er.end());
  t.ip3_series.insert(t.ip3_series.end(), s.ip3.begin(), s.ip3.end());
}

struct RunOptions {
  std::size_t sample_stride = 1;
  InitialConditions initial{};
};

/// Steps from tau = 0 to t_sim; the initial state is sample 0. Deterministic in `seed`.
inline Trajectory run_simulation(const Simulator& sim, double t_sim, std::uint64_t seed, const RunOptions& opt = {}) {
  if (!(t_sim > 0.0)) throw ValidationError("t_sim must be > 0");
  if (opt.sample_stride == 0) throw ValidationError("sample_stride must be >= 1");
  sim.schedule().validate(sim.graph().n_cells(), t_sim);
  const auto n_steps = static_cast<std::uint64_t>(std::ceil(t_sim / sim.params().dt - 1e-9));

  std::mt19937_64 rng(seed);
  NetworkState state = initial_state(sim.graph(), opt.initial);
  Trajectory traj;
  traj.n_cells = sim.graph().n_cells();
  traj.meta = {sim.params().digest(), graph_digest(sim.graph()), seed, sim.schedule()};
  const std::size_t expected = static_cast<std::size_t>(n_steps / opt.sample_stride) + 1;
  traj.times.reserve(expected);
  traj.c_series.reserve(expected * traj.n_cells);
  traj.e_series.reserve(expected * traj.n_cells);
  traj.ip3_series.reserve(expected * traj.n_cells);

  record_sample(traj, state);
  for (std::uint64_t k = 1; k <= n_steps; ++k) {
    sim.step(state, rng);
    if (k % opt.sample_stride == 0) record_sample(traj, state);
  }
  return traj;
}

inline Trajectory run_simulation(const AstrocyteGraph& graph, const SimParams& params,
                                 const TransmitterSchedule& schedule, double t_sim, std::uint64_t seed,
                                 const RunOptions& opt = {}) {
  return run_simulation(Simulator(graph, params, schedule), t_sim, seed, opt);
}

}  // namespace astrogate
