#pragma once

// Facility physics for a battery-assisted AI data center: computing cluster
// power/throughput, RC thermal dynamics with ambient-corrected cooling,
// battery storage, PCC exchange, and the trajectory validator every
// downstream component is checked against.
//
// Units: powers in MW, energies in MWh, temperatures in degC, per-server
// coefficients in watts (converted with an explicit 1e-6 factor). Throughput
// s is dimensionless in {0} union [s_min, 1].
//
// The scheduling stack (planner, dispatcher, validator) evaluates IT power
// through the piecewise-linear curve sampled at `pwl_breakpoints` points of
// the calibrated quadratic, so optimized plans and simulated trajectories
// agree exactly. `it_power` itself is the quadratic calibration reference.

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "aidc/common.hpp"

namespace aidc {

struct ComputeConfig {
  long long n_server = 1070663;
  double r_peak = 20800.0;  // workload units per second per server
  double s_min = 0.755;
  double alpha0 = 1052.7;  // W
  double alpha1 = -2288.6;  // W
  double alpha2 = 1469.4;  // W
  double eta_ipcs = 0.95;
  double p_it_cap_mw = 250.0;
  int pwl_breakpoints = 9;

  /// Fleet size that realizes an aggregate IT capacity, floor(cap / P(1)).
  static long long servers_for_capacity(double cap_mw, double a0, double a1, double a2) {
    return static_cast<long long>(std::floor(cap_mw * 1e6 / (a0 + a1 + a2)));
  }

  void validate() const {
    if (!(s_min > 0.0 && s_min < 1.0)) throw config_error("s_min must lie in (0,1)");
    if (!(eta_ipcs > 0.0 && eta_ipcs <= 1.0)) throw config_error("eta_ipcs must lie in (0,1]");
    if (!(alpha2 > 0.0)) throw config_error("alpha2 must be positive");
    if (n_server <= 0) throw config_error("n_server must be positive");
    if (r_peak <= 0.0) throw config_error("r_peak must be positive");
    if (pwl_breakpoints < 2) throw config_error("pwl_breakpoints must be >= 2");
    // Quadratic must stay positive over the calibrated region, including
    // its vertex when that falls inside [s_min, 1].
    for (double s : {s_min, 1.0, std::clamp(-alpha1 / (2.0 * alpha2), s_min, 1.0)}) {
      if (alpha0 + alpha1 * s + alpha2 * s * s <= 0.0)
        throw config_error("per-server power non-positive at s=" + format_double(s));
    }
  }
};

struct ThermalConfig {
  double c_th = 120.0;      // MWh/degC
  double r_th = 0.2;        // degC/MW
  double t_min = 18.0;      // degC
  double t_max = 26.0;      // degC
  double q_cool_max = 250.0;  // MW thermal
  double eir_nom = 1.0 / 4.05;
  double t_in_init = 26.0;  // degC, defaults to the top of the band
  // Ambient range over which the EIR polynomial is considered calibrated.
  double eir_warn_lo = -10.0;
  double eir_warn_hi = 45.0;

  void validate() const {
    if (c_th <= 0.0 || r_th <= 0.0) throw config_error("thermal capacitance/resistance must be positive");
    if (!(t_min < t_max)) throw config_error("t_min must be below t_max");
    if (q_cool_max <= 0.0) throw config_error("q_cool_max must be positive");
    if (eir_nom <= 0.0) throw config_error("eir_nom must be positive");
    if (t_in_init < t_min - kBoundTol || t_in_init > t_max + kBoundTol)
      throw config_error("t_in_init outside comfort band");
  }
};

struct BessConfig {
  double p_max = 400.0;   // MW, symmetric rating
  double eta_ch = 0.95;
  double eta_dis = 0.95;
  double e_min = 40.0;    // MWh
  double e_max = 400.0;   // MWh
  double e_init = 200.0;  // MWh, also the cyclic terminal target
  double c_deg = 30.0;    // currency per MWh cycled

  void validate() const {
    if (p_max < 0.0) throw config_error("bess p_max must be nonnegative");
    if (!(eta_ch > 0.0 && eta_ch <= 1.0 && eta_dis > 0.0 && eta_dis <= 1.0))
      throw config_error("bess efficiencies must lie in (0,1]");
    if (!(e_min <= e_init && e_init <= e_max) || e_min < 0.0)
      throw config_error("bess energy bounds must satisfy 0 <= e_min <= e_init <= e_max");
    if (c_deg < 0.0) throw config_error("c_deg must be nonnegative");
  }
};

/// Exogenous shutdown-permission schedule: delta(t) = 1 marks a slot in
/// which the cluster may transition from active to off.
struct CheckpointPattern {
  std::vector<int> delta;  // 1-based semantics via at()

  static CheckpointPattern periodic(int period, int horizon) {
    if (period < 1) throw config_error("checkpoint period must be >= 1");
    CheckpointPattern p;
    p.delta.resize(horizon);
    for (int t = 1; t <= horizon; ++t) p.delta[t - 1] = (t % period == 0) ? 1 : 0;
    return p;
  }

  int at(int t) const {  // t in 1..T
    if (t < 1 || t > static_cast<int>(delta.size()))
      throw std::out_of_range("checkpoint slot out of range");
    return delta[t - 1];
  }
  int horizon() const { return static_cast<int>(delta.size()); }

  void validate() const {
    for (int d : delta)
      if (d != 0 && d != 1) throw config_error("checkpoint entries must be 0/1");
  }
};

/// One slot's decision set {mu, s, Q_cool, P_ch, P_dis, beta}.
struct OperatingPoint {
  int mu = 0;
  double s = 0.0;
  double q_cool = 0.0;  // MW thermal extracted
  double p_ch = 0.0;    // MW electrical, >= 0
  double p_dis = 0.0;   // MW electrical, >= 0
  int beta = 0;         // 1 while charging is enabled
};

struct SystemState {
  double t_in = 26.0;        // degC
  double e_bess = 200.0;     // MWh
  int mu_prev = 0;
  double r_remaining = 0.0;  // committed workload still owed, units
};

// ---------------------------------------------------------------------------
// Computing cluster

namespace detail {
inline void check_throughput_domain(double s, int mu, const ComputeConfig& cfg) {
  if (mu != 0 && mu != 1) throw std::domain_error("mu must be 0 or 1");
  if (mu == 0) {
    if (std::abs(s) > kBoundTol) throw std::domain_error("s must be 0 when the cluster is off");
  } else if (s < cfg.s_min - kBoundTol || s > 1.0 + kBoundTol) {
    // The quadratic is a local surrogate; never extrapolate outside it.
    throw std::domain_error("s=" + format_double(s) + " outside [s_min, 1]");
  }
}
}  // namespace detail

/// Per-server electrical power on the calibrated quadratic, watts.
inline double it_power_per_server_w(double s, const ComputeConfig& cfg) {
  return cfg.alpha0 + cfg.alpha1 * s + cfg.alpha2 * s * s;
}

/// Aggregate IT power from the quadratic calibration curve, MW.
inline double it_power(double s, int mu, const ComputeConfig& cfg) {
  detail::check_throughput_domain(s, mu, cfg);
  if (mu == 0) return 0.0;
  return static_cast<double>(cfg.n_server) * it_power_per_server_w(s, cfg) * 1e-6;
}

/// Throughput grid for the piecewise-linear power curve, s_min..1 inclusive.
inline std::vector<double> pwl_throughput_grid(const ComputeConfig& cfg) {
  const int k = cfg.pwl_breakpoints;
  std::vector<double> grid(k);
  for (int i = 0; i < k; ++i)
    grid[i] = cfg.s_min + (1.0 - cfg.s_min) * static_cast<double>(i) / (k - 1);
  grid.back() = 1.0;
  return grid;
}

/// Aggregate IT power from the piecewise-linear scheduling model, MW.
/// This is the curve the planner, dispatcher and validator all share.
inline double it_power_pwl(double s, int mu, const ComputeConfig& cfg) {
  detail::check_throughput_domain(s, mu, cfg);
  if (mu == 0) return 0.0;
  const auto grid = pwl_throughput_grid(cfg);
  const double sc = std::clamp(s, grid.front(), grid.back());
  auto hi = std::upper_bound(grid.begin(), grid.end(), sc);
  std::size_t i1 = std::min<std::size_t>(grid.size() - 1, static_cast<std::size_t>(hi - grid.begin()));
  std::size_t i0 = i1 - (i1 > 0 ? 1 : 0);
  if (i0 == i1) return static_cast<double>(cfg.n_server) * it_power_per_server_w(grid[i0], cfg) * 1e-6;
  const double w = (sc - grid[i0]) / (grid[i1] - grid[i0]);
  const double per_server =
      (1.0 - w) * it_power_per_server_w(grid[i0], cfg) + w * it_power_per_server_w(grid[i1], cfg);
  return static_cast<double>(cfg.n_server) * per_server * 1e-6;
}

/// Instantaneous workload processing rate, units/s.
inline double workload_rate(double s, int mu, const ComputeConfig& cfg) {
  detail::check_throughput_domain(s, mu, cfg);
  return static_cast<double>(cfg.n_server) * cfg.r_peak * s * mu;
}

/// Workload units processed by one slot at throughput s.
inline double slot_workload_units(double s, const ComputeConfig& cfg, double dt_h) {
  return static_cast<double>(cfg.n_server) * cfg.r_peak * s * dt_h * 3600.0;
}

/// Throughput maximizing workload per unit electrical power:
/// the stationary point sqrt(alpha0/alpha2) clamped into [s_min, 1].
inline double efficient_throughput(const ComputeConfig& cfg) {
  if (cfg.alpha0 <= 0.0 || cfg.alpha2 <= 0.0)
    throw std::domain_error("efficient_throughput needs alpha0, alpha2 > 0");
  return std::clamp(std::sqrt(cfg.alpha0 / cfg.alpha2), cfg.s_min, 1.0);
}

// ---------------------------------------------------------------------------
// Thermal and cooling

/// Normalized ambient correction of the cooling energy input ratio.
/// Quadratic in Fahrenheit; applied as-is at any temperature.
inline double eir_phi(double t_amb_c) {
  const double f = 1.8 * t_amb_c + 32.0;
  return -0.000006 * f * f + 0.004941 * f + 0.58462;
}

inline double eir(double t_amb_c, const ThermalConfig& cfg) {
  return cfg.eir_nom * eir_phi(t_amb_c);
}

/// True when the ambient lies outside the calibrated range of the
/// correction polynomial; callers may warn but evaluation proceeds.
inline bool eir_extrapolated(double t_amb_c, const ThermalConfig& cfg) {
  return t_amb_c < cfg.eir_warn_lo || t_amb_c > cfg.eir_warn_hi;
}

/// Electrical power drawn to extract q_cool MW of heat, MW.
inline double cooling_power(double q_cool, double t_amb_c, const ThermalConfig& cfg) {
  if (q_cool < -kBoundTol || q_cool > cfg.q_cool_max + kBoundTol)
    throw std::domain_error("q_cool outside [0, q_cool_max]");
  return eir(t_amb_c, cfg) * q_cool;
}

/// One step of the first-order RC indoor-temperature model, degC.
inline double thermal_step(double t_in, double t_amb, double p_it_mw, double q_cool,
                           const ThermalConfig& cfg, double dt_h) {
  if (dt_h <= 0.0) throw std::domain_error("dt must be positive");
  return t_in + (dt_h / cfg.c_th) * (p_it_mw - (t_in - t_amb) / cfg.r_th - q_cool);
}

// ---------------------------------------------------------------------------
// Battery

/// State-of-charge update, MWh. Rejects simultaneous charge and discharge.
inline double bess_step(double e, double p_ch, double p_dis, const BessConfig& cfg, double dt_h) {
  if (p_ch < -kBoundTol || p_dis < -kBoundTol)
    throw std::invalid_argument("charge/discharge power must be nonnegative");
  if (p_ch > kBoundTol && p_dis > kBoundTol)
    throw std::invalid_argument("simultaneous charge and discharge");
  return e + (p_ch * cfg.eta_ch - p_dis / cfg.eta_dis) * dt_h;
}

// ---------------------------------------------------------------------------
// PCC exchange

/// Net exchange at the point of common coupling, MW; positive = import.
/// IT power enters through the piecewise-linear scheduling curve.
inline double pcc_exchange(const OperatingPoint& pt, double t_amb_c, const ComputeConfig& compute,
                           const ThermalConfig& thermal) {
  const double p_it = it_power_pwl(pt.s, pt.mu, compute);
  return p_it / compute.eta_ipcs + cooling_power(pt.q_cool, t_amb_c, thermal) + pt.p_ch - pt.p_dis;
}

// ---------------------------------------------------------------------------
// Trajectory validation

struct Violation {
  int slot = 0;  // 1-based; 0 for horizon-level checks
  std::string constraint;
  double residual = 0.0;
};

struct ViolationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  std::string summary() const {
    std::string s;
    for (const auto& v : violations) {
      s += "slot " + std::to_string(v.slot) + ": " + v.constraint +
           " residual=" + format_double(v.residual) + "\n";
    }
    return s;
  }
};

/// Per-slot admissible exchange envelope plus the ramp limit. Kept here so
/// the validator does not depend on the network module; the grid code
/// produces it.
struct PccLimitSeries {
  std::vector<double> p_lo;        // MW
  std::vector<double> p_hi;        // MW
  std::vector<std::uint8_t> collapsed;  // raw interval was empty, clamped to [0,0]
  double r_grid = 150.0;           // MW per slot
  double import_cap = 1000.0;      // MW
  double export_floor = -1000.0;   // MW

  int horizon() const { return static_cast<int>(p_lo.size()); }
  void validate() const {
    if (p_lo.size() != p_hi.size() || (collapsed.size() != p_lo.size() && !collapsed.empty()))
      throw config_error("limit series length mismatch");
    for (std::size_t t = 0; t < p_lo.size(); ++t)
      if (p_lo[t] > p_hi[t] + kBoundTol)
        throw config_error("p_lo > p_hi at slot " + std::to_string(t + 1));
  }
};

struct ValidationContext {
  ComputeConfig compute;
  ThermalConfig thermal;
  BessConfig bess;
  std::vector<double> t_amb;  // degC, one per slot
  double dt_h = 0.25;
  double tol = kBoundTol;
  double p_exc_initial = 0.0;  // exchange anchor before slot 1 (idle start)
};

/// Checks throughput coupling, checkpoint continuity, the comfort band,
/// battery power/energy bounds with cyclic terminal SoC, the PCC envelope
/// and the ramp rule. `states` holds T+1 entries (initial state plus the
/// state after each slot); `points` holds T.
inline ViolationReport validate_trajectory(const std::vector<SystemState>& states,
                                           const std::vector<OperatingPoint>& points,
                                           const PccLimitSeries& limits,
                                           const CheckpointPattern& ckpt,
                                           const ValidationContext& ctx) {
  const int horizon = static_cast<int>(points.size());
  if (static_cast<int>(states.size()) != horizon + 1)
    throw std::invalid_argument("states must hold horizon+1 entries");
  if (limits.horizon() != horizon || ckpt.horizon() < horizon ||
      static_cast<int>(ctx.t_amb.size()) < horizon)
    throw std::invalid_argument("series length mismatch over the horizon");

  ViolationReport report;
  const double tol = ctx.tol;
  auto flag = [&](int slot, const char* name, double residual) {
    if (residual > tol) report.violations.push_back({slot, name, residual});
  };

  double prev_exc = ctx.p_exc_initial;
  int mu_prev = states.front().mu_prev;
  for (int t = 1; t <= horizon; ++t) {
    const auto& pt = points[t - 1];
    // Eq. (2) coupling between activation and throughput.
    flag(t, "throughput-coupling", ctx.compute.s_min * pt.mu - pt.s);
    flag(t, "throughput-coupling", pt.s - static_cast<double>(pt.mu));
    // Eq. (5) no shutdown outside checkpoint slots.
    flag(t, "checkpoint-continuity", static_cast<double>(mu_prev - ckpt.at(t) - pt.mu));
    // Cooling capacity.
    flag(t, "cooling-bound", -pt.q_cool);
    flag(t, "cooling-bound", pt.q_cool - ctx.thermal.q_cool_max);
    // Eqs. (14)-(15) exclusive charge/discharge windows.
    flag(t, "charge-bound", -pt.p_ch);
    flag(t, "charge-bound", pt.p_ch - pt.beta * ctx.bess.p_max);
    flag(t, "discharge-bound", -pt.p_dis);
    flag(t, "discharge-bound", pt.p_dis - (1 - pt.beta) * ctx.bess.p_max);
    // Eq. (11) comfort band on the post-slot state.
    flag(t, "temperature-band", ctx.thermal.t_min - states[t].t_in);
    flag(t, "temperature-band", states[t].t_in - ctx.thermal.t_max);
    // Eq. (16) SoC bounds.
    flag(t, "soc-bound", ctx.bess.e_min - states[t].e_bess);
    flag(t, "soc-bound", states[t].e_bess - ctx.bess.e_max);
    // Eq. (19) PCC envelope and the ramp rule.
    const double exc = pcc_exchange(pt, ctx.t_amb[t - 1], ctx.compute, ctx.thermal);
    flag(t, "pcc-amplitude", limits.p_lo[t - 1] - exc);
    flag(t, "pcc-amplitude", exc - limits.p_hi[t - 1]);
    flag(t, "pcc-ramp", std::abs(exc - prev_exc) - limits.r_grid);
    prev_exc = exc;
    mu_prev = pt.mu;
  }
  // Initial-state bounds.
  flag(0, "temperature-band", ctx.thermal.t_min - states.front().t_in);
  flag(0, "temperature-band", states.front().t_in - ctx.thermal.t_max);
  flag(0, "soc-bound", ctx.bess.e_min - states.front().e_bess);
  flag(0, "soc-bound", states.front().e_bess - ctx.bess.e_max);
  // Eq. (17) cyclic terminal SoC.
  flag(0, "soc-terminal", std::abs(states.back().e_bess - states.front().e_bess));
  return report;
}

}  // namespace aidc
