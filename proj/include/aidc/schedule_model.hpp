#pragma once

// MILP encoding of the facility over a window of day slots. State variables
// (indoor temperature, SoC, PCC exchange) are eliminated: each is kept as an
// affine expression of the decision variables, so the emitted model carries
// exactly the per-slot decision set {mu, beta, lambda_k, q_cool, p_ch,
// p_dis} plus optional deviation / under-delivery columns. IT power enters
// through lambda weights over the piecewise-linear curve; with the default
// convex mode the weights are free and the solution is verified to sit on
// the interpolant, while exact mode adds segment-adjacency binaries.
//
// Variable names are 8-character MPS-safe: M<ss>_<tttt> (mu), B.. (beta),
// Q.. (q_cool), C.. (charge), D.. (discharge), P../N.. (deviation split),
// S.. (shed), L<k><ss><tttt> (pwl weight), Y<k><ss><tttt> (adjacency),
// where <ss> tags the scenario block and <tttt> the absolute day slot.

#include <cmath>
#include <string>
#include <vector>

#include "aidc/milp/model.hpp"
#include "aidc/model.hpp"

namespace aidc::sched {

struct LinExpr {
  std::vector<std::pair<int, double>> terms;
  double constant = 0.0;

  void add(int var, double coeff) {
    if (coeff != 0.0) terms.push_back({var, coeff});
  }
  void scale(double f) {
    for (auto& [v, c] : terms) c *= f;
    constant *= f;
  }
};

struct SlotVars {
  int mu = -1, beta = -1, q_cool = -1, p_ch = -1, p_dis = -1;
  int lam0 = -1;   // K consecutive indices
  int dev_p = -1, dev_m = -1;
  int shed = -1;
  int adj0 = -1;   // K-1 consecutive indices in exact mode
};

struct WindowSpec {
  int t_begin = 1;       // 1-based absolute day slot, inclusive
  int t_end = 1;
  int day_horizon = 96;  // T
  double dt_h = 0.25;

  // Boundary state entering the window.
  double t_in_init = 26.0;
  double e_init_mwh = 200.0;
  int mu_prev = 0;
  double p_exc_prev = 0.0;  // exchange anchor for the first ramp row

  // Cyclic SoC target, enforced when the window reaches the day end.
  bool cyclic_soc = true;
  double e_cycle_target = 200.0;

  bool include_deviation = false;  // |s - s*| split columns (day-ahead)
  bool include_shed = false;       // under-delivery slack columns (real time)
  bool exact_pwl = false;          // adjacency binaries on every slot
  std::vector<int> exact_slots;    // or only on these absolute slots
  int scenario_tag = 0;            // name namespace for joint models

  bool slot_exact(int t) const {
    if (exact_pwl) return true;
    for (int e : exact_slots)
      if (e == t) return true;
    return false;
  }
};

struct WindowModel {
  milp::MilpModel model;
  std::vector<SlotVars> slots;     // window-local index 0 = t_begin
  std::vector<LinExpr> s_expr;     // throughput per slot
  std::vector<LinExpr> pexc_expr;  // PCC exchange per slot, MW
  std::vector<double> pwl_s;       // breakpoint grid
  std::vector<double> pwl_p_mw;    // aggregate MW at each breakpoint
  int window_len = 0;
};

namespace detail {

inline std::string slot_name(char prefix, int tag, int t) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%c%02d_%04d", prefix, tag, t);
  return buf;
}

inline std::string pwl_name(char prefix, int k, int tag, int t) {
  static const char digits[] = "0123456789abcdefghijklmnopqrstuvwxyz";
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%c%c%02d%04d", prefix, digits[k], tag, t);
  return buf;
}

inline std::string row_name(const char* prefix, int tag, int t) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%s%02d%04d", prefix, tag, t);
  return buf;
}

}  // namespace detail

/// Emits every physical row of the window into `wm.model`. The caller owns
/// the objective and any workload-accounting rows on top.
inline void emit_window(WindowModel& wm, const WindowSpec& spec, const ComputeConfig& compute,
                        const ThermalConfig& thermal, const BessConfig& bess,
                        const CheckpointPattern& ckpt, const PccLimitSeries& limits,
                        const std::vector<double>& t_amb) {
  using milp::Relation;
  compute.validate();
  thermal.validate();
  bess.validate();
  if (spec.t_begin < 1 || spec.t_end > spec.day_horizon || spec.t_begin > spec.t_end)
    throw config_error("window outside the day horizon");
  if (limits.horizon() < spec.t_end || static_cast<int>(t_amb.size()) < spec.t_end ||
      ckpt.horizon() < spec.t_end)
    throw config_error("series shorter than the window");
  const int K = compute.pwl_breakpoints;
  if (K > 36) throw config_error("pwl_breakpoints beyond the name space (36)");

  auto& m = wm.model;
  const int tag = spec.scenario_tag;
  const double dt = spec.dt_h;
  const double eta = compute.eta_ipcs;
  const double a_th = 1.0 - dt / (thermal.c_th * thermal.r_th);
  const double heat = dt / thermal.c_th;
  const double amb = dt / (thermal.c_th * thermal.r_th);

  wm.pwl_s = pwl_throughput_grid(compute);
  wm.pwl_p_mw.clear();
  for (double s : wm.pwl_s)
    wm.pwl_p_mw.push_back(static_cast<double>(compute.n_server) * it_power_per_server_w(s, compute) *
                          1e-6);

  LinExpr t_expr;  // indoor temperature after the current slot
  t_expr.constant = spec.t_in_init;
  LinExpr e_expr;  // SoC after the current slot
  e_expr.constant = spec.e_init_mwh;
  LinExpr prev_exc;
  prev_exc.constant = spec.p_exc_prev;
  int prev_mu = -1;  // variable id; -1 means use spec.mu_prev

  wm.window_len = spec.t_end - spec.t_begin + 1;
  for (int t = spec.t_begin; t <= spec.t_end; ++t) {
    SlotVars sv;
    sv.mu = m.add_binary(detail::slot_name('M', tag, t));
    sv.beta = m.add_binary(detail::slot_name('B', tag, t));
    sv.lam0 = m.n_vars();
    for (int k = 0; k < K; ++k) m.add_var(detail::pwl_name('L', k, tag, t), 0.0, 1.0);
    sv.q_cool = m.add_var(detail::slot_name('Q', tag, t), 0.0, thermal.q_cool_max);
    sv.p_ch = m.add_var(detail::slot_name('C', tag, t), 0.0, bess.p_max);
    sv.p_dis = m.add_var(detail::slot_name('D', tag, t), 0.0, bess.p_max);
    if (spec.include_deviation) {
      sv.dev_p = m.add_var(detail::slot_name('P', tag, t), 0.0, milp::kInf);
      sv.dev_m = m.add_var(detail::slot_name('N', tag, t), 0.0, milp::kInf);
    }
    if (spec.include_shed)
      sv.shed = m.add_var(detail::slot_name('S', tag, t), 0.0, milp::kInf);
    const bool exact_here = spec.slot_exact(t);
    if (exact_here) {
      sv.adj0 = m.n_vars();
      for (int k = 0; k + 1 < K; ++k) m.add_binary(detail::pwl_name('Y', k, tag, t));
    }

    // Convexity row: the weights sum to the activation flag, which also
    // realizes s_min*mu <= s <= mu since the grid spans [s_min, 1].
    {
      std::vector<std::pair<int, double>> c;
      for (int k = 0; k < K; ++k) c.push_back({sv.lam0 + k, 1.0});
      c.push_back({sv.mu, -1.0});
      m.add_con(detail::row_name("cv", tag, t), std::move(c), Relation::eq, 0.0);
    }
    // Checkpoint continuity: mu(t) >= mu(t-1) - delta(t).
    if (prev_mu >= 0) {
      m.add_con(detail::row_name("ck", tag, t), {{sv.mu, 1.0}, {prev_mu, -1.0}}, Relation::ge,
                -static_cast<double>(ckpt.at(t)));
    } else if (spec.mu_prev - ckpt.at(t) > 0) {
      m.add_con(detail::row_name("ck", tag, t), {{sv.mu, 1.0}}, Relation::ge,
                static_cast<double>(spec.mu_prev - ckpt.at(t)));
    }
    // Exclusive charge/discharge windows.
    m.add_con(detail::row_name("ch", tag, t), {{sv.p_ch, 1.0}, {sv.beta, -bess.p_max}},
              Relation::le, 0.0);
    m.add_con(detail::row_name("dc", tag, t), {{sv.p_dis, 1.0}, {sv.beta, bess.p_max}},
              Relation::le, bess.p_max);
    // Segment adjacency in exact mode.
    if (exact_here) {
      std::vector<std::pair<int, double>> ys;
      for (int k = 0; k + 1 < K; ++k) ys.push_back({sv.adj0 + k, 1.0});
      ys.push_back({sv.mu, -1.0});
      m.add_con(detail::row_name("ys", tag, t), std::move(ys), Relation::eq, 0.0);
      for (int k = 0; k < K; ++k) {
        std::vector<std::pair<int, double>> row{{sv.lam0 + k, 1.0}};
        if (k > 0) row.push_back({sv.adj0 + k - 1, -1.0});
        if (k + 1 < K) row.push_back({sv.adj0 + k, -1.0});
        m.add_con(detail::pwl_name('a', k, tag, t), std::move(row), Relation::le, 0.0);
      }
    }

    // Slot expressions.
    LinExpr s_e, pit_e;
    for (int k = 0; k < K; ++k) {
      s_e.add(sv.lam0 + k, wm.pwl_s[k]);
      pit_e.add(sv.lam0 + k, wm.pwl_p_mw[k]);
    }
    const double eir_t = eir(t_amb[t - 1], thermal);
    LinExpr exc;
    for (const auto& [v, c] : pit_e.terms) exc.add(v, c / eta);
    exc.add(sv.q_cool, eir_t);
    exc.add(sv.p_ch, 1.0);
    exc.add(sv.p_dis, -1.0);

    // Deviation split: dev_p - dev_m = s - s*.
    if (spec.include_deviation) {
      std::vector<std::pair<int, double>> c{{sv.dev_p, 1.0}, {sv.dev_m, -1.0}};
      for (const auto& [v, coef] : s_e.terms) c.push_back({v, -coef});
      m.add_con(detail::row_name("dv", tag, t), std::move(c), Relation::eq,
                -efficient_throughput(compute));
    }

    // PCC amplitude.
    if (std::isfinite(limits.p_hi[t - 1])) {
      std::vector<std::pair<int, double>> hi(exc.terms.begin(), exc.terms.end());
      m.add_con(detail::row_name("ph", tag, t), std::move(hi), Relation::le,
                limits.p_hi[t - 1] - exc.constant);
    }
    if (std::isfinite(limits.p_lo[t - 1])) {
      std::vector<std::pair<int, double>> lo(exc.terms.begin(), exc.terms.end());
      m.add_con(detail::row_name("pl", tag, t), std::move(lo), Relation::ge,
                limits.p_lo[t - 1] - exc.constant);
    }
    // Ramp against the previous slot's exchange (expression or anchor).
    if (std::isfinite(limits.r_grid)) {
      std::vector<std::pair<int, double>> up(exc.terms.begin(), exc.terms.end());
      for (const auto& [v, c] : prev_exc.terms) up.push_back({v, -c});
      m.add_con(detail::row_name("ru", tag, t), std::move(up), Relation::le,
                limits.r_grid + prev_exc.constant - exc.constant);
      std::vector<std::pair<int, double>> dn;
      for (const auto& [v, c] : exc.terms) dn.push_back({v, -c});
      for (const auto& [v, c] : prev_exc.terms) dn.push_back({v, c});
      m.add_con(detail::row_name("rd", tag, t), std::move(dn), Relation::le,
                limits.r_grid - prev_exc.constant + exc.constant);
    }

    // Thermal state advance and band.
    t_expr.scale(a_th);
    t_expr.constant += amb * t_amb[t - 1];
    for (const auto& [v, c] : pit_e.terms) t_expr.add(v, c * heat);
    t_expr.add(sv.q_cool, -heat);
    {
      std::vector<std::pair<int, double>> hi(t_expr.terms.begin(), t_expr.terms.end());
      m.add_con(detail::row_name("th", tag, t), std::move(hi), Relation::le,
                thermal.t_max - t_expr.constant);
      std::vector<std::pair<int, double>> lo(t_expr.terms.begin(), t_expr.terms.end());
      m.add_con(detail::row_name("tl", tag, t), std::move(lo), Relation::ge,
                thermal.t_min - t_expr.constant);
    }
    // SoC advance and bounds.
    e_expr.add(sv.p_ch, dt * bess.eta_ch);
    e_expr.add(sv.p_dis, -dt / bess.eta_dis);
    {
      std::vector<std::pair<int, double>> hi(e_expr.terms.begin(), e_expr.terms.end());
      m.add_con(detail::row_name("eh", tag, t), std::move(hi), Relation::le,
                bess.e_max - e_expr.constant);
      std::vector<std::pair<int, double>> lo(e_expr.terms.begin(), e_expr.terms.end());
      m.add_con(detail::row_name("el", tag, t), std::move(lo), Relation::ge,
                bess.e_min - e_expr.constant);
    }

    prev_exc = exc;
    prev_mu = sv.mu;
    wm.slots.push_back(sv);
    wm.s_expr.push_back(std::move(s_e));
    wm.pexc_expr.push_back(std::move(exc));
  }

  // Cyclic terminal SoC when the window reaches the end of the day.
  if (spec.cyclic_soc && spec.t_end == spec.day_horizon) {
    std::vector<std::pair<int, double>> c(e_expr.terms.begin(), e_expr.terms.end());
    m.add_con(detail::row_name("ec", tag, spec.t_end), std::move(c), Relation::eq,
              spec.e_cycle_target - e_expr.constant);
  }
}

/// Workload units represented by one throughput-slot (s = 1 for one slot).
inline double slot_unit_scale(const ComputeConfig& compute, double dt_h) {
  return static_cast<double>(compute.n_server) * compute.r_peak * dt_h * 3600.0;
}

/// Pulls the slot decisions out of a solved model, snapping binaries and
/// clamping solver noise off the bounds.
inline std::vector<OperatingPoint> extract_points(const WindowModel& wm,
                                                  const std::vector<double>& x) {
  std::vector<OperatingPoint> pts;
  const int K = static_cast<int>(wm.pwl_s.size());
  for (const auto& sv : wm.slots) {
    OperatingPoint pt;
    pt.mu = x[sv.mu] > 0.5 ? 1 : 0;
    pt.beta = x[sv.beta] > 0.5 ? 1 : 0;
    double s = 0.0;
    for (int k = 0; k < K; ++k) s += x[sv.lam0 + k] * wm.pwl_s[k];
    pt.s = pt.mu ? std::clamp(s, wm.pwl_s.front(), wm.pwl_s.back()) : 0.0;
    pt.q_cool = std::clamp(x[sv.q_cool], 0.0, milp::kInf);
    pt.p_ch = std::max(x[sv.p_ch], 0.0);
    pt.p_dis = std::max(x[sv.p_dis], 0.0);
    if (pt.p_ch < 1e-9) pt.p_ch = 0.0;
    if (pt.p_dis < 1e-9) pt.p_dis = 0.0;
    if (pt.beta == 0) pt.p_ch = 0.0;  // exclusivity: row keeps these below feas_tol anyway
    if (pt.beta == 1) pt.p_dis = 0.0;
    pts.push_back(pt);
  }
  return pts;
}

/// Window-local indices of active slots whose (s, P_IT) pair sits off the
/// piecewise interpolant, i.e. where the free lambda weights exploited the
/// hull interior. Empty means the convex-mode solution is exact.
inline std::vector<int> off_envelope_slots(const WindowModel& wm, const std::vector<double>& x,
                                           const ComputeConfig& compute, double tol = 1e-6) {
  std::vector<int> off;
  const int K = static_cast<int>(wm.pwl_s.size());
  for (std::size_t i = 0; i < wm.slots.size(); ++i) {
    const auto& sv = wm.slots[i];
    if (x[sv.mu] < 0.5) continue;
    double s = 0.0, p = 0.0;
    for (int k = 0; k < K; ++k) {
      s += x[sv.lam0 + k] * wm.pwl_s[k];
      p += x[sv.lam0 + k] * wm.pwl_p_mw[k];
    }
    s = std::clamp(s, wm.pwl_s.front(), wm.pwl_s.back());
    const double interp = it_power_pwl(s, 1, compute);
    if (std::abs(p - interp) > tol * std::max(1.0, std::abs(interp)))
      off.push_back(static_cast<int>(i));
  }
  return off;
}

inline bool pwl_on_interpolant(const WindowModel& wm, const std::vector<double>& x,
                               const ComputeConfig& compute, double tol = 1e-6) {
  return off_envelope_slots(wm, x, compute, tol).empty();
}

}  // namespace aidc::sched
