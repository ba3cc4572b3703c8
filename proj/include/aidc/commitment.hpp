#pragma once

// Day-ahead workload commitment over the retained scenario set. The default
// decomposed-lexicographic mode maximizes deliverable workload per scenario,
// takes the minimum as the commitment, then re-solves each scenario for the
// schedule closest to the efficiency anchor s*. The joint mode builds the
// single coupled MILP (shared commitment scalar, per-scenario blocks,
// deviation weight lambda) and exists as a small-instance oracle.
//
// Workload is normalized inside the models: one unit equals one slot at
// full throughput, i.e. n_server * r_peak * dt * 3600 workload units.

#include <filesystem>
#include <future>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "aidc/milp/branch_bound.hpp"
#include "aidc/model.hpp"
#include "aidc/scenario.hpp"
#include "aidc/schedule_model.hpp"

namespace aidc::plan {

enum class CommitMode { decomposed_lexicographic, joint };
enum class PwlPolicy { convex_verify, exact };
enum class ScenarioObjective { max_workload, min_deviation_given_w };

struct CommitmentProblem {
  std::vector<scenario::LimitScenario> scenarios;  // retained set, non-empty
  ComputeConfig compute;
  ThermalConfig thermal;
  BessConfig bess;
  CheckpointPattern ckpt;
  std::vector<double> t_amb;
  double dt_h = 0.25;
  double lambda_dev = 0.0;  // joint-mode deviation weight
  CommitMode mode = CommitMode::decomposed_lexicographic;
  PwlPolicy pwl = PwlPolicy::convex_verify;
  milp::SolverOptions solver;
  int threads = 0;  // 0 = hardware concurrency

  int horizon() const {
    return scenarios.empty() ? 0 : scenarios.front().limits.horizon();
  }
  void validate() const {
    if (scenarios.empty()) throw config_error("commitment needs at least one scenario");
    const int T = horizon();
    for (const auto& sc : scenarios)
      if (sc.limits.horizon() != T) throw config_error("scenario horizons differ");
    if (static_cast<int>(t_amb.size()) < T || ckpt.horizon() < T)
      throw config_error("ambient or checkpoint series shorter than the horizon");
    compute.validate();
    thermal.validate();
    bess.validate();
  }
};

struct ScenarioSchedule {
  int scenario_index = -1;
  std::vector<OperatingPoint> points;
  std::vector<SystemState> states;  // T+1 entries
  double delivered_units = 0.0;
  double max_deliverable_units = 0.0;
  double deviation_sum = 0.0;  // sum_t |s - s*|
  long nodes = 0;
  long lp_iterations = 0;
  bool exact_fallback = false;
};

struct CommitmentResult {
  double w_da_units = 0.0;
  int binding_scenario = -1;
  std::string mode;
  std::vector<ScenarioSchedule> schedules;
  double anchor_s = 0.0;
  double unit_scale = 0.0;  // workload units per throughput-slot
};

namespace detail {

struct BuiltScenario {
  sched::WindowModel wm;
  int w_var = -1;
};

inline sched::WindowSpec day_spec(const CommitmentProblem& p, bool exact, int tag) {
  sched::WindowSpec spec;
  spec.t_begin = 1;
  spec.t_end = p.horizon();
  spec.day_horizon = p.horizon();
  spec.dt_h = p.dt_h;
  spec.t_in_init = p.thermal.t_in_init;
  spec.e_init_mwh = p.bess.e_init;
  spec.mu_prev = 0;
  spec.p_exc_prev = 0.0;
  spec.cyclic_soc = true;
  spec.e_cycle_target = p.bess.e_init;
  spec.include_deviation = true;
  spec.include_shed = false;
  spec.exact_pwl = exact;
  spec.scenario_tag = tag;
  return spec;
}

inline BuiltScenario build_block(const CommitmentProblem& p, const scenario::LimitScenario& sc,
                                 const sched::WindowSpec& spec) {
  BuiltScenario b;
  sched::emit_window(b.wm, spec, p.compute, p.thermal, p.bess, p.ckpt, sc.limits, p.t_amb);
  // Committed workload in throughput-slot units plus the deliverability row.
  b.w_var = b.wm.model.add_var("WDA", 0.0, static_cast<double>(p.horizon()),
                               milp::VarType::continuous);
  std::vector<std::pair<int, double>> dlv{{b.w_var, -1.0}};
  for (const auto& s_e : b.wm.s_expr)
    for (const auto& [v, c] : s_e.terms) dlv.push_back({v, c});
  b.wm.model.add_con(sched::detail::row_name("dl", spec.scenario_tag, 0), std::move(dlv),
                     milp::Relation::ge, 0.0);
  return b;
}

// Tie-break weight pinning IT power onto the lower piecewise envelope and
// quieting idle battery churn. Small enough to leave the workload optimum
// untouched at the solver tolerances, large enough that the convex-mode
// weights land on the interpolant instead of inside the hull.
inline constexpr double kEnvelopeEps = 1e-9;

inline void add_envelope_tiebreak(BuiltScenario& b, double sign) {
  auto& m = b.wm.model;
  const int K = static_cast<int>(b.wm.pwl_s.size());
  for (const auto& sv : b.wm.slots) {
    for (int k = 0; k < K; ++k)
      m.objective[sv.lam0 + k] += sign * kEnvelopeEps * b.wm.pwl_p_mw[k];
    m.objective[sv.p_ch] += sign * kEnvelopeEps;
    m.objective[sv.p_dis] += sign * kEnvelopeEps;
  }
}

inline void set_scenario_objective(BuiltScenario& b, ScenarioObjective obj, double w_target) {
  auto& m = b.wm.model;
  for (auto& c : m.objective) c = 0.0;
  if (obj == ScenarioObjective::max_workload) {
    m.sense = milp::Sense::maximize;
    m.set_obj(b.w_var, 1.0);
    m.vars[b.w_var].lb = 0.0;
    add_envelope_tiebreak(b, -1.0);
  } else {
    m.sense = milp::Sense::minimize;
    for (const auto& sv : b.wm.slots) {
      m.set_obj(sv.dev_p, 1.0);
      m.set_obj(sv.dev_m, 1.0);
    }
    m.vars[b.w_var].lb = w_target;  // deliver the commitment
    add_envelope_tiebreak(b, +1.0);
  }
}

struct SolvedScenario {
  milp::Solution sol;
  sched::WindowModel wm;
  int w_var = -1;
  bool exact_fallback = false;
};

/// Convex-then-verify policy: solve with free weights and check the
/// solution sits on the interpolant. When slots land in the hull interior
/// (a binding lower exchange or ramp row can make inflated IT power
/// attractive), adjacency binaries are added on exactly those slots and the
/// model re-solves; slots that stay free but verify clean keep the solution
/// a true optimum, since the partially-exact model is still a relaxation.
inline SolvedScenario solve_scenario(const CommitmentProblem& p,
                                     const scenario::LimitScenario& sc, ScenarioObjective obj,
                                     double w_target, int tag) {
  SolvedScenario out;
  sched::WindowSpec spec = day_spec(p, p.pwl == PwlPolicy::exact, tag);
  for (int round = 0;; ++round) {
    BuiltScenario b = build_block(p, sc, spec);
    set_scenario_objective(b, obj, w_target);
    out.sol = milp::solve_milp(b.wm.model, p.solver);
    std::vector<int> off;
    if (out.sol.status == milp::Status::optimal && !spec.exact_pwl)
      off = sched::off_envelope_slots(b.wm, out.sol.x, p.compute);
    if (off.empty()) {
      out.wm = std::move(b.wm);
      out.w_var = b.w_var;
      return out;
    }
    out.exact_fallback = true;
    if (round >= 4) {
      spec.exact_pwl = true;  // safety net: everything adjacent
    } else {
      for (int i : off) spec.exact_slots.push_back(spec.t_begin + i);
    }
  }
}

inline ScenarioSchedule schedule_from(const CommitmentProblem& p, const SolvedScenario& solved,
                                      int index) {
  ScenarioSchedule sch;
  sch.scenario_index = index;
  sch.nodes = solved.sol.nodes;
  sch.lp_iterations = solved.sol.lp_iterations;
  sch.exact_fallback = solved.exact_fallback;
  sch.points = sched::extract_points(solved.wm, solved.sol.x);
  // Forward-simulate the states the schedule implies.
  SystemState st;
  st.t_in = p.thermal.t_in_init;
  st.e_bess = p.bess.e_init;
  st.mu_prev = 0;
  sch.states.push_back(st);
  const double scale = sched::slot_unit_scale(p.compute, p.dt_h);
  const double s_star = efficient_throughput(p.compute);
  for (std::size_t i = 0; i < sch.points.size(); ++i) {
    const auto& pt = sch.points[i];
    const double p_it = it_power_pwl(pt.s, pt.mu, p.compute);
    SystemState next;
    next.t_in = thermal_step(st.t_in, p.t_amb[i], p_it, pt.q_cool, p.thermal, p.dt_h);
    next.e_bess = bess_step(st.e_bess, pt.p_ch, pt.p_dis, p.bess, p.dt_h);
    next.mu_prev = pt.mu;
    sch.states.push_back(next);
    st = next;
    sch.delivered_units += pt.s * scale;
    sch.deviation_sum += std::abs(pt.s - s_star);  // s = 0 when off, cost s*
  }
  return sch;
}

template <typename Fn>
inline void parallel_for(int n, int threads, Fn&& fn) {
  const int workers = threads > 0 ? threads
                                  : std::max(1u, std::thread::hardware_concurrency());
  if (workers <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::future<void>> pending;
  int next = 0;
  while (next < n) {
    pending.clear();
    const int batch = std::min(workers, n - next);
    for (int b = 0; b < batch; ++b)
      pending.push_back(std::async(std::launch::async, fn, next + b));
    for (auto& f : pending) f.get();
    next += batch;
  }
}

}  // namespace detail

/// Single-scenario day model with the requested objective. `w_target_units`
/// only matters for the min-deviation objective.
inline milp::MilpModel build_scenario_milp(const scenario::LimitScenario& sc,
                                           const CommitmentProblem& p, ScenarioObjective obj,
                                           double w_target_units = 0.0) {
  p.compute.validate();
  detail::BuiltScenario b =
      detail::build_block(p, sc, detail::day_spec(p, p.pwl == PwlPolicy::exact, 0));
  detail::set_scenario_objective(
      b, obj, w_target_units / sched::slot_unit_scale(p.compute, p.dt_h));
  return std::move(b.wm.model);
}

/// Largest workload deliverable under one scenario, in workload units.
inline double max_deliverable(const scenario::LimitScenario& sc, const CommitmentProblem& p) {
  const auto solved = detail::solve_scenario(p, sc, ScenarioObjective::max_workload, 0.0, 0);
  if (solved.sol.status != milp::Status::optimal)
    throw std::runtime_error(std::string("max-deliverable solve ended ") +
                             milp::to_string(solved.sol.status));
  return solved.sol.x[solved.w_var] * sched::slot_unit_scale(p.compute, p.dt_h);
}

/// Stage-I commitment across the retained scenarios.
inline CommitmentResult commit(const CommitmentProblem& p) {
  p.validate();
  const int n = static_cast<int>(p.scenarios.size());
  const double scale = sched::slot_unit_scale(p.compute, p.dt_h);
  CommitmentResult result;
  result.anchor_s = efficient_throughput(p.compute);
  result.unit_scale = scale;

  if (p.mode == CommitMode::joint) {
    // Oracle: one coupled model, shared commitment variable.
    if (n > 99) throw config_error("joint mode supports at most 99 scenarios");
    milp::MilpModel joint;
    std::vector<sched::WindowModel> blocks(n);
    const int w_var = joint.add_var("WDA", 0.0, static_cast<double>(p.horizon()),
                                    milp::VarType::continuous);
    joint.sense = milp::Sense::maximize;
    joint.set_obj(w_var, 1.0);
    for (int w = 0; w < n; ++w) {
      sched::WindowModel wm;
      wm.model = std::move(joint);
      sched::emit_window(wm, detail::day_spec(p, p.pwl == PwlPolicy::exact, w + 1), p.compute,
                         p.thermal, p.bess, p.ckpt, p.scenarios[w].limits, p.t_amb);
      std::vector<std::pair<int, double>> dlv{{w_var, -1.0}};
      for (const auto& s_e : wm.s_expr)
        for (const auto& [v, c] : s_e.terms) dlv.push_back({v, c});
      wm.model.add_con(sched::detail::row_name("dl", w + 1, 0), std::move(dlv),
                       milp::Relation::ge, 0.0);
      for (const auto& sv : wm.slots) {
        wm.model.set_obj(sv.dev_p, -p.lambda_dev);
        wm.model.set_obj(sv.dev_m, -p.lambda_dev);
      }
      joint = std::move(wm.model);
      blocks[w] = std::move(wm);
    }
    const auto sol = milp::solve_milp(joint, p.solver);
    if (sol.status != milp::Status::optimal)
      throw std::runtime_error(std::string("joint commitment solve ended ") +
                               milp::to_string(sol.status));
    result.w_da_units = sol.x[w_var] * scale;
    result.mode = "joint";
    for (int w = 0; w < n; ++w) {
      detail::SolvedScenario solved;
      solved.sol = sol;
      solved.wm = std::move(blocks[w]);
      auto sch = detail::schedule_from(p, solved, w);
      sch.max_deliverable_units = result.w_da_units;
      result.schedules.push_back(std::move(sch));
    }
    double w_min = milp::kInf;
    for (int w = 0; w < n; ++w)
      if (result.schedules[w].delivered_units < w_min) {
        w_min = result.schedules[w].delivered_units;
        result.binding_scenario = w;
      }
    return result;
  }

  // Decomposed-lexicographic (default): per-scenario max deliverable, take
  // the minimum, then per-scenario deviation-minimal schedules at W*.
  std::vector<detail::SolvedScenario> phase1(n);
  std::vector<std::string> errors(n);
  detail::parallel_for(n, p.threads, [&](int w) {
    try {
      phase1[w] = detail::solve_scenario(p, p.scenarios[w], ScenarioObjective::max_workload,
                                         0.0, 0);
      if (phase1[w].sol.status != milp::Status::optimal)
        errors[w] = milp::to_string(phase1[w].sol.status);
    } catch (const std::exception& e) {
      errors[w] = e.what();
    }
  });
  for (int w = 0; w < n; ++w)
    if (!errors[w].empty())
      throw std::runtime_error("scenario " + std::to_string(w) +
                               " max-workload solve failed: " + errors[w]);

  double w_norm = milp::kInf;
  for (int w = 0; w < n; ++w) {
    const double cand = phase1[w].sol.x[phase1[w].w_var];
    if (cand < w_norm - 1e-12) {
      w_norm = cand;
      result.binding_scenario = w;
    }
  }
  result.w_da_units = w_norm * scale;
  result.mode = "decomposed-lexicographic";

  // Phase 2: deviation-minimal schedules delivering the commitment. The
  // target backs off by the solver gap so phase-1 optima stay feasible.
  const double w_target = std::max(0.0, w_norm - std::max(1e-9, 1e-7 * w_norm));
  std::vector<ScenarioSchedule> schedules(n);
  detail::parallel_for(n, p.threads, [&](int w) {
    try {
      auto solved = detail::solve_scenario(p, p.scenarios[w],
                                           ScenarioObjective::min_deviation_given_w, w_target, 0);
      if (solved.sol.status != milp::Status::optimal) {
        errors[w] = milp::to_string(solved.sol.status);
        return;
      }
      schedules[w] = detail::schedule_from(p, solved, w);
      schedules[w].max_deliverable_units = phase1[w].sol.x[phase1[w].w_var] * scale;
    } catch (const std::exception& e) {
      errors[w] = e.what();
    }
  });
  for (int w = 0; w < n; ++w)
    if (!errors[w].empty())
      throw std::runtime_error("scenario " + std::to_string(w) +
                               " deviation solve failed: " + errors[w]);
  result.schedules = std::move(schedules);
  return result;
}

/// Every stored schedule must pass the shared validator against its own
/// scenario; exposed so tests and the harness can assert it.
inline ViolationReport validate_schedules(const CommitmentProblem& p,
                                          const CommitmentResult& r) {
  ViolationReport merged;
  for (const auto& sch : r.schedules) {
    ValidationContext ctx;
    ctx.compute = p.compute;
    ctx.thermal = p.thermal;
    ctx.bess = p.bess;
    ctx.t_amb = p.t_amb;
    ctx.dt_h = p.dt_h;
    const auto rep = validate_trajectory(sch.states, sch.points,
                                         p.scenarios[sch.scenario_index].limits, p.ckpt, ctx);
    for (const auto& v : rep.violations) merged.violations.push_back(v);
  }
  return merged;
}

// ---------------------------------------------------------------------------
// Serialization

inline void save_commitment(const std::string& dir, const CommitmentProblem& p,
                            const CommitmentResult& r) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  nlohmann::json j;
  j["w_da_units"] = r.w_da_units;
  j["binding_scenario"] = r.binding_scenario;
  j["mode"] = r.mode;
  j["anchor_s"] = r.anchor_s;
  j["unit_scale"] = r.unit_scale;
  auto& arr = j["scenarios"];
  arr = nlohmann::json::array();
  for (const auto& sch : r.schedules) {
    nlohmann::json e;
    e["index"] = sch.scenario_index;
    e["delivered_units"] = sch.delivered_units;
    e["max_deliverable_units"] = sch.max_deliverable_units;
    e["deviation_sum"] = sch.deviation_sum;
    e["nodes"] = sch.nodes;
    e["lp_iterations"] = sch.lp_iterations;
    e["exact_fallback"] = sch.exact_fallback;
    e["schedule_csv"] = "schedule_w" + std::to_string(sch.scenario_index) + ".csv";
    arr.push_back(e);

    std::string csv =
        "slot,mu,s,q_cool_mw,p_ch_mw,p_dis_mw,beta,p_exc_mw,t_in_c,e_bess_mwh\n";
    for (std::size_t i = 0; i < sch.points.size(); ++i) {
      const auto& pt = sch.points[i];
      const double exc = pcc_exchange(pt, p.t_amb[i], p.compute, p.thermal);
      csv += std::to_string(i + 1) + "," + std::to_string(pt.mu) + "," + format_double(pt.s) +
             "," + format_double(pt.q_cool) + "," + format_double(pt.p_ch) + "," +
             format_double(pt.p_dis) + "," + std::to_string(pt.beta) + "," +
             format_double(exc) + "," + format_double(sch.states[i + 1].t_in) + "," +
             format_double(sch.states[i + 1].e_bess) + "\n";
    }
    write_text_file((fs::path(dir) / e["schedule_csv"].get<std::string>()).string(), csv);
  }
  write_text_file((fs::path(dir) / "result.json").string(), j.dump(2) + "\n");
}

}  // namespace aidc::plan
