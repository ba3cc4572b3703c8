#pragma once

// Best-first branch and bound over LP relaxations. Branching picks the
// most-fractional binary (ties to the lowest index); the root relaxation is
// rounded once for a starting incumbent. Deterministic by construction:
// node ids order the frontier, and each LP solve is single-threaded.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <queue>
#include <vector>

#include "aidc/milp/model.hpp"
#include "aidc/milp/simplex.hpp"

namespace aidc::milp {

namespace detail {

/// Singleton-row bound tightening; the only presolve step. Returns false
/// when tightening proves the model infeasible.
inline bool presolve_singletons(const MilpModel& m, const SolverOptions& opts,
                                std::vector<double>& lb, std::vector<double>& ub,
                                std::vector<char>& row_active) {
  row_active.assign(m.cons.size(), 1);
  for (std::size_t i = 0; i < m.cons.size(); ++i) {
    const auto& c = m.cons[i];
    if (c.coeffs.size() != 1) continue;
    const auto [j, a] = c.coeffs.front();
    if (a == 0.0) { row_active[i] = 0; continue; }
    const double v = c.rhs / a;
    const bool upper = (c.rel == Relation::le) == (a > 0.0);
    if (c.rel == Relation::eq) {
      lb[j] = std::max(lb[j], v);
      ub[j] = std::min(ub[j], v);
    } else if (upper) {
      ub[j] = std::min(ub[j], v);
    } else {
      lb[j] = std::max(lb[j], v);
    }
    row_active[i] = 0;
  }
  for (int j = 0; j < m.n_vars(); ++j) {
    if (m.vars[j].type == VarType::binary) {
      lb[j] = std::max(lb[j], std::ceil(lb[j] - opts.int_tol));
      ub[j] = std::min(ub[j], std::floor(ub[j] + opts.int_tol));
    }
    if (lb[j] > ub[j] + opts.feas_tol) return false;
  }
  return true;
}

inline MilpModel without_rows(const MilpModel& m, const std::vector<char>& row_active) {
  MilpModel out;
  out.name = m.name;
  out.sense = m.sense;
  out.vars = m.vars;
  out.objective = m.objective;
  out.obj_offset = m.obj_offset;
  for (std::size_t i = 0; i < m.cons.size(); ++i)
    if (row_active[i]) out.cons.push_back(m.cons[i]);
  return out;
}

struct BnbNode {
  double parent_bound;  // internal minimize sense
  long id;
  std::vector<std::pair<int, double>> fixed_lb;  // (var, value) deltas vs root
  std::vector<std::pair<int, double>> fixed_ub;
  std::shared_ptr<const Basis> warm;  // parent's optimal basis
};

struct NodeOrder {
  bool operator()(const BnbNode& a, const BnbNode& b) const {
    if (a.parent_bound != b.parent_bound) return a.parent_bound > b.parent_bound;
    return a.id > b.id;
  }
};

}  // namespace detail

/// Solves the LP relaxation (all integrality dropped).
inline Solution solve_lp(const MilpModel& model, const SolverOptions& opts = {}) {
  model.validate();
  const bool maximize = model.sense == Sense::maximize;
  MilpModel work = model;
  if (maximize)
    for (auto& c : work.objective) c = -c;

  std::vector<double> lb(model.n_vars()), ub(model.n_vars());
  for (int j = 0; j < model.n_vars(); ++j) {
    lb[j] = model.vars[j].lb;
    ub[j] = model.vars[j].ub;
  }
  std::vector<char> row_active(model.cons.size(), 1);
  Solution sol;
  if (opts.presolve && !detail::presolve_singletons(model, opts, lb, ub, row_active)) {
    sol.status = Status::infeasible;
    return sol;
  }
  const MilpModel reduced = detail::without_rows(work, row_active);
  const LpResult r = solve_lp_core(reduced, opts, lb, ub);
  sol.status = r.status;
  sol.lp_iterations = r.iterations;
  if (r.status == Status::optimal) {
    sol.x = r.x;
    sol.objective = (maximize ? -r.objective : r.objective) + model.obj_offset;
    sol.best_bound = sol.objective;
  } else if (r.status == Status::unbounded && maximize) {
    sol.status = Status::unbounded;
  }
  return sol;
}

/// Branch-and-bound MILP solve.
inline Solution solve_milp(const MilpModel& model, const SolverOptions& opts = {}) {
  model.validate();
  const auto t_start = std::chrono::steady_clock::now();
  auto elapsed_s = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  };

  const bool maximize = model.sense == Sense::maximize;
  MilpModel work = model;  // internal minimize sense
  work.sense = Sense::minimize;
  if (maximize)
    for (auto& c : work.objective) c = -c;

  std::vector<double> root_lb(model.n_vars()), root_ub(model.n_vars());
  for (int j = 0; j < model.n_vars(); ++j) {
    root_lb[j] = model.vars[j].lb;
    root_ub[j] = model.vars[j].ub;
  }
  std::vector<char> row_active(model.cons.size(), 1);
  Solution out;
  if (opts.presolve && !detail::presolve_singletons(model, opts, root_lb, root_ub, row_active)) {
    out.status = Status::infeasible;
    return out;
  }
  const MilpModel reduced = detail::without_rows(work, row_active);

  std::vector<int> int_vars;
  for (int j = 0; j < model.n_vars(); ++j)
    if (model.vars[j].type == VarType::binary) int_vars.push_back(j);

  // Most-fractional rule: maximize the distance to the nearest integer;
  // ties resolve to the lowest variable index.
  auto fractional = [&](const std::vector<double>& x) {
    int pick = -1;
    double best = opts.int_tol;
    for (int j : int_vars) {
      const double frac = x[j] - std::floor(x[j]);
      const double dist = std::min(frac, 1.0 - frac);
      if (dist > best + 1e-12) {
        best = dist;
        pick = j;
      }
    }
    return pick;
  };

  long lp_iters = 0;
  auto solve_node = [&](const std::vector<double>& lb, const std::vector<double>& ub,
                        const Basis* warm, Basis* out) {
    LpResult r = solve_lp_core(reduced, opts, lb, ub, warm, out);
    lp_iters += r.iterations;
    return r;
  };

  // Root relaxation.
  auto root_basis = std::make_shared<Basis>();
  const LpResult root = solve_node(root_lb, root_ub, nullptr, root_basis.get());
  out.lp_iterations = lp_iters;
  if (root.status == Status::infeasible) {
    out.status = Status::infeasible;
    return out;
  }
  if (root.status == Status::unbounded) {
    out.status = Status::unbounded;
    return out;
  }
  if (root.status != Status::optimal) {
    out.status = root.status;
    return out;
  }

  double incumbent_obj = kInf;  // minimize sense
  std::vector<double> incumbent_x;
  auto try_incumbent = [&](const std::vector<double>& x, double obj) {
    if (obj < incumbent_obj - 1e-12) {
      incumbent_obj = obj;
      incumbent_x = x;
      for (int j : int_vars) incumbent_x[j] = std::round(incumbent_x[j]);
    }
  };

  // Rounding heuristics on the root relaxation: a round-up pass (keeps
  // checkpoint-style monotone chains intact) and a round-to-nearest pass.
  if (!int_vars.empty()) {
    for (const double threshold : {0.0, 0.5}) {
      std::vector<double> hlb = root_lb, hub = root_ub;
      for (int j : int_vars) {
        const double frac = root.x[j] - std::floor(root.x[j]);
        double v = frac > threshold + opts.int_tol ? std::ceil(root.x[j] - opts.int_tol)
                                                   : std::floor(root.x[j] + opts.int_tol);
        v = std::clamp(v, root_lb[j], root_ub[j]);
        hlb[j] = hub[j] = v;
      }
      const LpResult h = solve_node(hlb, hub, root_basis.get(), nullptr);
      if (h.status == Status::optimal && fractional(h.x) < 0) try_incumbent(h.x, h.objective);
    }
  }

  const int root_frac = fractional(root.x);
  if (root_frac < 0) {
    try_incumbent(root.x, root.objective);
    out.status = Status::optimal;
    out.x = incumbent_x;
    out.objective = (maximize ? -incumbent_obj : incumbent_obj) + model.obj_offset;
    out.best_bound = out.objective;
    out.gap = 0.0;
    out.nodes = 1;
    out.lp_iterations = lp_iters;
    return out;
  }

  std::priority_queue<detail::BnbNode, std::vector<detail::BnbNode>, detail::NodeOrder> frontier;
  long next_id = 0;
  frontier.push({root.objective, next_id++, {}, {}, root_basis});
  long nodes = 0;
  bool limit_hit = false;
  double best_open_bound = root.objective;

  std::vector<double> lb = root_lb, ub = root_ub;
  while (!frontier.empty()) {
    const detail::BnbNode node = frontier.top();
    best_open_bound = node.parent_bound;
    // Optimality: every open node is at least as bad as the incumbent.
    const double gap_abs = opts.mip_gap * std::max(1.0, std::abs(incumbent_obj));
    if (incumbent_obj < kInf && node.parent_bound >= incumbent_obj - gap_abs) break;
    if (nodes >= opts.node_limit || elapsed_s() > opts.time_limit_s) {
      limit_hit = true;
      break;
    }
    frontier.pop();
    ++nodes;

    lb = root_lb;
    ub = root_ub;
    for (const auto& [j, v] : node.fixed_lb) lb[j] = std::max(lb[j], v);
    for (const auto& [j, v] : node.fixed_ub) ub[j] = std::min(ub[j], v);

    auto basis = std::make_shared<Basis>();
    const LpResult r = solve_node(lb, ub, node.warm.get(), basis.get());
    if (r.status == Status::infeasible) continue;
    if (r.status != Status::optimal) {
      // Surface numerical trouble instead of silently pruning.
      out.status = r.status == Status::unbounded ? Status::unbounded : Status::numerical_failure;
      out.nodes = nodes;
      out.lp_iterations = lp_iters;
      return out;
    }
    if (incumbent_obj < kInf &&
        r.objective >= incumbent_obj - opts.mip_gap * std::max(1.0, std::abs(incumbent_obj)))
      continue;  // dominated

    const int branch_var = fractional(r.x);
    if (branch_var < 0) {
      try_incumbent(r.x, r.objective);
      continue;
    }
    const double v = r.x[branch_var];
    detail::BnbNode down{r.objective, next_id++, node.fixed_lb, node.fixed_ub, basis};
    down.fixed_ub.push_back({branch_var, std::floor(v)});
    detail::BnbNode up{r.objective, next_id++, node.fixed_lb, node.fixed_ub, basis};
    up.fixed_lb.push_back({branch_var, std::ceil(v)});
    frontier.push(std::move(down));
    frontier.push(std::move(up));
  }

  out.nodes = nodes;
  out.lp_iterations = lp_iters;
  if (incumbent_x.empty()) {
    out.status = limit_hit ? Status::limit_reached : Status::infeasible;
    return out;
  }
  const double open_bound = frontier.empty() ? incumbent_obj : std::min(best_open_bound, incumbent_obj);
  out.status = limit_hit ? Status::limit_reached : Status::optimal;
  out.x = incumbent_x;
  out.objective = (maximize ? -incumbent_obj : incumbent_obj) + model.obj_offset;
  out.best_bound = (maximize ? -open_bound : open_bound) + model.obj_offset;
  out.gap = std::abs(incumbent_obj - open_bound) / std::max(1.0, std::abs(incumbent_obj));
  return out;
}

/// Exhaustive oracle: enumerates every assignment of the binaries and solves
/// the continuous LP for each. Exact reference for small models.
inline Solution brute_force(const MilpModel& model, const SolverOptions& opts = {}) {
  model.validate();
  std::vector<int> int_vars;
  for (int j = 0; j < model.n_vars(); ++j)
    if (model.vars[j].type == VarType::binary) int_vars.push_back(j);
  if (int_vars.size() > 20)
    throw std::invalid_argument("brute_force supports at most 20 integer variables");

  const bool maximize = model.sense == Sense::maximize;
  MilpModel work = model;
  work.sense = Sense::minimize;
  if (maximize)
    for (auto& c : work.objective) c = -c;

  std::vector<double> lb(model.n_vars()), ub(model.n_vars());
  for (int j = 0; j < model.n_vars(); ++j) {
    lb[j] = model.vars[j].lb;
    ub[j] = model.vars[j].ub;
  }

  Solution out;
  double best = kInf;
  std::vector<double> best_x;
  Basis chain;  // reuse the previous assignment's basis across the sweep
  bool have_chain = false;
  const std::uint64_t combos = 1ULL << int_vars.size();
  for (std::uint64_t mask = 0; mask < combos; ++mask) {
    std::vector<double> l = lb, u = ub;
    bool ok = true;
    for (std::size_t k = 0; k < int_vars.size(); ++k) {
      const double v = (mask >> k) & 1 ? 1.0 : 0.0;
      const int j = int_vars[k];
      if (v < lb[j] - opts.int_tol || v > ub[j] + opts.int_tol) { ok = false; break; }
      l[j] = u[j] = v;
    }
    if (!ok) continue;
    Basis next;
    const LpResult r = solve_lp_core(work, opts, l, u, have_chain ? &chain : nullptr, &next);
    out.lp_iterations += r.iterations;
    ++out.nodes;
    if (r.status == Status::optimal || r.status == Status::unbounded) {
      chain = std::move(next);
      have_chain = true;
    }
    if (r.status == Status::optimal && r.objective < best - 1e-12) {
      best = r.objective;
      best_x = r.x;
      for (std::size_t k = 0; k < int_vars.size(); ++k)
        best_x[int_vars[k]] = (mask >> k) & 1 ? 1.0 : 0.0;
    }
  }
  if (best_x.empty()) {
    out.status = Status::infeasible;
    return out;
  }
  out.status = Status::optimal;
  out.x = std::move(best_x);
  out.objective = (maximize ? -best : best) + model.obj_offset;
  out.best_bound = out.objective;
  return out;
}

}  // namespace aidc::milp
