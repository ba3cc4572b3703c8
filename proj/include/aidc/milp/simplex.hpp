#pragma once

// Bounded-variable revised primal simplex with a composite phase 1.
//
// Internal form: min c.x subject to A x + I s = rhs with bounds on all
// columns; logical columns carry the row relations. A cold start uses the
// logical identity basis; a warm start adopts a caller-supplied basis (the
// branch-and-bound passes each node its parent's). Phase 1 minimizes the
// total bound violation of the basic variables with +-1 composite costs,
// so any starting basis can be repaired in place. The basis is held as a
// dense LU refreshed every `refactor_every` pivots with product-form eta
// updates in between. Pricing is Dantzig with a switch to Bland's rule
// after a stall, which also covers anti-cycling.

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include "aidc/linalg.hpp"
#include "aidc/milp/model.hpp"

namespace aidc::milp {

enum class VarState : unsigned char { basic, at_lower, at_upper, free_nonbasic };

/// Restartable basis snapshot: one entry per row plus a state per column
/// (structural columns first, then one logical per row).
struct Basis {
  std::vector<int> basic;
  std::vector<VarState> state;
};

struct LpResult {
  Status status = Status::numerical_failure;
  std::vector<double> x;     // structural values only
  double objective = 0.0;    // c.x in the internal minimize sense, no offset
  long iterations = 0;
};

namespace detail {

class Simplex {
 public:
  Simplex(const MilpModel& model, const SolverOptions& opts, const std::vector<double>& lb,
          const std::vector<double>& ub)
      : opts_(opts), m_(model.n_cons()), n_struct_(model.n_vars()) {
    cols_.resize(total());
    rhs_.resize(m_);
    for (int i = 0; i < m_; ++i) {
      const auto& c = model.cons[i];
      rhs_[i] = c.rhs;
      for (const auto& [j, a] : c.coeffs)
        if (a != 0.0) cols_[j].push_back({i, a});
    }
    lb_ = lb;
    ub_ = ub;
    cost_.assign(total(), 0.0);
    for (int j = 0; j < n_struct_; ++j) cost_[j] = model.objective[j];
    for (int i = 0; i < m_; ++i) {
      const int lj = n_struct_ + i;
      cols_[lj].push_back({i, 1.0});
      switch (model.cons[i].rel) {
        case Relation::le: lb_.push_back(0.0); ub_.push_back(kInf); break;
        case Relation::ge: lb_.push_back(-kInf); ub_.push_back(0.0); break;
        case Relation::eq: lb_.push_back(0.0); ub_.push_back(0.0); break;
      }
    }
  }

  LpResult solve(const Basis* warm, Basis* out) {
    LpResult res;
    if (!initialize(warm)) {
      res.status = Status::numerical_failure;
      return res;
    }
    Status st = run_phase1();
    if (st == Status::optimal && total_infeasibility() > feas_threshold()) {
      res.status = Status::infeasible;
      res.iterations = iterations_;
      return res;
    }
    if (st != Status::optimal) {
      res.status = st;
      res.iterations = iterations_;
      return res;
    }
    st = run_phase2();
    res.status = st;
    res.iterations = iterations_;
    if (st == Status::optimal || st == Status::unbounded) {
      if (out) {
        out->basic = basis_;
        out->state = state_;
      }
    }
    if (st == Status::optimal) {
      res.x.assign(x_.begin(), x_.begin() + n_struct_);
      res.objective = 0.0;
      for (int j = 0; j < n_struct_; ++j) res.objective += cost_[j] * x_[j];
    }
    return res;
  }

 private:
  int total() const { return n_struct_ + m_; }

  double feas_threshold() const { return std::max(opts_.feas_tol, 1e-9 * (1.0 + rhs_scale_)); }

  bool initialize(const Basis* warm) {
    const int n = total();
    x_.assign(n, 0.0);
    state_.assign(n, VarState::at_lower);
    basis_.assign(m_, -1);
    rhs_scale_ = 0.0;
    for (int i = 0; i < m_; ++i) rhs_scale_ = std::max(rhs_scale_, std::abs(rhs_[i]));

    const bool use_warm = warm && static_cast<int>(warm->basic.size()) == m_ &&
                          static_cast<int>(warm->state.size()) == n;
    if (use_warm) {
      std::vector<char> in_basis(n, 0);
      bool ok = true;
      for (int k = 0; k < m_ && ok; ++k) {
        const int j = warm->basic[k];
        ok = j >= 0 && j < n && !in_basis[j];
        if (ok) in_basis[j] = 1;
      }
      if (ok) {
        basis_ = warm->basic;
        state_ = warm->state;
        for (int j = 0; j < n; ++j) {
          if (in_basis[j]) {
            state_[j] = VarState::basic;
            continue;
          }
          // Nonbasic columns sit on a bound consistent with their state;
          // bounds may have moved since the basis was recorded.
          if (state_[j] == VarState::basic) state_[j] = VarState::at_lower;
          if (state_[j] == VarState::at_lower && !std::isfinite(lb_[j]))
            state_[j] = std::isfinite(ub_[j]) ? VarState::at_upper : VarState::free_nonbasic;
          if (state_[j] == VarState::at_upper && !std::isfinite(ub_[j]))
            state_[j] = std::isfinite(lb_[j]) ? VarState::at_lower : VarState::free_nonbasic;
          x_[j] = state_[j] == VarState::at_lower   ? lb_[j]
                  : state_[j] == VarState::at_upper ? ub_[j]
                                                    : 0.0;
        }
        pivots_since_refactor_ = opts_.refactor_every;  // force factorization
        if (refactor()) return true;
        // Singular inherited basis: fall through to a cold start.
      }
    }

    // Cold start: logical identity basis, structurals at the bound nearest
    // zero (free structurals float at zero).
    for (int j = 0; j < n_struct_; ++j) {
      const bool lf = std::isfinite(lb_[j]), uf = std::isfinite(ub_[j]);
      if (lf && uf) {
        if (std::abs(lb_[j]) <= std::abs(ub_[j])) { x_[j] = lb_[j]; state_[j] = VarState::at_lower; }
        else { x_[j] = ub_[j]; state_[j] = VarState::at_upper; }
      } else if (lf) {
        x_[j] = lb_[j];
        state_[j] = VarState::at_lower;
      } else if (uf) {
        x_[j] = ub_[j];
        state_[j] = VarState::at_upper;
      } else {
        x_[j] = 0.0;
        state_[j] = VarState::free_nonbasic;
      }
    }
    for (int i = 0; i < m_; ++i) {
      basis_[i] = n_struct_ + i;
      state_[n_struct_ + i] = VarState::basic;
    }
    pivots_since_refactor_ = opts_.refactor_every;
    return refactor();
  }

  bool refactor() {
    std::vector<double> dense(static_cast<std::size_t>(m_) * m_, 0.0);
    for (int k = 0; k < m_; ++k)
      for (const auto& [i, a] : cols_[basis_[k]]) dense[static_cast<std::size_t>(i) * m_ + k] = a;
    if (m_ > 0 && !lu_.factor(std::move(dense), static_cast<std::size_t>(m_))) return false;
    etas_.clear();
    pivots_since_refactor_ = 0;
    // Recompute basic values from scratch for numerical hygiene.
    std::vector<double> r = rhs_;
    for (int j = 0; j < total(); ++j)
      if (state_[j] != VarState::basic && x_[j] != 0.0)
        for (const auto& [i, a] : cols_[j]) r[i] -= a * x_[j];
    if (m_ > 0) {
      std::vector<double> xb;
      lu_.solve(xb, r);
      for (int k = 0; k < m_; ++k) x_[basis_[k]] = xb[k];
    }
    return true;
  }

  void ftran(std::vector<double>& w) const {
    if (m_ == 0) { w.clear(); return; }
    std::vector<double> y;
    lu_.solve(y, w);
    for (const auto& [r, eta] : etas_) {
      const double piv = y[r] / eta[r];
      for (int i = 0; i < m_; ++i) y[i] -= eta[i] * piv;
      y[r] = piv;
    }
    w = std::move(y);
  }

  void btran(std::vector<double>& pi, std::vector<double> c_basic) const {
    if (m_ == 0) { pi.clear(); return; }
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
      const auto& [r, eta] = *it;
      double s = c_basic[r];
      for (int i = 0; i < m_; ++i)
        if (i != r) s -= eta[i] * c_basic[i];
      c_basic[r] = s / eta[r];
    }
    lu_.solve_transposed(pi, c_basic);
  }

  // Bound-violation bookkeeping for the composite phase 1.
  double violation(int j) const {
    if (x_[j] < lb_[j]) return lb_[j] - x_[j];
    if (x_[j] > ub_[j]) return x_[j] - ub_[j];
    return 0.0;
  }
  double total_infeasibility() const {
    double v = 0.0;
    for (int k = 0; k < m_; ++k) v += violation(basis_[k]);
    return v;
  }

  Status run_phase1() {
    if (total_infeasibility() <= feas_threshold()) return Status::optimal;
    return iterate(/*phase1=*/true);
  }

  Status run_phase2() {
    // Clamp residual phase-1 noise onto the bounds.
    for (int k = 0; k < m_; ++k) {
      const int j = basis_[k];
      if (x_[j] < lb_[j]) x_[j] = lb_[j];
      if (x_[j] > ub_[j]) x_[j] = ub_[j];
    }
    return iterate(/*phase1=*/false);
  }

  Status iterate(bool phase1) {
    bool bland = false;
    int stalled = 0;
    const long iter_cap = 20000 + 200L * (m_ + n_struct_);
    long local_iters = 0;
    std::vector<double> cb(m_), pi, w;
    double last_obj = phase1 ? total_infeasibility() : current_objective();

    while (true) {
      if (pivots_since_refactor_ >= opts_.refactor_every)
        if (!refactor()) return Status::numerical_failure;

      if (phase1 && total_infeasibility() <= feas_threshold()) return Status::optimal;

      // Composite costs: push violated basics back toward their bounds.
      for (int k = 0; k < m_; ++k) {
        const int j = basis_[k];
        if (phase1)
          cb[k] = x_[j] < lb_[j] - opts_.feas_tol ? -1.0
                  : x_[j] > ub_[j] + opts_.feas_tol ? 1.0
                                                    : 0.0;
        else
          cb[k] = cost_[j];
      }
      btran(pi, cb);

      // Pricing (Dantzig; Bland after a stall).
      int enter = -1, dir = +1;
      double best = opts_.feas_tol;
      for (int j = 0; j < total(); ++j) {
        if (state_[j] == VarState::basic) continue;
        if (lb_[j] == ub_[j]) continue;  // fixed, cannot move
        double d = phase1 ? 0.0 : cost_[j];
        if (m_ > 0)
          for (const auto& [i, a] : cols_[j]) d -= pi[i] * a;
        int cand = 0;
        double score = 0.0;
        if (state_[j] == VarState::at_lower && d < -opts_.feas_tol) { score = -d; cand = +1; }
        else if (state_[j] == VarState::at_upper && d > opts_.feas_tol) { score = d; cand = -1; }
        else if (state_[j] == VarState::free_nonbasic && std::abs(d) > opts_.feas_tol) {
          score = std::abs(d);
          cand = d < 0.0 ? +1 : -1;
        }
        if (!cand) continue;
        if (bland) { enter = j; dir = cand; break; }
        if (score > best) { best = score; enter = j; dir = cand; }
      }
      if (enter < 0) return Status::optimal;  // phase optimum

      w.assign(m_, 0.0);
      for (const auto& [i, a] : cols_[enter]) w[i] = a;
      ftran(w);

      // Ratio test. Basic k moves at rate -dir*w[k]. In phase 1 a variable
      // beyond a bound blocks where it regains feasibility; its violated
      // side never blocks.
      double step = kInf;
      if (std::isfinite(lb_[enter]) && std::isfinite(ub_[enter]))
        step = ub_[enter] - lb_[enter];
      int leave_pos = -1;
      bool leave_to_upper = false;
      for (int k = 0; k < m_; ++k) {
        const double rate = -dir * w[k];
        if (std::abs(rate) < 1e-10) continue;
        const int bj = basis_[k];
        double lim;
        bool to_upper;
        if (rate < 0.0) {
          double floor_b = lb_[bj];
          if (phase1 && x_[bj] > ub_[bj] + opts_.feas_tol) floor_b = ub_[bj];  // heading to ub
          else if (phase1 && x_[bj] < lb_[bj] - opts_.feas_tol) continue;      // already below
          if (!std::isfinite(floor_b)) continue;
          lim = (floor_b - x_[bj]) / rate;
          to_upper = phase1 && floor_b == ub_[bj];
        } else {
          double cap_b = ub_[bj];
          if (phase1 && x_[bj] < lb_[bj] - opts_.feas_tol) cap_b = lb_[bj];    // heading to lb
          else if (phase1 && x_[bj] > ub_[bj] + opts_.feas_tol) continue;      // already above
          if (!std::isfinite(cap_b)) continue;
          lim = (cap_b - x_[bj]) / rate;
          to_upper = !(phase1 && cap_b == lb_[bj]);
        }
        lim = std::max(lim, 0.0);
        if (lim < step - 1e-9) {
          step = lim;
          leave_pos = k;
          leave_to_upper = to_upper;
        } else if (leave_pos >= 0 && lim <= step + 1e-9) {
          const bool take = bland ? bj < basis_[leave_pos]
                                  : std::abs(w[k]) > std::abs(w[leave_pos]);
          if (take) {
            step = std::min(step, lim);
            leave_pos = k;
            leave_to_upper = to_upper;
          }
        }
      }

      if (!std::isfinite(step))
        return phase1 ? Status::numerical_failure : Status::unbounded;

      step = std::max(step, 0.0);
      x_[enter] += dir * step;
      for (int k = 0; k < m_; ++k)
        if (w[k] != 0.0) x_[basis_[k]] -= dir * w[k] * step;

      if (leave_pos < 0) {
        // Bound flip.
        state_[enter] = dir > 0 ? VarState::at_upper : VarState::at_lower;
        x_[enter] = dir > 0 ? ub_[enter] : lb_[enter];
      } else {
        const int leave_var = basis_[leave_pos];
        x_[leave_var] = leave_to_upper ? ub_[leave_var] : lb_[leave_var];
        state_[leave_var] = leave_to_upper ? VarState::at_upper : VarState::at_lower;
        if (lb_[leave_var] == ub_[leave_var]) state_[leave_var] = VarState::at_lower;
        basis_[leave_pos] = enter;
        state_[enter] = VarState::basic;
        if (std::abs(w[leave_pos]) < 1e-10) {
          pivots_since_refactor_ = opts_.refactor_every;  // rebuild, unstable pivot
        } else {
          etas_.push_back({leave_pos, w});
          ++pivots_since_refactor_;
        }
      }

      ++iterations_;
      if (++local_iters > iter_cap) return Status::numerical_failure;

      const double obj = phase1 ? total_infeasibility() : current_objective();
      if (obj < last_obj - 1e-12 * (1.0 + std::abs(last_obj))) {
        stalled = 0;
        last_obj = obj;
      } else if (!bland && ++stalled >= opts_.bland_threshold) {
        bland = true;  // anti-cycling fallback
      }
    }
  }

  double current_objective() const {
    double v = 0.0;
    for (int j = 0; j < total(); ++j)
      if (x_[j] != 0.0) v += cost_[j] * x_[j];
    return v;
  }

  const SolverOptions& opts_;
  int m_ = 0;
  int n_struct_ = 0;
  double rhs_scale_ = 0.0;
  std::vector<std::vector<std::pair<int, double>>> cols_;
  std::vector<double> rhs_, lb_, ub_, cost_, x_;
  std::vector<VarState> state_;
  std::vector<int> basis_;
  std::vector<std::pair<int, std::vector<double>>> etas_;
  linalg::LuFactor lu_;
  long iterations_ = 0;
  int pivots_since_refactor_ = 0;
};

}  // namespace detail

/// LP relaxation solve with explicit bound arrays. `warm` (optional) seeds
/// the basis, typically from a parent branch-and-bound node; `basis_out`
/// (optional) receives the final basis for reuse.
inline LpResult solve_lp_core(const MilpModel& model, const SolverOptions& opts,
                              const std::vector<double>& lb, const std::vector<double>& ub,
                              const Basis* warm = nullptr, Basis* basis_out = nullptr) {
  for (int j = 0; j < model.n_vars(); ++j)
    if (lb[j] > ub[j] + opts.feas_tol) {
      LpResult r;
      r.status = Status::infeasible;
      return r;
    }
  detail::Simplex s(model, opts, lb, ub);
  return s.solve(warm, basis_out);
}

}  // namespace aidc::milp
