#pragma once

// Standard-form mixed-integer linear program: named bounded variables
// (continuous or binary), sparse constraint rows, single linear objective.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "aidc/common.hpp"

namespace aidc::milp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class VarType { continuous, binary };
enum class Relation { le, eq, ge };
enum class Sense { minimize, maximize };
enum class Status { optimal, infeasible, unbounded, limit_reached, numerical_failure };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::optimal: return "optimal";
    case Status::infeasible: return "infeasible";
    case Status::unbounded: return "unbounded";
    case Status::limit_reached: return "limit-reached";
    case Status::numerical_failure: return "numerical-failure";
  }
  return "?";
}

struct Variable {
  std::string name;
  double lb = 0.0;
  double ub = kInf;
  VarType type = VarType::continuous;
};

struct Constraint {
  std::string name;
  std::vector<std::pair<int, double>> coeffs;  // (variable index, coefficient)
  Relation rel = Relation::le;
  double rhs = 0.0;
};

struct MilpModel {
  std::string name = "AIDC";
  Sense sense = Sense::minimize;
  std::vector<Variable> vars;
  std::vector<Constraint> cons;
  std::vector<double> objective;  // aligned with vars
  double obj_offset = 0.0;

  int add_var(const std::string& name, double lb, double ub,
              VarType type = VarType::continuous) {
    vars.push_back({name, lb, ub, type});
    objective.push_back(0.0);
    return static_cast<int>(vars.size()) - 1;
  }

  int add_binary(const std::string& name) { return add_var(name, 0.0, 1.0, VarType::binary); }

  void add_con(std::string name, std::vector<std::pair<int, double>> coeffs, Relation rel,
               double rhs) {
    cons.push_back({std::move(name), std::move(coeffs), rel, rhs});
  }

  void set_obj(int var, double coeff) { objective[static_cast<std::size_t>(var)] = coeff; }

  int n_vars() const { return static_cast<int>(vars.size()); }
  int n_cons() const { return static_cast<int>(cons.size()); }
  int n_integers() const {
    int k = 0;
    for (const auto& v : vars) k += v.type == VarType::binary ? 1 : 0;
    return k;
  }
  std::size_t n_nonzeros() const {
    std::size_t k = 0;
    for (const auto& c : cons) k += c.coeffs.size();
    return k;
  }

  void validate() const {
    std::unordered_set<std::string> names;
    for (const auto& v : vars) {
      if (!names.insert(v.name).second) throw config_error("duplicate variable name " + v.name);
      if (std::isnan(v.lb) || std::isnan(v.ub) || v.lb > v.ub)
        throw config_error("bad bounds on " + v.name);
      if (v.type == VarType::binary && (!std::isfinite(v.lb) || !std::isfinite(v.ub)))
        throw config_error("integer variable " + v.name + " needs finite bounds");
    }
    for (const auto& c : cons) {
      if (std::isnan(c.rhs)) throw config_error("NaN rhs on " + c.name);
      for (const auto& [j, a] : c.coeffs) {
        if (j < 0 || j >= n_vars()) throw config_error("bad column index in " + c.name);
        if (std::isnan(a) || std::isinf(a)) throw config_error("bad coefficient in " + c.name);
      }
    }
    if (std::isnan(obj_offset)) throw config_error("NaN objective offset");
  }
};

struct SolverOptions {
  double feas_tol = 1e-7;
  double int_tol = 1e-6;
  double mip_gap = 1e-6;        // relative
  long node_limit = 200000;
  double time_limit_s = 300.0;
  int bland_threshold = 200;    // stalled iterations before Bland's rule
  int refactor_every = 50;      // pivots between basis refactorizations
  bool presolve = true;         // singleton-row bound tightening
};

struct Solution {
  Status status = Status::numerical_failure;
  std::vector<double> x;
  double objective = 0.0;
  double best_bound = 0.0;  // bound in the model's own sense
  double gap = 0.0;         // relative MIP gap at termination
  long nodes = 0;
  long lp_iterations = 0;

  bool is_optimal() const { return status == Status::optimal; }
};

/// Maximum constraint violation of a candidate point; re-substitution check.
inline double max_violation(const MilpModel& m, const std::vector<double>& x) {
  double worst = 0.0;
  for (int j = 0; j < m.n_vars(); ++j) {
    worst = std::max(worst, m.vars[j].lb - x[j]);
    worst = std::max(worst, x[j] - m.vars[j].ub);
  }
  for (const auto& c : m.cons) {
    double lhs = 0.0;
    for (const auto& [j, a] : c.coeffs) lhs += a * x[j];
    switch (c.rel) {
      case Relation::le: worst = std::max(worst, lhs - c.rhs); break;
      case Relation::ge: worst = std::max(worst, c.rhs - lhs); break;
      case Relation::eq: worst = std::max(worst, std::abs(lhs - c.rhs)); break;
    }
  }
  return worst;
}

inline double objective_value(const MilpModel& m, const std::vector<double>& x) {
  double v = m.obj_offset;
  for (int j = 0; j < m.n_vars(); ++j) v += m.objective[j] * x[j];
  return v;
}

}  // namespace aidc::milp
