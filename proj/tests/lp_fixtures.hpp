#pragma once

// Deterministic random LP/MILP instance generators shared by the unit tests,
// the acceptance suite, and the external cross-check dump. Instances are
// feasible by construction (a random interior point sets the right-hand
// sides) and bounded (every variable carries finite bounds), so a vertex
// enumeration oracle is exact on the small ones.

#include <string>
#include <vector>

#include "aidc/common.hpp"
#include "aidc/milp/model.hpp"

namespace lpfix {

/// Coefficients are drawn as integer multiples of 1/8 so instances are
/// bit-identical across platforms.
inline double grid_coeff(aidc::Rng& rng, double lo, double hi) {
  const int steps = static_cast<int>((hi - lo) * 8.0);
  return lo + rng.uniform_int(0, steps) / 8.0;
}

inline aidc::milp::MilpModel make_random_lp(aidc::Rng& rng, int n_vars, int n_rows,
                                            int n_binaries = 0) {
  using namespace aidc::milp;
  MilpModel m;
  m.name = "RAND";
  m.sense = rng.uniform_int(0, 1) ? Sense::maximize : Sense::minimize;
  std::vector<double> interior(n_vars);
  for (int j = 0; j < n_vars; ++j) {
    const bool binary = j < n_binaries;
    const double ub = binary ? 1.0 : 1.0 + rng.uniform_int(0, 9);
    m.add_var("X" + std::to_string(j + 1), 0.0, ub, binary ? VarType::binary : VarType::continuous);
    m.set_obj(j, grid_coeff(rng, -10.0, 10.0));
    interior[j] = binary ? rng.uniform_int(0, 1) : grid_coeff(rng, 0.0, ub);
  }
  for (int i = 0; i < n_rows; ++i) {
    std::vector<std::pair<int, double>> coeffs;
    double lhs = 0.0;
    for (int j = 0; j < n_vars; ++j) {
      if (rng.uniform_int(0, 2) == 0) continue;  // ~2/3 density
      const double a = grid_coeff(rng, -5.0, 5.0);
      if (a == 0.0) continue;
      coeffs.push_back({j, a});
      lhs += a * interior[j];
    }
    if (coeffs.empty()) {
      coeffs.push_back({rng.uniform_int(0, n_vars - 1), 1.0});
      lhs = coeffs[0].second * interior[coeffs[0].first];
    }
    const int kind = rng.uniform_int(0, 2);
    if (kind == 0) {
      m.add_con("R" + std::to_string(i + 1), std::move(coeffs), Relation::le,
                lhs + rng.uniform_int(0, 24) / 8.0);
    } else if (kind == 1) {
      m.add_con("R" + std::to_string(i + 1), std::move(coeffs), Relation::ge,
                lhs - rng.uniform_int(0, 24) / 8.0);
    } else {
      m.add_con("R" + std::to_string(i + 1), std::move(coeffs), Relation::eq, lhs);
    }
  }
  return m;
}

}  // namespace lpfix
