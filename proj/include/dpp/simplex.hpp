#pragma once

#include "dpp/core.hpp"

namespace dpp {

/// minimize cost'x  subject to  A_ub x <= b_ub,  A_eq x = b_eq,  x >= 0.
/// Either constraint block may have zero rows.
struct LinearProgram {
  Vector cost;
  Matrix A_ub;
  Vector b_ub;
  Matrix A_eq;
  Vector b_eq;
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  double objective = 0.0;
  Vector x;
  int iterations = 0;
};

/// Dense two-phase tableau simplex with Bland's anti-cycling rule.
LpResult solve_lp(const LinearProgram& lp, double pivot_tolerance = 1e-10);

}  // namespace dpp
