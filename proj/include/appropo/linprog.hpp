#pragma once

#include "appropo/common.hpp"

namespace appropo {

/**
 * Dense linear program in inequality/equality form:
 *
 *   maximize    c'x
 *   subject to  A_ub x <= b_ub,  A_eq x = b_eq,  x >= 0.
 *
 * Either constraint block may be empty (zero rows). Free variables must be
 * split by the caller.
 */
struct LinearProgram {
    Vec c;
    Mat a_ub;
    Vec b_ub;
    Mat a_eq;
    Vec b_eq;
};

enum class LpStatus { optimal, infeasible, unbounded };

struct LpResult {
    LpStatus status = LpStatus::infeasible;
    double objective = 0.0;
    Vec x;
};

/// Two-phase tableau simplex with Bland's anti-cycling rule.
LpResult solve_lp(const LinearProgram& lp, double tol = 1e-10);

}  // namespace appropo
