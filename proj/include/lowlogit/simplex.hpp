#pragma once

#include <Eigen/Dense>

namespace lowlogit {

enum class LPStatus { feasible, infeasible };

struct BoxLPResult {
    LPStatus status = LPStatus::infeasible;
    Eigen::VectorXd x;
    double phase1_objective = 0.0;  // total residual violation after phase 1
    double max_violation = 0.0;     // max |Ax - b| of the returned point
    int pivots = 0;
};

// Decides whether {x : Ax = b, |x_j| <= bound} is nonempty (phase-1 residual at
// most tau per row) and, if so, returns the point of minimal l1 norm found by
// a bounded-variable simplex with Bland's rule. Deterministic for identical input.
BoxLPResult solve_box_lp(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double bound, double tau);

}  // namespace lowlogit
