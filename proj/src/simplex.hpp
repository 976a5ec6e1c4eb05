#pragma once

#include <Eigen/Dense>

namespace drdid::detail {

enum class LpStatus { kOptimal, kInfeasible, kIterLimit };

// Result of min c'x subject to A x <= b, x >= 0. y holds the simplex
// multipliers of the inequality rows as stored (c_j - y'a_j is the reduced
// cost of a column), taken from the phase that ended the solve: phase-2
// multipliers on optimal exit, phase-1 multipliers on infeasible exit.
struct LpResult {
  LpStatus status = LpStatus::kIterLimit;
  Eigen::VectorXd x;
  double objective = 0.0;
  Eigen::VectorXd y;
};

LpResult simplex_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                       const Eigen::VectorXd& c, int max_iter = 0);

}  // namespace drdid::detail
