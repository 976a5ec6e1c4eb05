#pragma once

#include <Eigen/Dense>

#include "drdid/common.hpp"

namespace drdid {

// Weighted L1-penalized least squares,
//   minimize (1/n)||s - A coef||^2 + lambda * sum_j penalty_weights[j]*|coef_j|.
// A weight of zero leaves that coordinate unpenalized. Solved by cyclic
// coordinate descent on the Gram matrix with an active-set pass.
struct LassoProblem {
  Eigen::MatrixXd a;
  Eigen::VectorXd s;
  Eigen::VectorXd penalty_weights;  // empty means all ones
  double lambda = 0.0;
  double tol = 1e-8;
  int max_iter = 100000;            // full sweeps
  Eigen::VectorXd init;             // optional warm start
};

struct LassoResult {
  Eigen::VectorXd coef;
  int iterations = 0;
  bool converged = true;
};

LassoResult lasso_solve(const LassoProblem& prob);

double lasso_objective(const LassoProblem& prob, const Eigen::VectorXd& coef);

// Subgradient certificate: |(2/n) a_j' (s - A coef)| <= lambda*w_j + tol at
// coef_j = 0, and equal to lambda*w_j*sign(coef_j) within tol otherwise.
bool lasso_kkt_ok(const LassoProblem& prob, const Eigen::VectorXd& coef,
                  double tol);

// Minimum-l1 solution of an l-infinity constraint,
//   minimize ||w||_1  subject to  ||target + gram * w||_inf <= bound.
// Solved as a linear program by a dense two-phase simplex. When the program
// is infeasible the bound is escalated by 1.5x up to 10 times before
// Infeasible is thrown.
struct DantzigProblem {
  Eigen::MatrixXd gram;
  Eigen::VectorXd target;
  double bound = 0.0;
};

struct DantzigResult {
  Eigen::VectorXd w;
  double bound_used = 0.0;  // after any escalation
  int escalations = 0;
};

DantzigResult dantzig_solve(const DantzigProblem& prob);

}  // namespace drdid
