#include "drdid/solvers.hpp"

#include <cmath>
#include <vector>

namespace drdid {

namespace {

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

Eigen::VectorXd weights_or_ones(const LassoProblem& prob) {
  if (prob.penalty_weights.size() == 0) {
    return Eigen::VectorXd::Ones(prob.a.cols());
  }
  if (prob.penalty_weights.size() != prob.a.cols()) {
    throw DimensionMismatch("lasso penalty_weights length != columns");
  }
  return prob.penalty_weights;
}

}  // namespace

LassoResult lasso_solve(const LassoProblem& prob) {
  const Eigen::Index n = prob.a.rows();
  const Eigen::Index m = prob.a.cols();
  if (prob.s.size() != n) throw DimensionMismatch("lasso s length != rows");
  if (prob.lambda < 0.0) throw ConfigError("lasso lambda must be >= 0");
  const Eigen::VectorXd w = weights_or_ones(prob);

  // Gram-based updates: g = A'A/n, c = A's/n, and q tracks g*coef.
  const double inv_n = 1.0 / static_cast<double>(n);
  const Eigen::MatrixXd g = (prob.a.transpose() * prob.a) * inv_n;
  const Eigen::VectorXd c = (prob.a.transpose() * prob.s) * inv_n;

  Eigen::VectorXd coef = Eigen::VectorXd::Zero(m);
  if (prob.init.size() == m) coef = prob.init;
  Eigen::VectorXd q = g * coef;

  const double scale = std::max(1.0, c.cwiseAbs().maxCoeff());
  const double tol = prob.tol;

  auto sweep = [&](const std::vector<Eigen::Index>& idx) -> double {
    double max_delta = 0.0;
    for (Eigen::Index j : idx) {
      const double gjj = g(j, j);
      const double old = coef[j];
      double next;
      if (gjj <= 0.0) {
        next = 0.0;  // zero column carries no signal
      } else {
        const double zj = c[j] - q[j] + gjj * old;
        if (w[j] > 0.0) {
          next = soft_threshold(zj, 0.5 * prob.lambda * w[j]) / gjj;
        } else {
          next = zj / gjj;
        }
      }
      const double delta = next - old;
      if (delta != 0.0) {
        coef[j] = next;
        q += g.col(j) * delta;
        max_delta = std::max(max_delta, std::abs(delta));
      }
    }
    return max_delta;
  };

  std::vector<Eigen::Index> all(m);
  for (Eigen::Index j = 0; j < m; ++j) all[j] = j;

  LassoResult res;
  int iter = 0;
  bool converged = false;
  while (iter < prob.max_iter) {
    ++iter;
    const double full_delta = sweep(all);
    if (full_delta <= tol * scale) {
      converged = true;
      break;
    }
    // Iterate the current active set until stable, then re-verify with a
    // full sweep. Cheap when the solution is sparse.
    std::vector<Eigen::Index> active;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (coef[j] != 0.0 || w[j] == 0.0) active.push_back(j);
    }
    while (iter < prob.max_iter) {
      ++iter;
      if (sweep(active) <= tol * scale) break;
    }
  }
  res.coef = std::move(coef);
  res.iterations = iter;
  res.converged = converged && lasso_kkt_ok(prob, res.coef, 1e-6);
  return res;
}

double lasso_objective(const LassoProblem& prob, const Eigen::VectorXd& coef) {
  const Eigen::VectorXd w = weights_or_ones(prob);
  const double fit = (prob.s - prob.a * coef).squaredNorm() /
                     static_cast<double>(prob.a.rows());
  return fit + prob.lambda * w.cwiseProduct(coef.cwiseAbs()).sum();
}

bool lasso_kkt_ok(const LassoProblem& prob, const Eigen::VectorXd& coef,
                  double tol) {
  const Eigen::Index n = prob.a.rows();
  const Eigen::VectorXd w = weights_or_ones(prob);
  const Eigen::VectorXd r = prob.s - prob.a * coef;
  const Eigen::VectorXd grad =
      (2.0 / static_cast<double>(n)) * (prob.a.transpose() * r);
  const double scale = std::max(1.0, grad.cwiseAbs().maxCoeff());
  for (Eigen::Index j = 0; j < coef.size(); ++j) {
    const double bound = prob.lambda * w[j];
    if (coef[j] == 0.0) {
      if (std::abs(grad[j]) > bound + tol * scale) return false;
    } else {
      const double target = bound * (coef[j] > 0.0 ? 1.0 : -1.0);
      if (std::abs(grad[j] - target) > tol * scale) return false;
    }
  }
  return true;
}

}  // namespace drdid
