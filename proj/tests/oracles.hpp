#pragma once

// Brute-force reference solvers, small-dimension only. These trade hours of
// CPU-per-variable for independence from the production code paths, so the
// two implementations can only agree by being correct.

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <optional>

#include "drdid/solvers.hpp"

namespace oracles {

// Global minimum of (1/n)||s - A b||^2 + lambda sum w_j |b_j| over b in R^3
// by iterated box-grid refinement. The initial box is guaranteed to contain
// every minimizer: the objective at zero bounds lambda*w_min*||b*||_1. The
// six-cell margin kept on each side brackets the minimizer round over
// round provided cond(a'a) stays below ~40, so callers must condition
// their instances.
inline Eigen::Vector3d lasso_grid(const drdid::LassoProblem& prob,
                                  int points_per_dim = 17, int rounds = 80) {
  const Eigen::Index n = prob.a.rows();
  Eigen::Vector3d w = Eigen::Vector3d::Ones();
  if (prob.penalty_weights.size() == 3) w = prob.penalty_weights;
  const double w_min = w.minCoeff();
  double radius = prob.s.squaredNorm() /
                      (static_cast<double>(n) * prob.lambda * w_min) +
                  1.0;

  auto objective = [&](const Eigen::Vector3d& b) {
    const double fit = (prob.s - prob.a * b).squaredNorm() /
                       static_cast<double>(n);
    return fit + prob.lambda * (w.array() * b.array().abs()).sum();
  };

  // The center lands on each round's grid (odd point count), so the best
  // objective is non-increasing across rounds.
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  for (int round = 0; round < rounds; ++round) {
    Eigen::Vector3d best = center;
    double best_obj = objective(center);
    const double step = 2.0 * radius / (points_per_dim - 1);
    for (int i = 0; i < points_per_dim; ++i) {
      for (int j = 0; j < points_per_dim; ++j) {
        for (int k = 0; k < points_per_dim; ++k) {
          Eigen::Vector3d b(center[0] - radius + i * step,
                            center[1] - radius + j * step,
                            center[2] - radius + k * step);
          const double obj = objective(b);
          if (obj < best_obj) {
            best_obj = obj;
            best = b;
          }
        }
      }
    }
    center = best;
    radius = 6.0 * step;
  }
  return center;
}

// Reference for min ||w||_1 s.t. ||target + gram w||_inf <= bound with
// gram 3x3: split w = u - v, append slacks to the six inequality rows, and
// enumerate every basic feasible solution of the 6x12 standard form.
// Returns nullopt when no basis is feasible (the program is infeasible).
inline std::optional<Eigen::Vector3d> dantzig_bfs(
    const Eigen::Matrix3d& gram, const Eigen::Vector3d& target, double bound) {
  constexpr int kRows = 6, kCols = 12;
  Eigen::Matrix<double, kRows, kCols> a;
  a.setZero();
  a.block<3, 3>(0, 0) = gram;
  a.block<3, 3>(0, 3) = -gram;
  a.block<3, 3>(3, 0) = -gram;
  a.block<3, 3>(3, 3) = gram;
  a.block<kRows, kRows>(0, 6).setIdentity();
  Eigen::Matrix<double, kRows, 1> b;
  b << bound - target[0], bound - target[1], bound - target[2],
      bound + target[0], bound + target[1], bound + target[2];

  double best = std::numeric_limits<double>::infinity();
  Eigen::Vector3d best_w = Eigen::Vector3d::Zero();
  bool feasible = false;
  int basis[kRows];
  // Lexicographic enumeration of the C(12,6) = 924 column subsets.
  for (basis[0] = 0; basis[0] < kCols; ++basis[0])
    for (basis[1] = basis[0] + 1; basis[1] < kCols; ++basis[1])
      for (basis[2] = basis[1] + 1; basis[2] < kCols; ++basis[2])
        for (basis[3] = basis[2] + 1; basis[3] < kCols; ++basis[3])
          for (basis[4] = basis[3] + 1; basis[4] < kCols; ++basis[4])
            for (basis[5] = basis[4] + 1; basis[5] < kCols; ++basis[5]) {
              Eigen::Matrix<double, kRows, kRows> ab;
              for (int c = 0; c < kRows; ++c) ab.col(c) = a.col(basis[c]);
              const Eigen::FullPivLU<Eigen::Matrix<double, kRows, kRows>> lu(
                  ab);
              if (!lu.isInvertible()) continue;
              const Eigen::Matrix<double, kRows, 1> xb = lu.solve(b);
              if ((xb.array() < -1e-9).any()) continue;
              Eigen::Matrix<double, kCols, 1> x;
              x.setZero();
              for (int c = 0; c < kRows; ++c) x[basis[c]] = xb[c];
              const double obj = x.head<6>().sum();
              if (obj < best) {
                best = obj;
                best_w = x.head<3>() - x.segment<3>(3);
                feasible = true;
              }
            }
  if (!feasible) return std::nullopt;
  return best_w;
}

}  // namespace oracles
