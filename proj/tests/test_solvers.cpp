#include <cmath>

#include "doctest.h"
#include "drdid/rng.hpp"
#include "drdid/solvers.hpp"
#include "oracles.hpp"

namespace {

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

// Random instance with a Gram matrix conditioned well enough for the grid
// oracle's bracketing argument (see oracles.hpp).
drdid::LassoProblem random_lasso(drdid::Rng& rng, int n, int p, double lambda) {
  drdid::LassoProblem prob;
  prob.a.resize(n, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) prob.a(i, j) = rng.normal();
  }
  // Mix in a shared column to induce correlation without degeneracy.
  if (p > 1) {
    for (Eigen::Index j = 1; j < p; ++j) {
      prob.a.col(j) = 0.7 * prob.a.col(j) + 0.3 * prob.a.col(0);
    }
  }
  prob.s.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) prob.s[i] = rng.normal();
  prob.lambda = lambda;
  return prob;
}

drdid::DantzigProblem random_dantzig(drdid::Rng& rng, double bound) {
  // Random SPD 3x3 gram keeps the program feasible at any positive bound.
  Eigen::MatrixXd b(3, 3);
  for (Eigen::Index i = 0; i < 3; ++i) {
    for (Eigen::Index j = 0; j < 3; ++j) b(i, j) = rng.normal();
  }
  drdid::DantzigProblem prob;
  prob.gram = b * b.transpose() + 0.5 * Eigen::MatrixXd::Identity(3, 3);
  prob.target.resize(3);
  for (Eigen::Index i = 0; i < 3; ++i) prob.target[i] = 2.0 * rng.normal();
  prob.bound = bound;
  return prob;
}

}  // namespace

TEST_SUITE("solvers") {

TEST_CASE("single column matches the soft-threshold formula") {
  // With a'a/n = 1 and a's/n = 0.8 the minimizer is S(0.8, lambda/2).
  const int n = 4;
  drdid::LassoProblem prob;
  prob.a = Eigen::MatrixXd::Ones(n, 1);
  prob.s = Eigen::VectorXd::Constant(n, 0.8);
  prob.lambda = 0.3;
  const drdid::LassoResult res = drdid::lasso_solve(prob);
  CHECK(res.converged);
  CHECK(res.coef[0] == doctest::Approx(soft_threshold(0.8, 0.15)).epsilon(1e-10));
  CHECK(res.coef[0] == doctest::Approx(0.65).epsilon(1e-10));
  CHECK(drdid::lasso_kkt_ok(prob, res.coef, 1e-8));
}

TEST_CASE("large penalty forces the zero solution") {
  drdid::Rng rng = drdid::Rng(101);
  drdid::LassoProblem prob = random_lasso(rng, 40, 6, 0.0);
  const Eigen::VectorXd grad0 = 2.0 * prob.a.transpose() * prob.s /
                                static_cast<double>(prob.a.rows());
  prob.lambda = 2.0 * grad0.lpNorm<Eigen::Infinity>();
  const drdid::LassoResult res = drdid::lasso_solve(prob);
  CHECK(res.coef.lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(drdid::lasso_kkt_ok(prob, res.coef, 1e-8));
}

TEST_CASE("solution scales with the response") {
  drdid::Rng rng = drdid::Rng(55);
  drdid::LassoProblem prob = random_lasso(rng, 50, 8, 0.2);
  const Eigen::VectorXd base = drdid::lasso_solve(prob).coef;

  drdid::LassoProblem scaled = prob;
  scaled.s *= 3.0;
  scaled.lambda *= 3.0;
  const Eigen::VectorXd big = drdid::lasso_solve(scaled).coef;
  CHECK((big - 3.0 * base).lpNorm<Eigen::Infinity>() < 1e-7);
}

TEST_CASE("zero-weight coordinates are unpenalized") {
  drdid::Rng rng = drdid::Rng(77);
  drdid::LassoProblem prob = random_lasso(rng, 60, 5, 0.5);
  prob.penalty_weights = Eigen::VectorXd::Ones(5);
  prob.penalty_weights[2] = 0.0;
  const drdid::LassoResult res = drdid::lasso_solve(prob);
  CHECK(drdid::lasso_kkt_ok(prob, res.coef, 1e-8));
  // The unpenalized coordinate zeroes its own gradient exactly.
  const Eigen::VectorXd grad = 2.0 * prob.a.transpose() *
                               (prob.s - prob.a * res.coef) /
                               static_cast<double>(prob.a.rows());
  CHECK(std::abs(grad[2]) < 1e-7);
}

TEST_CASE("kkt certificate holds on fuzzed instances") {
  drdid::Rng rng = drdid::Rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 20 + static_cast<int>(rng.uniform_below(60));
    const int p = 2 + static_cast<int>(rng.uniform_below(10));
    const double lambda = 0.02 + 0.6 * rng.uniform();
    drdid::LassoProblem prob = random_lasso(rng, n, p, lambda);
    const drdid::LassoResult res = drdid::lasso_solve(prob);
    CHECK(res.converged);
    CHECK(drdid::lasso_kkt_ok(prob, res.coef, 1e-7));
    CHECK(drdid::lasso_objective(prob, res.coef) <=
          drdid::lasso_objective(prob, Eigen::VectorXd::Zero(p)) + 1e-12);
  }
}

TEST_CASE("iteration cap reports non-convergence") {
  drdid::Rng rng = drdid::Rng(303);
  drdid::LassoProblem prob = random_lasso(rng, 80, 12, 0.05);
  prob.max_iter = 1;
  prob.tol = 1e-14;
  const drdid::LassoResult res = drdid::lasso_solve(prob);
  CHECK_FALSE(res.converged);
  CHECK(res.iterations == 1);
}

TEST_CASE("warm start converges to the same point") {
  drdid::Rng rng = drdid::Rng(404);
  drdid::LassoProblem prob = random_lasso(rng, 50, 7, 0.15);
  const Eigen::VectorXd cold = drdid::lasso_solve(prob).coef;

  drdid::LassoProblem warm = prob;
  warm.init = cold;
  const drdid::LassoResult res = drdid::lasso_solve(warm);
  CHECK((res.coef - cold).lpNorm<Eigen::Infinity>() < 1e-8);
  CHECK(res.iterations <= 2);
}

TEST_CASE("solver matches the grid-search oracle") {
  drdid::Rng rng = drdid::Rng(50505);
  int used = 0;
  while (used < 10) {
    drdid::LassoProblem prob = random_lasso(rng, 30, 3, 0.05 + 0.4 * rng.uniform());
    const Eigen::MatrixXd gram =
        prob.a.transpose() * prob.a / static_cast<double>(prob.a.rows());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    if (eig.eigenvalues().minCoeff() <= 0.0 ||
        eig.eigenvalues().maxCoeff() / eig.eigenvalues().minCoeff() > 30.0) {
      continue;
    }
    ++used;
    const Eigen::VectorXd mine = drdid::lasso_solve(prob).coef;
    const Eigen::VectorXd grid = oracles::lasso_grid(prob);
    const double f_mine = drdid::lasso_objective(prob, mine);
    const double f_grid = drdid::lasso_objective(prob, grid);
    CHECK(f_mine <= f_grid + 1e-5);
  }
}

TEST_CASE("identity gram reproduces the negated target") {
  drdid::DantzigProblem prob;
  prob.gram = Eigen::MatrixXd::Identity(3, 3);
  prob.target = Eigen::Vector3d(-0.8, 0.0, 0.0);
  prob.bound = 0.0;
  const drdid::DantzigResult res = drdid::dantzig_solve(prob);
  CHECK(res.escalations == 0);
  CHECK(res.w[0] == doctest::Approx(0.8).epsilon(1e-9));
  CHECK(std::abs(res.w[1]) < 1e-9);
  CHECK(std::abs(res.w[2]) < 1e-9);
}

TEST_CASE("loose bound admits the zero solution") {
  drdid::Rng rng = drdid::Rng(606);
  const drdid::DantzigProblem base = random_dantzig(rng, 0.0);
  drdid::DantzigProblem prob = base;
  prob.bound = base.target.lpNorm<Eigen::Infinity>() + 0.1;
  const drdid::DantzigResult res = drdid::dantzig_solve(prob);
  CHECK(res.w.lpNorm<Eigen::Infinity>() < 1e-10);
  CHECK(res.escalations == 0);
}

TEST_CASE("solutions satisfy the constraint and beat the direct inverse") {
  drdid::Rng rng = drdid::Rng(707);
  for (int trial = 0; trial < 50; ++trial) {
    const drdid::DantzigProblem prob = random_dantzig(rng, 0.05 + 0.3 * rng.uniform());
    const drdid::DantzigResult res = drdid::dantzig_solve(prob);
    CHECK(res.escalations == 0);
    const double viol =
        (prob.target + prob.gram * res.w).lpNorm<Eigen::Infinity>();
    CHECK(viol <= prob.bound + 1e-7);
    // w = -G^-1 target is always feasible, so the optimum is no longer.
    const Eigen::VectorXd direct = -prob.gram.lu().solve(prob.target);
    CHECK(res.w.lpNorm<1>() <= direct.lpNorm<1>() + 1e-7);
  }
}

TEST_CASE("solver matches the basic-solution enumeration oracle") {
  drdid::Rng rng = drdid::Rng(808);
  for (int trial = 0; trial < 50; ++trial) {
    const drdid::DantzigProblem prob = random_dantzig(rng, 0.05 + 0.4 * rng.uniform());
    const drdid::DantzigResult res = drdid::dantzig_solve(prob);
    const auto oracle = oracles::dantzig_bfs(prob.gram, prob.target, prob.bound);
    REQUIRE(oracle.has_value());
    CHECK(res.w.lpNorm<1>() <= oracle->lpNorm<1>() + 1e-6);
    CHECK(res.w.lpNorm<1>() >= oracle->lpNorm<1>() - 1e-6);
  }
}

TEST_CASE("infeasible bounds escalate geometrically") {
  // Rank-deficient gram: nothing can move the third constraint row.
  drdid::DantzigProblem prob;
  prob.gram = Eigen::Vector3d(1.0, 1.0, 0.0).asDiagonal();
  prob.target = Eigen::Vector3d(0.0, 0.0, 0.9);
  prob.bound = 0.5;
  const drdid::DantzigResult res = drdid::dantzig_solve(prob);
  CHECK(res.escalations == 2);
  CHECK(res.bound_used == doctest::Approx(1.125));
  CHECK((prob.target + prob.gram * res.w).lpNorm<Eigen::Infinity>() <=
        res.bound_used + 1e-9);

  prob.target[2] = 100.0;
  CHECK_THROWS_AS(drdid::dantzig_solve(prob), drdid::Infeasible);
}

TEST_CASE("oracle agreement survives escalation") {
  drdid::DantzigProblem prob;
  prob.gram = Eigen::Vector3d(1.0, 1.0, 0.0).asDiagonal();
  prob.target = Eigen::Vector3d(0.4, -0.2, 0.9);
  prob.bound = 0.5;
  const drdid::DantzigResult res = drdid::dantzig_solve(prob);
  CHECK(res.escalations > 0);
  CHECK_FALSE(oracles::dantzig_bfs(prob.gram, prob.target, prob.bound).has_value());
  const auto oracle = oracles::dantzig_bfs(prob.gram, prob.target, res.bound_used);
  REQUIRE(oracle.has_value());
  CHECK(res.w.lpNorm<1>() == doctest::Approx(oracle->lpNorm<1>()).epsilon(1e-6));
}

}  // TEST_SUITE
