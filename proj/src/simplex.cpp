#include "simplex.hpp"

#include <cmath>
#include <vector>

namespace drdid::detail {

namespace {

using RowMajor =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr double kPivTol = 1e-10;

}  // namespace

// Dense two-phase tableau simplex. Rows with negative rhs are sign-flipped
// and given an artificial variable; phase 1 drives the artificials to zero.
// Dantzig pricing with a permanent switch to Bland's rule after a stall, so
// degenerate programs terminate.
LpResult simplex_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                       const Eigen::VectorXd& c, int max_iter) {
  const Eigen::Index m = a.rows();
  const Eigen::Index n = a.cols();
  if (b.size() != m || c.size() != n) {
    throw std::invalid_argument("simplex_solve: dimension mismatch");
  }

  std::vector<Eigen::Index> art_rows;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (b[i] < 0.0) art_rows.push_back(i);
  }
  const Eigen::Index n_art = static_cast<Eigen::Index>(art_rows.size());
  const Eigen::Index n_slack = m;
  Eigen::Index width = n + n_slack + n_art;  // structural | slack | artificial

  // Tableau rows 0..m-1 are constraints with the rhs in the last column;
  // row m carries phase-2 reduced costs, row m+1 phase-1 reduced costs.
  RowMajor t = RowMajor::Zero(m + 2, width + 1);
  std::vector<double> flip(static_cast<std::size_t>(m), 1.0);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double f = b[i] < 0.0 ? -1.0 : 1.0;
    flip[static_cast<std::size_t>(i)] = f;
    t.block(i, 0, 1, n) = f * a.row(i);
    t(i, n + i) = f;
    t(i, width) = f * b[i];
  }
  std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) basis[static_cast<std::size_t>(i)] = n + i;
  for (Eigen::Index k = 0; k < n_art; ++k) {
    const Eigen::Index i = art_rows[static_cast<std::size_t>(k)];
    t(i, n + n_slack + k) = 1.0;
    basis[static_cast<std::size_t>(i)] = n + n_slack + k;
  }
  t.block(m, 0, 1, n) = c.transpose();
  for (Eigen::Index k = 0; k < n_art; ++k) {
    t.row(m + 1) -= t.row(art_rows[static_cast<std::size_t>(k)]);
  }
  // Artificial columns price at zero against their own rows.
  t.block(m + 1, n + n_slack, 1, n_art).setZero();

  if (max_iter <= 0) max_iter = 200 * static_cast<int>(m + n) + 2000;
  const double rc_tol = 1e-9 * std::max(1.0, c.cwiseAbs().maxCoeff());
  const double feas_tol =
      1e-8 * std::max(1.0, b.size() ? b.cwiseAbs().maxCoeff() : 1.0);

  auto pivot = [&](Eigen::Index row, Eigen::Index col) {
    t.row(row) /= t(row, col);
    for (Eigen::Index i = 0; i < m + 2; ++i) {
      if (i == row) continue;
      const double f = t(i, col);
      if (f != 0.0) t.row(i) -= f * t.row(row);
    }
    basis[static_cast<std::size_t>(row)] = col;
  };

  // Runs the simplex loop on cost row `crow` over columns [0, ncols).
  // Returns false if the iteration budget ran out.
  int iters_left = max_iter;
  auto run_phase = [&](Eigen::Index crow, Eigen::Index ncols) -> bool {
    bool bland = false;
    int stall = 0;
    double last_obj = t(crow, width);
    const int stall_limit = 2 * static_cast<int>(m + ncols) + 64;
    while (iters_left-- > 0) {
      Eigen::Index q = -1;
      if (!bland) {
        double best = -rc_tol;
        for (Eigen::Index j = 0; j < ncols; ++j) {
          const double rc = t(crow, j);
          if (rc < best) {
            best = rc;
            q = j;
          }
        }
      } else {
        for (Eigen::Index j = 0; j < ncols; ++j) {
          if (t(crow, j) < -rc_tol) {
            q = j;
            break;
          }
        }
      }
      if (q < 0) return true;  // optimal for this phase

      Eigen::Index r = -1;
      double best_ratio = 0.0;
      for (Eigen::Index i = 0; i < m; ++i) {
        const double aiq = t(i, q);
        if (aiq <= kPivTol) continue;
        const double ratio = t(i, width) / aiq;
        if (r < 0 || ratio < best_ratio - 1e-12 ||
            (ratio < best_ratio + 1e-12 &&
             (bland ? basis[static_cast<std::size_t>(i)] <
                          basis[static_cast<std::size_t>(r)]
                    : aiq > t(r, q)))) {
          r = i;
          best_ratio = ratio;
        }
      }
      if (r < 0) return true;  // unbounded; caller inspects objective
      pivot(r, q);
      const double obj = t(crow, width);
      if (obj < last_obj - 1e-12 * (1.0 + std::abs(last_obj))) {
        last_obj = obj;
        stall = 0;
      } else if (++stall > stall_limit) {
        bland = true;
      }
    }
    return false;
  };

  LpResult res;
  res.x = Eigen::VectorXd::Zero(n);
  res.y = Eigen::VectorXd::Zero(m);

  auto fill_duals = [&](Eigen::Index crow) {
    for (Eigen::Index i = 0; i < m; ++i) res.y[i] = -t(crow, n + i);
  };

  if (n_art > 0) {
    const bool done = run_phase(m + 1, width);
    const double phase1 = -t(m + 1, width);
    if (!done && phase1 > feas_tol) {
      res.status = LpStatus::kIterLimit;
      return res;
    }
    if (phase1 > feas_tol) {
      res.status = LpStatus::kInfeasible;
      res.objective = phase1;
      fill_duals(m + 1);
      return res;
    }
    // Pivot leftover basic artificials out; a row with no usable entry is
    // redundant and can be neutralized by zeroing it.
    for (Eigen::Index i = 0; i < m; ++i) {
      if (basis[static_cast<std::size_t>(i)] < n + n_slack) continue;
      Eigen::Index q = -1;
      for (Eigen::Index j = 0; j < n + n_slack; ++j) {
        if (std::abs(t(i, j)) > 1e-8) {
          q = j;
          break;
        }
      }
      if (q >= 0) {
        pivot(i, q);
      } else {
        t.row(i).setZero();
      }
    }
  }

  const bool done = run_phase(m, n + n_slack);
  res.status = done ? LpStatus::kOptimal : LpStatus::kIterLimit;
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index bj = basis[static_cast<std::size_t>(i)];
    if (bj < n) res.x[bj] = t(i, width);
  }
  res.objective = c.dot(res.x);
  fill_duals(m);
  return res;
}

}  // namespace drdid::detail
