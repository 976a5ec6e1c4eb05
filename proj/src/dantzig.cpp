#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <vector>

#include "drdid/solvers.hpp"
#include "simplex.hpp"

namespace drdid {

namespace {

using detail::LpResult;
using detail::LpStatus;

constexpr int kMaxEscalations = 10;
constexpr int kMaxOuter = 200;
constexpr double kPriceTol = 1e-9;

struct Restricted {
  std::vector<Eigen::Index> cols;  // active w coordinates
  std::vector<Eigen::Index> rows;  // active constraint indices
};

// LP data for min sum(u+v) over the active sets:
//   G_cs (u - v) <= bound - xi_c   and   -G_cs (u - v) <= bound + xi_c.
LpResult solve_restricted(const Eigen::MatrixXd& g, const Eigen::VectorXd& xi,
                          double bound, const Restricted& sets) {
  const Eigen::Index nc = static_cast<Eigen::Index>(sets.rows.size());
  const Eigen::Index ns = static_cast<Eigen::Index>(sets.cols.size());
  Eigen::MatrixXd gcs(nc, ns);
  for (Eigen::Index i = 0; i < nc; ++i) {
    for (Eigen::Index k = 0; k < ns; ++k) {
      gcs(i, k) = g(sets.rows[static_cast<std::size_t>(i)],
                    sets.cols[static_cast<std::size_t>(k)]);
    }
  }
  Eigen::MatrixXd a(2 * nc, 2 * ns);
  a.topLeftCorner(nc, ns) = gcs;
  a.topRightCorner(nc, ns) = -gcs;
  a.bottomLeftCorner(nc, ns) = -gcs;
  a.bottomRightCorner(nc, ns) = gcs;
  Eigen::VectorXd b(2 * nc);
  for (Eigen::Index i = 0; i < nc; ++i) {
    const double x = xi[sets.rows[static_cast<std::size_t>(i)]];
    b[i] = bound - x;
    b[nc + i] = bound + x;
  }
  return detail::simplex_solve(a, b, Eigen::VectorXd::Ones(2 * ns));
}

// Indices of the k largest |v[i]| with |v[i]| > floor, descending.
std::vector<Eigen::Index> top_abs(const Eigen::VectorXd& v, Eigen::Index k,
                                  double floor_val) {
  std::vector<Eigen::Index> idx;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > floor_val) idx.push_back(i);
  }
  std::sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
    return std::abs(v[a]) > std::abs(v[b]);
  });
  if (static_cast<Eigen::Index>(idx.size()) > k) idx.resize(k);
  return idx;
}

// Column pricing vector delta_j = sum_{i in C} G(i,j) * (y_up - y_low)_i.
Eigen::VectorXd price_columns(const Eigen::MatrixXd& g, const Restricted& sets,
                              const Eigen::VectorXd& y) {
  const Eigen::Index nc = static_cast<Eigen::Index>(sets.rows.size());
  Eigen::VectorXd diff(nc);
  for (Eigen::Index i = 0; i < nc; ++i) diff[i] = y[i] - y[nc + i];
  Eigen::VectorXd delta = Eigen::VectorXd::Zero(g.cols());
  for (Eigen::Index i = 0; i < nc; ++i) {
    delta += g.row(sets.rows[static_cast<std::size_t>(i)]).transpose() * diff[i];
  }
  return delta;
}

bool add_indices(std::vector<Eigen::Index>& set,
                 const std::vector<Eigen::Index>& add) {
  bool grew = false;
  for (Eigen::Index i : add) {
    if (std::find(set.begin(), set.end(), i) == set.end()) {
      set.push_back(i);
      grew = true;
    }
  }
  return grew;
}

// Solves the full program for a fixed bound. Returns the optimal w, or
// nullopt when infeasible. Column/row generation keeps the tableaus small;
// correctness does not depend on the heuristic start because every exit is
// certified by full pricing and a full feasibility scan.
std::optional<Eigen::VectorXd> solve_at_bound(const Eigen::MatrixXd& g,
                                              const Eigen::VectorXd& xi,
                                              double bound) {
  const Eigen::Index m = g.cols();
  if (xi.cwiseAbs().maxCoeff() <= bound) return Eigen::VectorXd::Zero(m);

  Restricted sets;
  if (m <= 80) {
    for (Eigen::Index i = 0; i < m; ++i) {
      sets.cols.push_back(i);
      sets.rows.push_back(i);
    }
  } else {
    const Eigen::VectorXd gxi = g * xi;
    for (Eigen::Index i : top_abs(xi, 12, 0.0)) sets.rows.push_back(i);
    add_indices(sets.cols, top_abs(gxi, 24, 0.0));
    add_indices(sets.rows, sets.cols);
    if (sets.cols.empty()) sets.cols.push_back(0);
    if (sets.rows.empty()) sets.rows.push_back(0);
  }

  const double feas_tol = 1e-9 * std::max({1.0, bound, xi.cwiseAbs().maxCoeff()});
  for (int outer = 0; outer < kMaxOuter; ++outer) {
    const LpResult lp = solve_restricted(g, xi, bound, sets);
    const Eigen::Index ns = static_cast<Eigen::Index>(sets.cols.size());

    if (lp.status == LpStatus::kIterLimit) break;

    if (lp.status == LpStatus::kInfeasible) {
      // Phase-1 pricing: a column can reduce the infeasibility only when
      // |delta_j| exceeds zero; with none outside the set, the full
      // program is infeasible as well.
      const Eigen::VectorXd delta = price_columns(g, sets, lp.y);
      std::vector<Eigen::Index> cand;
      for (Eigen::Index j : top_abs(delta, 16, kPriceTol)) {
        if (std::find(sets.cols.begin(), sets.cols.end(), j) == sets.cols.end()) {
          cand.push_back(j);
        }
      }
      if (cand.empty()) return std::nullopt;
      add_indices(sets.cols, cand);
      continue;
    }

    Eigen::VectorXd w = Eigen::VectorXd::Zero(m);
    for (Eigen::Index k = 0; k < ns; ++k) {
      w[sets.cols[static_cast<std::size_t>(k)]] = lp.x[k] - lp.x[ns + k];
    }

    const Eigen::VectorXd t = xi + g * w;
    Eigen::VectorXd viol(m);
    for (Eigen::Index i = 0; i < m; ++i) viol[i] = std::abs(t[i]) - bound;
    std::vector<Eigen::Index> new_rows;
    for (Eigen::Index i : top_abs(viol, 16, 0.0)) {
      if (viol[i] <= feas_tol) continue;
      if (std::find(sets.rows.begin(), sets.rows.end(), i) == sets.rows.end()) {
        new_rows.push_back(i);
      }
    }

    const Eigen::VectorXd delta = price_columns(g, sets, lp.y);
    std::vector<Eigen::Index> new_cols;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (std::abs(delta[j]) > 1.0 + kPriceTol &&
          std::find(sets.cols.begin(), sets.cols.end(), j) == sets.cols.end()) {
        new_cols.push_back(j);
      }
    }
    std::sort(new_cols.begin(), new_cols.end(), [&](Eigen::Index a, Eigen::Index b) {
      return std::abs(delta[a]) > std::abs(delta[b]);
    });
    if (static_cast<Eigen::Index>(new_cols.size()) > 16) new_cols.resize(16);

    if (new_rows.empty() && new_cols.empty()) return w;
    add_indices(sets.rows, new_rows);
    add_indices(sets.cols, new_cols);
  }

  // Generation stalled; fall back to the full tableau.
  Restricted full;
  for (Eigen::Index i = 0; i < m; ++i) {
    full.cols.push_back(i);
    full.rows.push_back(i);
  }
  const LpResult lp = solve_restricted(g, xi, bound, full);
  if (lp.status == LpStatus::kInfeasible) return std::nullopt;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(m);
  for (Eigen::Index k = 0; k < m; ++k) w[k] = lp.x[k] - lp.x[m + k];
  if (lp.status == LpStatus::kIterLimit) {
    if (((xi + g * w).cwiseAbs().maxCoeff()) > bound + feas_tol) {
      return std::nullopt;
    }
    std::fprintf(stderr,
                 "event=warn module=solvers msg=lp_iteration_cap m=%lld\n",
                 static_cast<long long>(m));
  }
  return w;
}

}  // namespace

DantzigResult dantzig_solve(const DantzigProblem& prob) {
  const Eigen::Index m = prob.gram.cols();
  if (prob.gram.rows() != m) throw DimensionMismatch("dantzig gram must be square");
  if (prob.target.size() != m) {
    throw DimensionMismatch("dantzig target length != gram size");
  }
  if (m == 0) throw DimensionMismatch("dantzig problem is empty");
  if (!(prob.bound >= 0.0)) throw ConfigError("dantzig bound must be >= 0");
  if (!prob.gram.allFinite() || !prob.target.allFinite()) {
    throw NonFiniteValue("dantzig inputs contain non-finite values");
  }

  double bound = prob.bound;
  for (int esc = 0; esc <= kMaxEscalations; ++esc) {
    if (const auto w = solve_at_bound(prob.gram, prob.target, bound)) {
      if (esc > 0) {
        std::fprintf(stderr,
                     "event=warn module=solvers msg=bound_escalated times=%d "
                     "bound=%.6g\n",
                     esc, bound);
      }
      return DantzigResult{*w, bound, esc};
    }
    bound = (bound == 0.0 ? 1e-12 : bound) * 1.5;
  }
  throw Infeasible("dantzig program infeasible after " +
                   std::to_string(kMaxEscalations) + " bound escalations");
}

}  // namespace drdid
