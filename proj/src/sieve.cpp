#include "drdid/sieve.hpp"

#include <cmath>
#include <string>

namespace drdid {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kSqrt2 = 1.4142135623730950488016887242097;
constexpr double kRankTol = 1e-10;

void fill_row(double zt, int degree, double* row) {
  row[0] = 1.0;
  for (int j = 1; j <= degree; ++j) {
    const double a = kTwoPi * j * zt;
    row[2 * j - 1] = kSqrt2 * std::cos(a);
    row[2 * j] = kSqrt2 * std::sin(a);
  }
}

}  // namespace

std::pair<BasisSpec, Eigen::MatrixXd> build_basis(const Eigen::VectorXd& z,
                                                  int degree) {
  if (degree < 1) throw ConfigError("basis degree must be >= 1");
  BasisSpec spec;
  spec.degree = degree;
  spec.z_min = z.minCoeff();
  spec.z_max = z.maxCoeff();
  if (!(spec.z_max > spec.z_min)) {
    throw DegenerateZ("z has no spread; cannot anchor the basis");
  }
  if (z.size() <= spec.k_n()) {
    throw BasisTooLarge("basis has k_n=" + std::to_string(spec.k_n()) +
                        " columns but only n=" + std::to_string(z.size()) +
                        " rows");
  }
  return {spec, eval_basis(spec, z)};
}

Eigen::VectorXd eval_basis(const BasisSpec& spec, double z0) {
  Eigen::VectorXd row(spec.k_n());
  double zt = (z0 - spec.z_min) / (spec.z_max - spec.z_min);
  zt = std::min(1.0, std::max(0.0, zt));
  fill_row(zt, spec.degree, row.data());
  return row;
}

Eigen::MatrixXd eval_basis(const BasisSpec& spec, const Eigen::VectorXd& z) {
  Eigen::MatrixXd psi(z.size(), spec.k_n());
  Eigen::VectorXd row(spec.k_n());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    // Same arithmetic as the scalar overload so the two agree bitwise.
    double zt = (z[i] - spec.z_min) / (spec.z_max - spec.z_min);
    zt = std::min(1.0, std::max(0.0, zt));
    fill_row(zt, spec.degree, row.data());
    psi.row(i) = row;
  }
  return psi;
}

ProjectionCache::ProjectionCache(Eigen::MatrixXd psi) : psi_(std::move(psi)) {
  if (psi_.rows() <= psi_.cols()) {
    throw BasisTooLarge("projection needs n > k_n, got n=" +
                        std::to_string(psi_.rows()) +
                        " k_n=" + std::to_string(psi_.cols()));
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(psi_);
  const Eigen::MatrixXd r_full = qr.matrixR();
  const double pivot0 = std::abs(r_full(0, 0));
  const Eigen::Index k = psi_.cols();
  rank_ = 0;
  // Column-pivoted QR orders |R(j,j)| decreasingly, so the cut is a prefix.
  for (Eigen::Index j = 0; j < k; ++j) {
    if (std::abs(r_full(j, j)) > kRankTol * pivot0) {
      ++rank_;
    } else {
      break;
    }
  }
  if (rank_ == 0) throw SingularDesign("basis matrix has numerical rank zero");
  perm_ = qr.colsPermutation().indices();
  for (Eigen::Index j = rank_; j < k; ++j) dropped_.push_back(perm_[j]);
  q_ = qr.householderQ() * Eigen::MatrixXd::Identity(psi_.rows(), rank_);
  r_ = r_full.topLeftCorner(rank_, rank_).triangularView<Eigen::Upper>();
}

Eigen::MatrixXd ProjectionCache::project(const Eigen::MatrixXd& v) const {
  if (v.rows() != psi_.rows()) {
    throw DimensionMismatch("project: v has " + std::to_string(v.rows()) +
                            " rows, basis has " + std::to_string(psi_.rows()));
  }
  return q_ * (q_.transpose() * v);
}

Eigen::MatrixXd ProjectionCache::residualize(const Eigen::MatrixXd& v) const {
  return v - project(v);
}

Eigen::VectorXd ProjectionCache::coef(const Eigen::VectorXd& y) const {
  if (y.size() != psi_.rows()) {
    throw DimensionMismatch("coef: y length does not match basis rows");
  }
  const Eigen::VectorXd qty = q_.transpose() * y;
  const Eigen::VectorXd head =
      r_.triangularView<Eigen::Upper>().solve(qty);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(psi_.cols());
  for (Eigen::Index j = 0; j < rank_; ++j) out[perm_[j]] = head[j];
  return out;
}

}  // namespace drdid
