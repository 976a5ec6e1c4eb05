#pragma once

#include <Eigen/Dense>
#include <vector>

#include "drdid/common.hpp"

namespace drdid {

// Trigonometric sieve on the min-max normalized running variable. With
// degree J the basis is {1, sqrt(2)cos(2*pi*j*zt), sqrt(2)sin(2*pi*j*zt)}
// for j = 1..J, giving k_n = 2J + 1 columns. z_min/z_max anchor the
// normalization; out-of-range evaluation points are clamped to [0, 1].
struct BasisSpec {
  int degree = 8;
  double z_min = 0.0;
  double z_max = 1.0;

  int k_n() const { return 2 * degree + 1; }
};

// Builds the spec from the sample's z range and returns the n x k_n matrix.
// Requires degree >= 1, n > k_n and at least two distinct z values.
std::pair<BasisSpec, Eigen::MatrixXd> build_basis(const Eigen::VectorXd& z,
                                                  int degree);

// Basis row at a single point.
Eigen::VectorXd eval_basis(const BasisSpec& spec, double z0);

// Basis rows for a vector of points.
Eigen::MatrixXd eval_basis(const BasisSpec& spec, const Eigen::VectorXd& z);

// Orthogonal projector onto the column span of a basis matrix, held as a
// thin Q factor. Columns that are numerically dependent (relative singular
// value below 1e-10) are dropped from the span but kept in coefficient
// vectors as exact zeros.
class ProjectionCache {
 public:
  explicit ProjectionCache(Eigen::MatrixXd psi);

  // Projection of each column of v onto span(psi).
  Eigen::MatrixXd project(const Eigen::MatrixXd& v) const;
  // v - project(v).
  Eigen::MatrixXd residualize(const Eigen::MatrixXd& v) const;

  // Least-squares coefficients of y on the basis, length k_n, dropped
  // columns set to zero.
  Eigen::VectorXd coef(const Eigen::VectorXd& y) const;

  Eigen::Index rank() const { return rank_; }
  const std::vector<int>& dropped_columns() const { return dropped_; }
  const Eigen::MatrixXd& psi() const { return psi_; }

 private:
  Eigen::MatrixXd psi_;
  Eigen::MatrixXd q_;                       // n x rank, orthonormal
  Eigen::MatrixXd r_;                       // rank x rank, upper triangular
  Eigen::VectorXi perm_;                    // column permutation of the QR
  Eigen::Index rank_ = 0;
  std::vector<int> dropped_;
};

}  // namespace drdid
