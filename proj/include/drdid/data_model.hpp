#pragma once

#include <Eigen/Dense>
#include <functional>

#include "drdid/common.hpp"

namespace drdid {

// One cross-section of first-differenced panel data. dy is the observed
// outcome change between the two periods, d the treatment arm, x the
// high-dimensional covariates and z the scalar running variable for the
// nonparametric component. Construct through create() so the invariants
// (matching lengths, finite values, both arms present, >= 2 distinct z)
// hold for every instance downstream code sees.
struct Sample {
  Eigen::VectorXd dy;
  Eigen::VectorXi d;
  Eigen::MatrixXd x;
  Eigen::VectorXd z;

  Eigen::Index n() const { return dy.size(); }
  Eigen::Index p() const { return x.cols(); }

  static Sample create(Eigen::VectorXd dy, Eigen::VectorXi d,
                       Eigen::MatrixXd x, Eigen::VectorXd z);
};

// Ground truth attached to a simulated sample. beta0 is the linear effect
// contrast, f0 the nonparametric effect, pi0 the propensity. phi1/phi0 are
// the true arm-wise outcome-change regressions; they are needed to run the
// estimator with oracle nuisances.
struct TruthInfo {
  Eigen::VectorXd beta0;
  std::function<double(double)> f0;
  std::function<double(const Eigen::VectorXd&, double)> pi0;
  std::function<double(const Eigen::VectorXd&, double)> phi1;
  std::function<double(const Eigen::VectorXd&, double)> phi0;
};

struct OverlapDiagnostics {
  double min_pi_hat = 0.0;
  double max_pi_hat = 0.0;
  Eigen::Index n_clipped = 0;
  double treated_fraction = 0.0;  // mean of the clipped propensities
};

// Clips pi_hat into [epsilon, 1 - epsilon] in place and reports the summary.
// epsilon must lie in (0, 0.5).
OverlapDiagnostics validate_overlap(Eigen::VectorXd& pi_hat, double epsilon);

}  // namespace drdid
