#pragma once

#include <optional>

#include "drdid/nuisance.hpp"
#include "drdid/sieve.hpp"

namespace drdid {

// Doubly robust transformed outcome. rho_hat is the inverse-propensity
// contrast (d - pi)/(pi(1-pi)), so 1/pi on treated rows and -1/(1-pi) on
// control rows; s_hat = rho * (dy - (1-pi)*phi1 - pi*phi0) has conditional
// mean equal to the treatment effect surface when either nuisance block is
// correct.
struct PseudoOutcome {
  Eigen::VectorXd s_hat;
  Eigen::VectorXd rho_hat;
};

PseudoOutcome pseudo_outcome(const Sample& sample, const NuisanceFit& nuisance);

struct FitOptions {
  int degree = 8;                  // sieve degree, k_n = 2*degree + 1
  std::optional<double> lambda;    // fixed penalty; empty selects the rule
  double c_lambda = 1.0;           // multiplier on sd(s)*sqrt(log(p)/n)
  double tol = 1e-8;
  int max_iter = 100000;
};

// Second-stage estimate of the effect surface x'beta + psi(z)'gamma. The
// joint penalized problem is solved by profiling the sieve block out:
// beta comes from a Lasso of the residualized s on the residualized x,
// gamma from an exact least-squares refit. residuals = s - x*beta - psi*gamma
// are orthogonal to the retained basis columns by construction.
struct DrDidFit {
  Eigen::VectorXd beta_hat;
  Eigen::VectorXd gamma_hat;
  BasisSpec basis;
  double lambda = 0.0;
  double sigma_s = 0.0;
  Eigen::VectorXd residuals;
  int lasso_iterations = 0;
  bool lasso_converged = true;
};

DrDidFit fit_drdid(const Sample& sample, const PseudoOutcome& pseudo,
                   const FitOptions& options = {});

double predict_att(const DrDidFit& fit, const Eigen::VectorXd& x0, double z0);

// Unpenalized benchmark: full-sample logistic propensity on x alone, plain
// inverse-propensity pseudo-outcome rho*dy with no outcome augmentation,
// then OLS of it on [x, psi]. cov is the heteroskedasticity-robust sandwich
// for the stacked (beta, gamma) coefficients. Requires n > p + k_n.
struct SemiDidFit {
  Eigen::VectorXd beta_hat;
  Eigen::VectorXd gamma_hat;
  BasisSpec basis;
  Eigen::MatrixXd cov;
  Eigen::VectorXd residuals;
};

SemiDidFit fit_semidid(const Sample& sample, int degree);

// The plain inverse-propensity transform used by the benchmark.
Eigen::VectorXd ipw_pseudo_outcome(const Eigen::VectorXi& d,
                                   const Eigen::VectorXd& dy,
                                   const Eigen::VectorXd& pi_hat);

}  // namespace drdid
