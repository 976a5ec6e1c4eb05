#pragma once

#include <optional>
#include <string>

#include "drdid/estimator.hpp"

namespace drdid {

// Upper-tail standard normal quantile, |error| < 1e-13 over (0,1).
double normal_quantile(double prob);

// Shared intermediates for de-biasing several linear functionals of the same
// fit: the residualized covariates, their Gram matrix, and the fit residuals.
struct DebiasContext {
  Eigen::MatrixXd x_tilde;
  Eigen::MatrixXd sigma_x_tilde;  // x_tilde'x_tilde / n
  Eigen::VectorXd eps;            // fit residuals
  Eigen::VectorXd eps_x_tilde;    // (1/n) x_tilde' eps
  Eigen::VectorXd beta_hat;
  Eigen::Index n = 0;
};

DebiasContext make_debias_context(const Sample& sample, const DrDidFit& fit);

// One-step de-biased estimate of xi'beta with its plug-in variance,
//   t_hat = xi'beta_hat - w'(1/n) sum eps_i x_tilde_i,
//   w = argmin ||w||_1 s.t. ||xi + sigma_x_tilde w||_inf <= lambda_prime,
//   v_hat = (1/n) sum (w'x_tilde_i)^2 eps_i^2,
// and a two-sided interval t_hat +- z_{(1+level)/2} sqrt(v_hat/n).
struct BetaInference {
  double t_hat = 0.0;
  double v_hat = 0.0;
  double se = 0.0;  // sqrt(v_hat / n)
  double ci_low = 0.0;
  double ci_high = 0.0;
  double level = 0.9;
  double lambda_prime = 0.0;
  int escalations = 0;
  Eigen::VectorXd w_hat;
};

BetaInference debias_beta(const DebiasContext& ctx, const Eigen::VectorXd& xi,
                          std::optional<double> lambda_prime, double level,
                          double c_prime = 1.0);

BetaInference debias_beta(const Sample& sample, const DrDidFit& fit,
                          const Eigen::VectorXd& xi,
                          std::optional<double> lambda_prime, double level,
                          double c_prime = 1.0);

// Relaxed projection coefficients of each basis column on x: row j solves
// min ||m||_1 s.t. ||E_n[psi_j x'] - m'E_n[xx']||_inf <= bound.
Eigen::MatrixXd compute_m_hat(const Eigen::MatrixXd& x,
                              const Eigen::MatrixXd& psi, double bound,
                              int threads);

// Bias-corrected sieve coefficients and pointwise intervals for the
// nonparametric component on a z grid.
struct FInference {
  Eigen::VectorXd z_grid;
  Eigen::VectorXd f_bar;
  Eigen::VectorXd sigma_z;  // sqrt of the clamped quadratic form
  Eigen::VectorXd ci_low;
  Eigen::VectorXd ci_high;
  Eigen::VectorXd gamma_bar;
  Eigen::MatrixXd m_hat;
  Eigen::MatrixXd v_f;
  double level = 0.9;
  double lambda_dprime = 0.0;
  int n_clamped = 0;  // grid points whose variance estimate was not positive
};

FInference debias_f(const Sample& sample, const DrDidFit& fit,
                    const Eigen::VectorXd& z_grid,
                    std::optional<double> lambda_dprime, double level,
                    double c_dprime = 1.0, int threads = 1,
                    const Eigen::MatrixXd* m_hat_override = nullptr);

// Writes the band as CSV (z,f_bar,ci_low,ci_high,sigma_z) under two comment
// lines carrying the artifact version and a caller-provided config echo.
void ci_band_export(const FInference& inf, const std::string& path,
                    const std::string& config_echo);

}  // namespace drdid
