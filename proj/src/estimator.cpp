#include "drdid/estimator.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "drdid/solvers.hpp"

namespace drdid {

PseudoOutcome pseudo_outcome(const Sample& sample, const NuisanceFit& nuisance) {
  const Eigen::Index n = sample.n();
  if (nuisance.pi_hat.size() != n || nuisance.phi1_hat.size() != n ||
      nuisance.phi0_hat.size() != n) {
    throw DimensionMismatch("nuisance fit does not match sample size");
  }
  PseudoOutcome out;
  out.s_hat.resize(n);
  out.rho_hat.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double pi = nuisance.pi_hat[i];
    if (!(pi > 0.0 && pi < 1.0)) {
      throw DataError("pi_hat outside (0,1) at row " + std::to_string(i));
    }
    const double rho = sample.d[i] == 1 ? 1.0 / pi : -1.0 / (1.0 - pi);
    const double adjusted = sample.dy[i] - (1.0 - pi) * nuisance.phi1_hat[i] -
                            pi * nuisance.phi0_hat[i];
    out.rho_hat[i] = rho;
    out.s_hat[i] = rho * adjusted;
  }
  if (!out.s_hat.allFinite()) {
    throw NonFiniteValue("pseudo-outcome contains non-finite values");
  }
  return out;
}

namespace {

double sample_sd(const Eigen::VectorXd& v) {
  const double mean = v.mean();
  return std::sqrt((v.array() - mean).square().sum() /
                   static_cast<double>(v.size() - 1));
}

}  // namespace

DrDidFit fit_drdid(const Sample& sample, const PseudoOutcome& pseudo,
                   const FitOptions& options) {
  const Eigen::Index n = sample.n();
  const Eigen::Index p = sample.p();
  if (pseudo.s_hat.size() != n) {
    throw DimensionMismatch("pseudo-outcome does not match sample size");
  }

  auto [spec, psi] = build_basis(sample.z, options.degree);
  const ProjectionCache cache(std::move(psi));

  const Eigen::VectorXd s_tilde = cache.residualize(pseudo.s_hat);
  const Eigen::MatrixXd x_tilde = cache.residualize(sample.x);

  DrDidFit fit;
  fit.basis = spec;
  fit.sigma_s = sample_sd(pseudo.s_hat);
  fit.lambda = options.lambda.value_or(
      options.c_lambda * fit.sigma_s *
      std::sqrt(std::log(static_cast<double>(p)) / static_cast<double>(n)));

  LassoProblem prob;
  prob.a = x_tilde;
  prob.s = s_tilde;
  prob.lambda = fit.lambda;
  prob.tol = options.tol;
  prob.max_iter = options.max_iter;
  const LassoResult res = lasso_solve(prob);
  fit.beta_hat = res.coef;
  fit.lasso_iterations = res.iterations;
  fit.lasso_converged = res.converged;

  fit.gamma_hat = cache.coef(pseudo.s_hat - sample.x * fit.beta_hat);
  fit.residuals =
      pseudo.s_hat - sample.x * fit.beta_hat - cache.psi() * fit.gamma_hat;
  return fit;
}

double predict_att(const DrDidFit& fit, const Eigen::VectorXd& x0, double z0) {
  if (x0.size() != fit.beta_hat.size()) {
    throw DimensionMismatch("predict_att: x0 length != p");
  }
  return x0.dot(fit.beta_hat) + eval_basis(fit.basis, z0).dot(fit.gamma_hat);
}

Eigen::VectorXd ipw_pseudo_outcome(const Eigen::VectorXi& d,
                                   const Eigen::VectorXd& dy,
                                   const Eigen::VectorXd& pi_hat) {
  if (d.size() != dy.size() || pi_hat.size() != dy.size()) {
    throw DimensionMismatch("ipw_pseudo_outcome: length mismatch");
  }
  Eigen::VectorXd out(dy.size());
  for (Eigen::Index i = 0; i < dy.size(); ++i) {
    const double rho = d[i] == 1 ? 1.0 / pi_hat[i] : -1.0 / (1.0 - pi_hat[i]);
    out[i] = rho * dy[i];
  }
  return out;
}

SemiDidFit fit_semidid(const Sample& sample, int degree) {
  const Eigen::Index n = sample.n();
  const Eigen::Index p = sample.p();
  const Eigen::Index k = 2 * static_cast<Eigen::Index>(degree) + 1;
  if (n <= p + k) {
    throw Infeasible("semi-did needs n > p + k_n, got n=" + std::to_string(n) +
                     " p=" + std::to_string(p) + " k_n=" + std::to_string(k));
  }

  const L1LogisticFit logit = fit_l1_logistic(sample.x, sample.d, 0.0);
  if (logit.separation) {
    std::fprintf(stderr, "event=warn module=estimator msg=semidid_separation\n");
  }
  Eigen::VectorXd pi = predict_logistic(logit, sample.x);
  // Fixed division guard only; the baseline does not share the estimator's
  // overlap tuning.
  validate_overlap(pi, 1e-3);
  const Eigen::VectorXd pseudo = ipw_pseudo_outcome(sample.d, sample.dy, pi);

  auto [spec, psi] = build_basis(sample.z, degree);
  Eigen::MatrixXd a(n, p + k);
  a.leftCols(p) = sample.x;
  a.rightCols(k) = psi;

  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < p + k) {
    throw SingularDesign("semi-did design matrix is rank deficient");
  }
  SemiDidFit fit;
  fit.basis = spec;
  const Eigen::VectorXd coef = qr.solve(pseudo);
  fit.beta_hat = coef.head(p);
  fit.gamma_hat = coef.tail(k);
  fit.residuals = pseudo - a * coef;

  // HC0 sandwich: (A'A)^-1 (sum r_i^2 a_i a_i') (A'A)^-1.
  const Eigen::MatrixXd ata = a.transpose() * a;
  const Eigen::MatrixXd meat =
      a.transpose() * fit.residuals.array().square().matrix().asDiagonal() * a;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(ata);
  fit.cov = ldlt.solve(ldlt.solve(meat).transpose());
  return fit;
}

}  // namespace drdid
