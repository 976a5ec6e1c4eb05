#include "drdid/inference.hpp"

#include <cmath>
#include <cstdio>

#include "drdid/solvers.hpp"

namespace drdid {

// Wichura's AS 241 rational approximation (double precision branch).
double normal_quantile(double prob) {
  if (!(prob > 0.0 && prob < 1.0)) {
    throw ConfigError("normal_quantile needs prob in (0,1)");
  }
  const double q = prob - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2509.0809287301226727 * r + 33430.575583588128105) * r +
                 67265.770927008700853) * r + 45921.953931549871457) * r +
               13731.693765509461125) * r + 1971.5909503065514427) * r +
             133.14166789178437745) * r + 3.387132872796366608) /
           (((((((5226.495278852545703 * r + 28729.085735721942674) * r +
                 39307.89580009271061) * r + 21213.794301586595867) * r +
               5394.1960214247511077) * r + 687.1870074920579083) * r +
             42.313330701600911252) * r + 1.0);
  }
  double r = q < 0.0 ? prob : 1.0 - prob;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r +
                0.24178072517745061177) * r + 1.27045825245236838258) * r +
              3.64784832476320460504) * r + 5.7694972214606914055) * r +
            4.6303378461565452959) * r + 1.42343711074968357734) /
          (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r +
                0.0151986665636164571966) * r + 0.14810397642748007459) * r +
              0.68976733498510000455) * r + 1.6763848301838038494) * r +
            2.05319162663775882187) * r + 1.0);
  } else {
    r -= 5.0;
    val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                0.0012426609473880784386) * r + 0.026532189526576123093) * r +
              0.29656057182850489123) * r + 1.7848265399172913358) * r +
            5.4637849111641143699) * r + 6.6579046435011037772) /
          (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r +
                1.8463183175100546818e-5) * r + 7.868691311456132591e-4) * r +
              0.0148753612908506148525) * r + 0.13692988092273580531) * r +
            0.59983220655588793769) * r + 1.0);
  }
  return q < 0.0 ? -val : val;
}

DebiasContext make_debias_context(const Sample& sample, const DrDidFit& fit) {
  if (fit.residuals.size() != sample.n()) {
    throw DimensionMismatch("fit residuals do not match sample size");
  }
  DebiasContext ctx;
  ctx.n = sample.n();
  const Eigen::MatrixXd psi = eval_basis(fit.basis, sample.z);
  const ProjectionCache cache(psi);
  ctx.x_tilde = cache.residualize(sample.x);
  ctx.sigma_x_tilde =
      (ctx.x_tilde.transpose() * ctx.x_tilde) / static_cast<double>(ctx.n);
  ctx.eps = fit.residuals;
  ctx.eps_x_tilde =
      (ctx.x_tilde.transpose() * ctx.eps) / static_cast<double>(ctx.n);
  ctx.beta_hat = fit.beta_hat;
  return ctx;
}

BetaInference debias_beta(const DebiasContext& ctx, const Eigen::VectorXd& xi,
                          std::optional<double> lambda_prime, double level,
                          double c_prime) {
  const Eigen::Index p = ctx.beta_hat.size();
  if (xi.size() != p) throw DimensionMismatch("debias_beta: xi length != p");
  if (xi.isZero(0.0)) throw ZeroXi("debias_beta: xi is identically zero");
  if (!(level > 0.0 && level < 1.0)) {
    throw ConfigError("confidence level must be in (0,1)");
  }

  BetaInference out;
  out.level = level;
  out.lambda_prime = lambda_prime.value_or(
      c_prime * std::sqrt(std::log(static_cast<double>(p)) /
                          static_cast<double>(ctx.n)));

  DantzigProblem prob;
  prob.gram = ctx.sigma_x_tilde;
  prob.target = xi;
  prob.bound = out.lambda_prime;
  const DantzigResult sol = dantzig_solve(prob);
  out.w_hat = sol.w;
  out.escalations = sol.escalations;
  out.lambda_prime = sol.bound_used;

  out.t_hat = xi.dot(ctx.beta_hat) - out.w_hat.dot(ctx.eps_x_tilde);
  const Eigen::VectorXd proj = ctx.x_tilde * out.w_hat;
  out.v_hat = (proj.array().square() * ctx.eps.array().square()).mean();
  out.se = std::sqrt(out.v_hat / static_cast<double>(ctx.n));
  const double zq = normal_quantile(0.5 * (1.0 + level));
  out.ci_low = out.t_hat - zq * out.se;
  out.ci_high = out.t_hat + zq * out.se;
  return out;
}

BetaInference debias_beta(const Sample& sample, const DrDidFit& fit,
                          const Eigen::VectorXd& xi,
                          std::optional<double> lambda_prime, double level,
                          double c_prime) {
  return debias_beta(make_debias_context(sample, fit), xi, lambda_prime, level,
                     c_prime);
}

Eigen::MatrixXd compute_m_hat(const Eigen::MatrixXd& x,
                              const Eigen::MatrixXd& psi, double bound,
                              int threads) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  const Eigen::Index k = psi.cols();
  if (psi.rows() != n) throw DimensionMismatch("compute_m_hat: row mismatch");
  const Eigen::MatrixXd sigma_x =
      (x.transpose() * x) / static_cast<double>(n);
  Eigen::MatrixXd m(k, p);
  parallel_for(static_cast<std::size_t>(k), threads, [&](std::size_t j) {
    DantzigProblem prob;
    prob.gram = sigma_x;
    prob.target =
        -(x.transpose() * psi.col(static_cast<Eigen::Index>(j))) /
        static_cast<double>(n);
    prob.bound = bound;
    m.row(static_cast<Eigen::Index>(j)) = dantzig_solve(prob).w.transpose();
  });
  return m;
}

FInference debias_f(const Sample& sample, const DrDidFit& fit,
                    const Eigen::VectorXd& z_grid,
                    std::optional<double> lambda_dprime, double level,
                    double c_dprime, int threads,
                    const Eigen::MatrixXd* m_hat_override) {
  const Eigen::Index n = sample.n();
  const Eigen::Index p = sample.p();
  const Eigen::Index k = fit.basis.k_n();
  if (fit.residuals.size() != n) {
    throw DimensionMismatch("fit residuals do not match sample size");
  }
  if (z_grid.size() == 0) throw ConfigError("debias_f: empty z grid");
  if (!(level > 0.0 && level < 1.0)) {
    throw ConfigError("confidence level must be in (0,1)");
  }

  FInference out;
  out.level = level;
  out.z_grid = z_grid;
  out.lambda_dprime = lambda_dprime.value_or(
      c_dprime *
      std::sqrt(std::log(static_cast<double>(p)) / static_cast<double>(n)));

  const Eigen::MatrixXd psi = eval_basis(fit.basis, sample.z);
  if (m_hat_override != nullptr) {
    if (m_hat_override->rows() != k || m_hat_override->cols() != p) {
      throw DimensionMismatch("m_hat override has wrong shape");
    }
    out.m_hat = *m_hat_override;
  } else {
    out.m_hat = compute_m_hat(sample.x, psi, out.lambda_dprime, threads);
  }

  const Eigen::MatrixXd u = sample.x * out.m_hat.transpose();  // n x k
  const Eigen::MatrixXd diff = psi - u;
  const double inv_n = 1.0 / static_cast<double>(n);
  const Eigen::MatrixXd sigma_f = (diff.transpose() * psi) * inv_n;

  // Guard the one-step update against a near-singular design.
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(sigma_f);
  const double smin = svd.singularValues().minCoeff();
  const double smax = svd.singularValues().maxCoeff();
  if (!(smin > 0.0) || smax / smin > 1e12) {
    throw SingularSigmaF("sigma_f condition number exceeds 1e12");
  }
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(sigma_f);

  const Eigen::VectorXd moment = (diff.transpose() * fit.residuals) * inv_n;
  out.gamma_bar = fit.gamma_hat - lu.solve(moment);

  const Eigen::ArrayXd eps2 = fit.residuals.array().square();
  const Eigen::MatrixXd psi_w = eps2.sqrt().matrix().asDiagonal() * psi;
  const Eigen::MatrixXd u_w = eps2.sqrt().matrix().asDiagonal() * u;
  const Eigen::MatrixXd omega_f =
      (psi_w.transpose() * psi_w - u_w.transpose() * u_w) * inv_n;
  // v_f = sigma_f^-1 omega_f sigma_f^-1; the right inverse needs the
  // transposed factorization because sigma_f is not symmetric in sample.
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu_t(sigma_f.transpose());
  const Eigen::MatrixXd inv_omega = lu.solve(omega_f);
  out.v_f = lu_t.solve(inv_omega.transpose()).transpose();

  const Eigen::Index g = z_grid.size();
  out.f_bar.resize(g);
  out.sigma_z.resize(g);
  out.ci_low.resize(g);
  out.ci_high.resize(g);
  const double zq = normal_quantile(0.5 * (1.0 + level));
  const double root_n = std::sqrt(static_cast<double>(n));
  for (Eigen::Index i = 0; i < g; ++i) {
    const Eigen::VectorXd b = eval_basis(fit.basis, z_grid[i]);
    out.f_bar[i] = b.dot(out.gamma_bar);
    double var = b.dot(out.v_f * b);
    if (var <= 0.0) {
      ++out.n_clamped;
      var = 0.0;
    }
    out.sigma_z[i] = std::sqrt(var);
    const double half = zq * out.sigma_z[i] / root_n;
    out.ci_low[i] = out.f_bar[i] - half;
    out.ci_high[i] = out.f_bar[i] + half;
  }
  if (out.n_clamped > 0) {
    std::fprintf(stderr,
                 "event=warn module=inference msg=variance_clamped points=%d\n",
                 out.n_clamped);
  }
  return out;
}

void ci_band_export(const FInference& inf, const std::string& path,
                    const std::string& config_echo) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw DataError("cannot open band file for writing: " + path);
  std::fprintf(f, "# version=%s\n", kVersion);
  std::fprintf(f, "# config=%s\n", config_echo.c_str());
  std::fputs("z,f_bar,ci_low,ci_high,sigma_z\n", f);
  for (Eigen::Index i = 0; i < inf.z_grid.size(); ++i) {
    std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g\n", inf.z_grid[i],
                 inf.f_bar[i], inf.ci_low[i], inf.ci_high[i], inf.sigma_z[i]);
  }
  std::fclose(f);
}

}  // namespace drdid
