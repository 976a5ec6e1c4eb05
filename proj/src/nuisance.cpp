#include "drdid/nuisance.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "drdid/rng.hpp"
#include "drdid/sieve.hpp"
#include "drdid/solvers.hpp"

namespace drdid {

namespace {

// Learner feature map: covariates joined with a degree-3 trigonometric
// basis of z (constant column dropped, the learners carry their own
// intercept). The basis anchors come from the training rows.
constexpr int kZFeatureDegree = 3;

Eigen::MatrixXd learner_features(const Eigen::MatrixXd& x,
                                 const Eigen::VectorXd& z,
                                 const BasisSpec& spec) {
  const Eigen::MatrixXd zb = eval_basis(spec, z);
  Eigen::MatrixXd f(x.rows(), x.cols() + zb.cols() - 1);
  f.leftCols(x.cols()) = x;
  f.rightCols(zb.cols() - 1) = zb.rightCols(zb.cols() - 1);
  return f;
}

double sample_sd(const Eigen::VectorXd& v) {
  if (v.size() < 2) return 0.0;
  const double mean = v.mean();
  return std::sqrt((v.array() - mean).square().sum() /
                   static_cast<double>(v.size() - 1));
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m,
                          const std::vector<Eigen::Index>& idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(i) = m.row(idx[i]);
  return out;
}

Eigen::VectorXd take(const Eigen::VectorXd& v,
                     const std::vector<Eigen::Index>& idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = v[idx[i]];
  return out;
}

// Fits the requested learner and returns predictions at eval_f.
Eigen::VectorXd fit_predict(const LearnerSpec& spec, const Eigen::MatrixXd& train_f,
                            const Eigen::VectorXd& train_y,
                            const Eigen::MatrixXd& eval_f, bool binary) {
  const Eigen::Index n = train_f.rows();
  switch (spec.kind) {
    case LearnerKind::kConstant:
      return Eigen::VectorXd::Constant(eval_f.rows(), train_y.mean());
    case LearnerKind::kOls: {
      Eigen::MatrixXd a(n, train_f.cols() + 1);
      a.col(0).setOnes();
      a.rightCols(train_f.cols()) = train_f;
      const Eigen::VectorXd coef = a.colPivHouseholderQr().solve(train_y);
      Eigen::VectorXd out = Eigen::VectorXd::Constant(eval_f.rows(), coef[0]);
      out += eval_f * coef.tail(train_f.cols());
      if (binary) out = out.cwiseMax(0.0).cwiseMin(1.0);
      return out;
    }
    case LearnerKind::kL1Linear: {
      const double lambda = default_penalty(sample_sd(train_y), train_f.cols(),
                                            n, spec.lambda_rule);
      const L1LinearFit fit = fit_l1_linear(train_f, train_y, lambda);
      return (eval_f * fit.coef).array() + fit.intercept;
    }
    case LearnerKind::kL1Logistic: {
      const double lambda = default_penalty(sample_sd(train_y), train_f.cols(),
                                            n, spec.lambda_rule);
      Eigen::VectorXi y(n);
      for (Eigen::Index i = 0; i < n; ++i) y[i] = train_y[i] > 0.5 ? 1 : 0;
      const L1LogisticFit fit = fit_l1_logistic(train_f, y, lambda);
      if (fit.separation) {
        std::fprintf(stderr, "event=warn module=nuisance msg=separation\n");
      }
      return predict_logistic(fit, eval_f);
    }
  }
  throw ConfigError("unknown learner kind");
}

}  // namespace

double default_penalty(double response_sd, Eigen::Index n_features,
                       Eigen::Index n_train, double rule) {
  const double lp = std::log(static_cast<double>(n_features));
  return rule * response_sd * std::sqrt(std::max(0.0, lp) /
                                        static_cast<double>(n_train));
}

L1LinearFit fit_l1_linear(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                          double lambda) {
  const Eigen::Index n = x.rows();
  if (y.size() != n) throw DimensionMismatch("fit_l1_linear: y length != rows");
  const Eigen::RowVectorXd x_mean = x.colwise().mean();
  const double y_mean = y.mean();
  LassoProblem prob;
  prob.a = x.rowwise() - x_mean;
  prob.s = y.array() - y_mean;
  prob.lambda = lambda;
  const LassoResult res = lasso_solve(prob);
  L1LinearFit fit;
  fit.coef = res.coef;
  fit.intercept = y_mean - x_mean.dot(res.coef);
  return fit;
}

L1LogisticFit fit_l1_logistic(const Eigen::MatrixXd& x,
                              const Eigen::VectorXi& y, double lambda,
                              double tol, int max_iter) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  if (y.size() != n) throw DimensionMismatch("fit_l1_logistic: y length != rows");
  if (lambda < 0.0) throw ConfigError("logistic lambda must be >= 0");

  double y_mean = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) y_mean += y[i];
  y_mean /= static_cast<double>(n);

  L1LogisticFit fit;
  fit.coef = Eigen::VectorXd::Zero(p);
  if (y_mean <= 0.0 || y_mean >= 1.0) {
    // Degenerate response: the likelihood has no interior maximum.
    fit.intercept = y_mean <= 0.0 ? -30.0 : 30.0;
    fit.separation = true;
    return fit;
  }
  fit.intercept = std::log(y_mean / (1.0 - y_mean));

  const Eigen::VectorXd yd = y.cast<double>();
  constexpr double kLinCap = 30.0;
  constexpr double kMinWeight = 1e-5;

  Eigen::VectorXd warm = Eigen::VectorXd::Zero(p + 1);
  warm[0] = fit.intercept;
  for (int it = 1; it <= max_iter; ++it) {
    fit.iterations = it;
    Eigen::VectorXd u = (x * fit.coef).array() + fit.intercept;
    const Eigen::VectorXd prob =
        (1.0 / (1.0 + (-u.array().cwiseMax(-kLinCap).cwiseMin(kLinCap)).exp()))
            .matrix();
    const Eigen::VectorXd score_vec = yd - prob;
    const double score0 = score_vec.mean();
    const Eigen::VectorXd score = (x.transpose() * score_vec) / static_cast<double>(n);

    bool ok = std::abs(score0) <= tol;
    for (Eigen::Index j = 0; ok && j < p; ++j) {
      if (fit.coef[j] == 0.0) {
        ok = std::abs(score[j]) <= lambda + tol;
      } else {
        ok = std::abs(score[j] - lambda * (fit.coef[j] > 0.0 ? 1.0 : -1.0)) <= tol;
      }
    }
    if (ok) {
      fit.converged = true;
      return fit;
    }
    if (u.cwiseAbs().maxCoeff() > kLinCap) {
      fit.separation = true;
      return fit;
    }

    const Eigen::VectorXd w =
        (prob.array() * (1.0 - prob.array())).cwiseMax(kMinWeight).matrix();
    const Eigen::VectorXd z = u + score_vec.cwiseQuotient(w);
    const Eigen::VectorXd sw = w.cwiseSqrt();

    LassoProblem quad;
    quad.a.resize(n, p + 1);
    quad.a.col(0) = sw;
    quad.a.rightCols(p) = sw.asDiagonal() * x;
    quad.s = sw.cwiseProduct(z);
    quad.penalty_weights = Eigen::VectorXd::Ones(p + 1);
    quad.penalty_weights[0] = 0.0;
    quad.lambda = 2.0 * lambda;
    quad.tol = 1e-10;
    quad.init = warm;
    const LassoResult step = lasso_solve(quad);
    warm = step.coef;
    fit.intercept = step.coef[0];
    fit.coef = step.coef.tail(p);
  }
  return fit;
}

Eigen::VectorXd predict_logistic(const L1LogisticFit& fit,
                                 const Eigen::MatrixXd& x) {
  Eigen::VectorXd u = (x * fit.coef).array() + fit.intercept;
  u = u.cwiseMax(-30.0).cwiseMin(30.0);
  return (1.0 / (1.0 + (-u.array()).exp())).matrix();
}

NuisanceFit cross_fit(const Sample& sample, const LearnerSpec& propensity,
                      const LearnerSpec& outcome, int n_folds, double epsilon,
                      std::uint64_t seed) {
  const Eigen::Index n = sample.n();
  if (n_folds < 2) throw ConfigError("cross_fit needs n_folds >= 2");
  if (n < 4 * n_folds) {
    throw InsufficientStratum("cross_fit needs n >= 4*n_folds, got n=" +
                              std::to_string(n));
  }
  std::vector<Eigen::Index> treated, control;
  for (Eigen::Index i = 0; i < n; ++i) {
    (sample.d[i] == 1 ? treated : control).push_back(i);
  }
  if (static_cast<int>(treated.size()) < n_folds ||
      static_cast<int>(control.size()) < n_folds) {
    throw InsufficientStratum("each treatment arm needs >= n_folds rows");
  }

  // Stratified fold assignment: shuffle each arm, deal round-robin.
  Rng rng(derive_seed(seed, 0xCF01D));
  Eigen::VectorXi fold_id(n);
  for (auto* arm : {&treated, &control}) {
    auto& idx = *arm;
    for (std::size_t i = idx.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(rng.uniform_below(i));
      std::swap(idx[i - 1], idx[j]);
    }
    for (std::size_t i = 0; i < idx.size(); ++i) {
      fold_id[idx[i]] = static_cast<int>(i % static_cast<std::size_t>(n_folds));
    }
  }

  NuisanceFit fit;
  fit.fold_id = fold_id;
  fit.n_folds = n_folds;
  fit.epsilon = epsilon;
  fit.pi_hat.resize(n);
  fit.phi1_hat.resize(n);
  fit.phi0_hat.resize(n);

  const Eigen::VectorXd d_real = sample.d.cast<double>();
  for (int k = 0; k < n_folds; ++k) {
    std::vector<Eigen::Index> train, train1, train0, hold;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (fold_id[i] == k) {
        hold.push_back(i);
      } else {
        train.push_back(i);
        (sample.d[i] == 1 ? train1 : train0).push_back(i);
      }
    }
    const Eigen::VectorXd z_train = take(sample.z, train);
    // Degree shrinks on tiny folds so the basis stays overdetermined.
    const int degree = std::min<int>(
        kZFeatureDegree, static_cast<int>((z_train.size() - 2) / 2));
    const auto [zspec, zb] = build_basis(z_train, std::max(1, degree));
    (void)zb;
    const Eigen::MatrixXd f_train =
        learner_features(take_rows(sample.x, train), z_train, zspec);
    const Eigen::MatrixXd f_hold =
        learner_features(take_rows(sample.x, hold), take(sample.z, hold), zspec);
    const Eigen::MatrixXd f1 =
        learner_features(take_rows(sample.x, train1), take(sample.z, train1), zspec);
    const Eigen::MatrixXd f0 =
        learner_features(take_rows(sample.x, train0), take(sample.z, train0), zspec);

    const Eigen::VectorXd pi_k =
        fit_predict(propensity, f_train, take(d_real, train), f_hold, true);
    const Eigen::VectorXd phi1_k =
        fit_predict(outcome, f1, take(sample.dy, train1), f_hold, false);
    const Eigen::VectorXd phi0_k =
        fit_predict(outcome, f0, take(sample.dy, train0), f_hold, false);
    for (std::size_t i = 0; i < hold.size(); ++i) {
      fit.pi_hat[hold[i]] = pi_k[static_cast<Eigen::Index>(i)];
      fit.phi1_hat[hold[i]] = phi1_k[static_cast<Eigen::Index>(i)];
      fit.phi0_hat[hold[i]] = phi0_k[static_cast<Eigen::Index>(i)];
    }
  }
  fit.overlap = validate_overlap(fit.pi_hat, epsilon);
  return fit;
}

NuisanceFit nuisance_from_truth(const Sample& sample, const TruthInfo& truth,
                                double epsilon) {
  if (!truth.pi0 || !truth.phi1 || !truth.phi0) {
    throw ConfigError("truth is missing pi0/phi1/phi0 callables");
  }
  const Eigen::Index n = sample.n();
  NuisanceFit fit;
  fit.fold_id = Eigen::VectorXi::Zero(n);
  fit.n_folds = 1;
  fit.epsilon = epsilon;
  fit.pi_hat.resize(n);
  fit.phi1_hat.resize(n);
  fit.phi0_hat.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd xi = sample.x.row(i);
    fit.pi_hat[i] = truth.pi0(xi, sample.z[i]);
    fit.phi1_hat[i] = truth.phi1(xi, sample.z[i]);
    fit.phi0_hat[i] = truth.phi0(xi, sample.z[i]);
  }
  fit.overlap = validate_overlap(fit.pi_hat, epsilon);
  return fit;
}

NuisanceFit misspecify(const NuisanceFit& fit, const Sample& sample,
                       MisspecifyTarget target, MisspecifyMode mode) {
  NuisanceFit out = fit;
  const bool do_pi = target != MisspecifyTarget::kOutcomes;
  const bool do_phi = target != MisspecifyTarget::kPropensity;
  if (do_pi) {
    if (mode == MisspecifyMode::kConstant) {
      const double frac = sample.d.cast<double>().mean();
      out.pi_hat.setConstant(frac);
    } else {
      out.pi_hat *= 1.5;
    }
    out.overlap = validate_overlap(out.pi_hat, out.epsilon);
  }
  if (do_phi) {
    if (mode == MisspecifyMode::kConstant) {
      double sum1 = 0.0, sum0 = 0.0;
      Eigen::Index n1 = 0, n0 = 0;
      for (Eigen::Index i = 0; i < sample.n(); ++i) {
        if (sample.d[i] == 1) {
          sum1 += sample.dy[i];
          ++n1;
        } else {
          sum0 += sample.dy[i];
          ++n0;
        }
      }
      out.phi1_hat.setConstant(sum1 / static_cast<double>(n1));
      out.phi0_hat.setConstant(sum0 / static_cast<double>(n0));
    } else {
      out.phi1_hat *= 1.5;
      out.phi0_hat *= 1.5;
    }
  }
  return out;
}

}  // namespace drdid
