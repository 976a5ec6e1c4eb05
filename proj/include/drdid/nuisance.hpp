#pragma once

#include <cstdint>
#include <optional>

#include "drdid/data_model.hpp"

namespace drdid {

enum class LearnerKind { kL1Logistic, kL1Linear, kOls, kConstant };

struct LearnerSpec {
  LearnerKind kind = LearnerKind::kL1Linear;
  // Multiplier on the default penalty sd(response)*sqrt(log(p)/n_train).
  double lambda_rule = 1.0;
};

// Out-of-fold nuisance values for every row: clipped propensity and the two
// arm-wise outcome-change regressions, each predicted by a learner trained
// on the complementary folds (treated rows only for phi1, control rows only
// for phi0).
struct NuisanceFit {
  Eigen::VectorXd pi_hat;
  Eigen::VectorXd phi1_hat;
  Eigen::VectorXd phi0_hat;
  Eigen::VectorXi fold_id;
  int n_folds = 1;
  double epsilon = 0.01;
  OverlapDiagnostics overlap;
};

NuisanceFit cross_fit(const Sample& sample, const LearnerSpec& propensity,
                      const LearnerSpec& outcome, int n_folds, double epsilon,
                      std::uint64_t seed);

// Oracle nuisances evaluated from the attached truth; used for estimator
// diagnostics and the robustness contrasts.
NuisanceFit nuisance_from_truth(const Sample& sample, const TruthInfo& truth,
                                double epsilon);

enum class MisspecifyTarget { kPropensity, kOutcomes, kBoth };

// kConstant replaces the block with sample-level constants (treated share
// for pi, arm means of dy for the phis); kWrongScale multiplies by 1.5.
// Propensities are re-clipped so the overlap invariant survives.
enum class MisspecifyMode { kConstant, kWrongScale };

NuisanceFit misspecify(const NuisanceFit& fit, const Sample& sample,
                       MisspecifyTarget target, MisspecifyMode mode);

// L1-penalized logistic regression of a 0/1 response, intercept unpenalized,
//   minimize -(1/n) sum [y_i u_i - log(1 + e^{u_i})] + lambda ||coef||_1,
// fit by iteratively reweighted coordinate descent. On separation the
// current iterate is returned with the flag set.
struct L1LogisticFit {
  Eigen::VectorXd coef;
  double intercept = 0.0;
  bool separation = false;
  bool converged = false;
  int iterations = 0;
};

L1LogisticFit fit_l1_logistic(const Eigen::MatrixXd& x,
                              const Eigen::VectorXi& y, double lambda,
                              double tol = 1e-7, int max_iter = 100);

Eigen::VectorXd predict_logistic(const L1LogisticFit& fit,
                                 const Eigen::MatrixXd& x);

struct L1LinearFit {
  Eigen::VectorXd coef;
  double intercept = 0.0;
};

L1LinearFit fit_l1_linear(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                          double lambda);

// Penalty level from the default rule.
double default_penalty(double response_sd, Eigen::Index n_features,
                       Eigen::Index n_train, double rule);

}  // namespace drdid
