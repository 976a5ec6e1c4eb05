#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "drdid/inference.hpp"

namespace drdid {

enum class DgpFamily { kDgp1, kDgp2 };

// Synthetic designs. Family 1 draws independent standard normal covariates;
// family 2 uses an AR(1) covariance rho^|j-k| and a baseline outcome that
// scales a shared shock by (z + x1)/sqrt(2). Both share the sparse effect
// vectors: treated-arm slope 2/i and control-arm slope 1/i on the first
// s_beta coordinates, propensity slope 1/i on the first s_theta, and an
// exponential nonparametric effect.
struct DgpConfig {
  DgpFamily family = DgpFamily::kDgp1;
  Eigen::Index n = 500;
  Eigen::Index p = 50;
  double rho = 0.5;
  int s_beta = 15;
  int s_theta = 10;
  std::uint64_t seed = 1;
};

// Draws replication `rep` of the design; the stream is keyed by (seed, rep)
// so any subset of reps can be regenerated independently.
std::pair<Sample, TruthInfo> gen_sample(const DgpConfig& cfg, std::uint64_t rep);

enum class EstimatorKind { kDrDid, kSemiDid };

struct TargetSpec {
  std::vector<int> linear_coords;  // 1-based; empty selects the default set
  int z_points = 20;
  bool linear = true;
  bool nonparametric = true;
  double level = 0.90;
};

// First min(15,p) coordinates joined with the last five, mixing signal and
// noise positions.
std::vector<int> default_linear_coords(Eigen::Index p);

// Equispaced grid over the central 90% of the standard normal z law.
Eigen::VectorXd default_z_grid(int points);

struct Tuning {
  int degree = 8;
  int n_folds = 2;
  double epsilon = 0.05;
  double c_lambda = 1.0;
  double c_prime = 1.0;
  double c_dprime = 1.0;
  LearnerSpec propensity{LearnerKind::kL1Logistic, 0.55};
  LearnerSpec outcome{LearnerKind::kL1Linear, 0.35};
};

struct BlockMetrics {
  bool valid = false;
  double bias = 0.0;
  double std_err = 0.0;       // mean of the estimated standard errors
  double empirical_sd = 0.0;  // sd of the estimates across reps
  double mse = 0.0;
  double coverage = 0.0;
  double ci_length = 0.0;
};

struct McReport {
  DgpConfig cfg;
  EstimatorKind estimator = EstimatorKind::kDrDid;
  int reps = 0;
  int failures = 0;
  bool feasible = true;
  BlockMetrics linear;
  BlockMetrics nonparametric;
  TargetSpec targets;
  Tuning tuning;
  std::string rng_algorithm;
};

// Per-replication estimates and standard errors returned by an estimator
// driver; run_mc aggregates them against the attached truth.
struct RepOutcome {
  bool ok = false;
  bool infeasible = false;
  std::string error;
  Eigen::VectorXd lin_est, lin_se;
  Eigen::VectorXd f_est, f_se;
};

using RepRunner = std::function<RepOutcome(
    const Sample& sample, const TruthInfo& truth, std::uint64_t rep)>;

// Generic Monte Carlo loop: generates reps in (seed, rep)-keyed streams,
// runs the driver (in parallel when parallelism > 1), and reduces in rep
// order so the report is identical at any thread count. Failed reps are
// excluded and counted; a run where every rep fails infeasible yields a
// feasible=false report, any other total failure throws AllRepsFailed.
McReport run_mc_with(const DgpConfig& cfg, const RepRunner& runner, int reps,
                     const TargetSpec& targets, int parallelism);

McReport run_mc(const DgpConfig& cfg, EstimatorKind estimator, int reps,
                const TargetSpec& targets, const Tuning& tuning,
                int parallelism);

// Long-format CSV plus an aligned text table; infeasible cells render "-".
// parse_report_csv reads the CSV back so a re-render reproduces both files.
void render_table(const std::vector<McReport>& reports,
                  const std::string& csv_path, const std::string& txt_path);

std::vector<McReport> parse_report_csv(const std::string& csv_path);

std::string family_name(DgpFamily family);
std::string estimator_name(EstimatorKind kind);

}  // namespace drdid
