// End-to-end acceptance checks. Each criterion prints one [PASS]/[FAIL]
// line with its key measurements and elapsed time; the exit code is the
// number of failed criteria. argv[1] names the command-line binary used by
// the determinism criterion.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "drdid/csv.hpp"
#include "drdid/estimator.hpp"
#include "drdid/inference.hpp"
#include "drdid/rng.hpp"
#include "drdid/simulation.hpp"
#include "drdid/solvers.hpp"
#include "oracles.hpp"

namespace {

constexpr int kThreads = 4;

struct Criterion {
  int id;
  std::string detail;
  bool pass = false;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::string fmt(const char* pattern, ...) {
  char buf[512];
  va_list args;
  va_start(args, pattern);
  std::vsnprintf(buf, sizeof(buf), pattern, args);
  va_end(args);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return "<missing:" + path + ">";
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool within(double v, double lo, double hi) { return v >= lo && v <= hi; }

// ---------------------------------------------------------------------------
// 1. Main design: n=500, p=50 coverage and mse against the reference table.

Criterion criterion_1() {
  Criterion c{1, "", false};
  drdid::DgpConfig cfg;
  cfg.family = drdid::DgpFamily::kDgp1;
  cfg.n = 500;
  cfg.p = 50;
  cfg.seed = 20260801;
  drdid::TargetSpec targets;  // defaults: 20 coords, 20 z points, level .90
  const auto t0 = std::chrono::steady_clock::now();
  const drdid::McReport rep = drdid::run_mc(
      cfg, drdid::EstimatorKind::kDrDid, 200, targets, drdid::Tuning{}, kThreads);
  const double elapsed = seconds_since(t0);

  const double kRefLinMse = 0.0536;
  const double kRefNlMse = 0.1501;
  const bool ok = rep.feasible && rep.failures == 0 &&
                  within(rep.linear.coverage, 0.80, 0.93) &&
                  within(rep.nonparametric.coverage, 0.78, 0.93) &&
                  within(rep.linear.mse, kRefLinMse / 2.0, kRefLinMse * 2.0) &&
                  within(rep.nonparametric.mse, kRefNlMse / 2.0, kRefNlMse * 2.0) &&
                  elapsed < 900.0;
  c.pass = ok;
  c.detail = fmt(
      "n=500 p=50 reps=200: lin_cov=%.4f nl_cov=%.4f lin_mse=%.4f nl_mse=%.4f "
      "failures=%d [%.1fs]",
      rep.linear.coverage, rep.nonparametric.coverage, rep.linear.mse,
      rep.nonparametric.mse, rep.failures, elapsed);
  return c;
}

// ---------------------------------------------------------------------------
// 2. Ultra-high-dimensional design: n=200, p=500 stays accurate and fast.

Criterion criterion_2() {
  Criterion c{2, "", false};
  drdid::DgpConfig cfg;
  cfg.family = drdid::DgpFamily::kDgp1;
  cfg.n = 200;
  cfg.p = 500;
  cfg.seed = 20260802;
  drdid::TargetSpec targets;
  const auto t0 = std::chrono::steady_clock::now();
  const drdid::McReport rep = drdid::run_mc(
      cfg, drdid::EstimatorKind::kDrDid, 50, targets, drdid::Tuning{}, kThreads);
  const double elapsed = seconds_since(t0);

  const bool ok = rep.feasible && rep.failures == 0 &&
                  rep.linear.coverage >= 0.75 && rep.linear.mse <= 0.30 &&
                  elapsed < 900.0;
  c.pass = ok;
  c.detail = fmt(
      "n=200 p=500 reps=50: lin_cov=%.4f lin_mse=%.4f nl_cov=%.4f failures=%d "
      "[%.1fs]",
      rep.linear.coverage, rep.linear.mse, rep.nonparametric.coverage,
      rep.failures, elapsed);
  return c;
}

// ---------------------------------------------------------------------------
// 3. Interval efficiency against the unpenalized benchmark on the AR design.

Criterion criterion_3() {
  Criterion c{3, "", false};
  drdid::DgpConfig cfg;
  cfg.family = drdid::DgpFamily::kDgp2;
  cfg.rho = 0.5;
  cfg.n = 200;
  cfg.p = 50;
  cfg.seed = 20260803;
  drdid::TargetSpec targets;
  targets.nonparametric = false;
  const auto t0 = std::chrono::steady_clock::now();
  const drdid::McReport dr = drdid::run_mc(
      cfg, drdid::EstimatorKind::kDrDid, 100, targets, drdid::Tuning{}, kThreads);
  const drdid::McReport semi = drdid::run_mc(
      cfg, drdid::EstimatorKind::kSemiDid, 100, targets, drdid::Tuning{},
      kThreads);

  drdid::DgpConfig wide = cfg;
  wide.p = 500;
  const drdid::McReport semi_wide = drdid::run_mc(
      wide, drdid::EstimatorKind::kSemiDid, 2, targets, drdid::Tuning{}, 1);
  const double elapsed = seconds_since(t0);

  const bool ok = dr.feasible && semi.feasible &&
                  dr.linear.ci_length < semi.linear.ci_length / 3.0 &&
                  !semi_wide.feasible;
  c.pass = ok;
  c.detail = fmt(
      "rho=0.5 n=200 p=50: ci(drdid)=%.4f ci(semidid)=%.4f wide_infeasible=%s "
      "[%.1fs]",
      dr.linear.ci_length, semi.linear.ci_length,
      semi_wide.feasible ? "no" : "yes", elapsed);
  return c;
}

// ---------------------------------------------------------------------------
// 4. Double robustness: a wrong block is harmless alone, fatal in tandem.

Criterion criterion_4() {
  Criterion c{4, "", false};
  drdid::DgpConfig cfg;
  cfg.family = drdid::DgpFamily::kDgp1;
  cfg.n = 5000;
  cfg.p = 10;
  cfg.seed = 20260804;
  drdid::TargetSpec targets;
  targets.linear_coords = {1};
  targets.nonparametric = false;
  const int reps = 40;

  auto runner_for = [](std::optional<drdid::MisspecifyTarget> target) {
    return [target](const drdid::Sample& s, const drdid::TruthInfo& truth,
                    std::uint64_t) {
      drdid::NuisanceFit nuis = drdid::nuisance_from_truth(s, truth, 0.01);
      if (target) {
        nuis = drdid::misspecify(nuis, s, *target,
                                 drdid::MisspecifyMode::kConstant);
      }
      const drdid::DrDidFit fit =
          drdid::fit_drdid(s, drdid::pseudo_outcome(s, nuis));
      Eigen::VectorXd xi = Eigen::VectorXd::Zero(s.p());
      xi[0] = 1.0;
      const drdid::BetaInference inf =
          drdid::debias_beta(s, fit, xi, std::nullopt, 0.90);
      drdid::RepOutcome out;
      out.lin_est = Eigen::VectorXd::Constant(1, inf.t_hat);
      out.lin_se = Eigen::VectorXd::Constant(1, inf.se);
      out.ok = true;
      return out;
    };
  };

  const auto t0 = std::chrono::steady_clock::now();
  const drdid::McReport wrong_phi = drdid::run_mc_with(
      cfg, runner_for(drdid::MisspecifyTarget::kOutcomes), reps, targets,
      kThreads);
  const drdid::McReport wrong_pi = drdid::run_mc_with(
      cfg, runner_for(drdid::MisspecifyTarget::kPropensity), reps, targets,
      kThreads);
  const drdid::McReport wrong_both = drdid::run_mc_with(
      cfg, runner_for(drdid::MisspecifyTarget::kBoth), reps, targets, kThreads);
  const double elapsed = seconds_since(t0);

  auto mc_se = [reps](const drdid::McReport& r) {
    return r.linear.empirical_sd / std::sqrt(static_cast<double>(reps));
  };
  const bool ok = std::abs(wrong_phi.linear.bias) < 3.0 * mc_se(wrong_phi) &&
                  std::abs(wrong_pi.linear.bias) < 3.0 * mc_se(wrong_pi) &&
                  std::abs(wrong_both.linear.bias) >= 3.0 * mc_se(wrong_both) &&
                  elapsed < 600.0;
  c.pass = ok;
  c.detail = fmt(
      "bias/mc_se: wrong_phi=%.4f/%.4f wrong_pi=%.4f/%.4f both=%.4f/%.4f "
      "[%.1fs]",
      wrong_phi.linear.bias, mc_se(wrong_phi), wrong_pi.linear.bias,
      mc_se(wrong_pi), wrong_both.linear.bias, mc_se(wrong_both), elapsed);
  return c;
}

// ---------------------------------------------------------------------------
// 5. Solver optima agree with brute-force oracles and carry certificates.

Criterion criterion_5() {
  Criterion c{5, "", false};
  const auto t0 = std::chrono::steady_clock::now();
  drdid::Rng rng = drdid::Rng(505);

  int lasso_ok = 0;
  const int lasso_trials = 50;
  for (int trial = 0; trial < lasso_trials; ++trial) {
    drdid::LassoProblem prob;
    // Resample until the Gram is well conditioned; the grid oracle's
    // bracketing argument needs cond <= ~40.
    for (;;) {
      prob.a.resize(25, 3);
      for (Eigen::Index i = 0; i < prob.a.size(); ++i) {
        prob.a(i % 25, i / 25) = rng.normal();
      }
      const Eigen::MatrixXd gram = prob.a.transpose() * prob.a / 25.0;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
      if (eig.eigenvalues().minCoeff() > 0.0 &&
          eig.eigenvalues().maxCoeff() / eig.eigenvalues().minCoeff() <= 30.0) {
        break;
      }
    }
    prob.s.resize(25);
    for (Eigen::Index i = 0; i < 25; ++i) prob.s[i] = rng.normal();
    prob.lambda = 0.05 + 0.4 * rng.uniform();
    const Eigen::VectorXd mine = drdid::lasso_solve(prob).coef;
    const Eigen::VectorXd grid = oracles::lasso_grid(prob);
    if (std::abs(drdid::lasso_objective(prob, mine) -
                 drdid::lasso_objective(prob, grid)) <= 1e-5) {
      ++lasso_ok;
    }
  }

  int dantzig_ok = 0;
  const int dantzig_trials = 50;
  for (int trial = 0; trial < dantzig_trials; ++trial) {
    Eigen::MatrixXd b(3, 3);
    for (Eigen::Index i = 0; i < 9; ++i) b(i % 3, i / 3) = rng.normal();
    drdid::DantzigProblem prob;
    prob.gram = b * b.transpose() + 0.5 * Eigen::MatrixXd::Identity(3, 3);
    prob.target = Eigen::Vector3d(2.0 * rng.normal(), 2.0 * rng.normal(),
                                  2.0 * rng.normal());
    prob.bound = 0.05 + 0.4 * rng.uniform();
    const drdid::DantzigResult res = drdid::dantzig_solve(prob);
    const auto oracle = oracles::dantzig_bfs(prob.gram, prob.target, prob.bound);
    if (oracle.has_value() &&
        std::abs(res.w.lpNorm<1>() - oracle->lpNorm<1>()) <= 1e-6) {
      ++dantzig_ok;
    }
  }

  int kkt_ok = 0;
  const int kkt_trials = 100;
  for (int trial = 0; trial < kkt_trials; ++trial) {
    const int n = 15 + static_cast<int>(rng.uniform_below(40));
    const int p = 2 + static_cast<int>(rng.uniform_below(12));  // p can top n
    drdid::LassoProblem prob;
    prob.a.resize(n, p);
    for (Eigen::Index i = 0; i < prob.a.size(); ++i) {
      prob.a(i % n, i / n) = rng.normal();
    }
    prob.s.resize(n);
    for (int i = 0; i < n; ++i) prob.s[i] = rng.normal();
    prob.lambda = 0.02 + 0.5 * rng.uniform();
    const drdid::LassoResult res = drdid::lasso_solve(prob);
    if (drdid::lasso_kkt_ok(prob, res.coef, 1e-7)) ++kkt_ok;
  }

  int feas_ok = 0;
  const int feas_trials = 100;
  for (int trial = 0; trial < feas_trials; ++trial) {
    const int m = 2 + static_cast<int>(rng.uniform_below(6));
    Eigen::MatrixXd b(m, m);
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i % m, i / m) = rng.normal();
    drdid::DantzigProblem prob;
    prob.gram = b * b.transpose() +
                0.1 * Eigen::MatrixXd::Identity(m, m);
    prob.target.resize(m);
    for (int i = 0; i < m; ++i) prob.target[i] = 2.0 * rng.normal();
    prob.bound = 0.02 + 0.5 * rng.uniform();
    const drdid::DantzigResult res = drdid::dantzig_solve(prob);
    const double gap =
        (prob.target + prob.gram * res.w).lpNorm<Eigen::Infinity>();
    if (gap <= res.bound_used + 1e-7) ++feas_ok;
  }

  const double elapsed = seconds_since(t0);
  c.pass = lasso_ok == lasso_trials && dantzig_ok == dantzig_trials &&
           kkt_ok == kkt_trials && feas_ok == feas_trials;
  c.detail = fmt(
      "grid_oracle=%d/%d bfs_oracle=%d/%d kkt=%d/%d feasibility=%d/%d [%.1fs]",
      lasso_ok, lasso_trials, dantzig_ok, dantzig_trials, kkt_ok, kkt_trials,
      feas_ok, feas_trials, elapsed);
  return c;
}

// ---------------------------------------------------------------------------
// 6. Structural invariants of the projection and the profiled second stage.

Criterion criterion_6() {
  Criterion c{6, "", false};
  const auto t0 = std::chrono::steady_clock::now();
  drdid::Rng rng = drdid::Rng(606);
  const int trials = 100;
  int idem_ok = 0, decomp_ok = 0, profile_ok = 0, sign_ok = 0;

  for (int trial = 0; trial < trials; ++trial) {
    const int n = 60 + static_cast<int>(rng.uniform_below(60));
    const int degree = 1 + static_cast<int>(rng.uniform_below(5));
    Eigen::VectorXd z(n), v(n);
    for (int i = 0; i < n; ++i) {
      z[i] = rng.uniform();
      v[i] = rng.normal();
    }
    const auto [spec, psi] = drdid::build_basis(z, degree);
    (void)spec;
    const drdid::ProjectionCache cache(psi);
    const Eigen::VectorXd pv = cache.project(v);
    const Eigen::VectorXd rv = cache.residualize(v);
    if ((cache.project(pv) - pv).lpNorm<Eigen::Infinity>() <=
        1e-10 * std::max(1.0, pv.lpNorm<Eigen::Infinity>())) {
      ++idem_ok;
    }
    if ((pv + rv - v).lpNorm<Eigen::Infinity>() <= 1e-12 * v.lpNorm<Eigen::Infinity>() +
            1e-12 &&
        std::abs(pv.dot(rv)) <= 1e-9 * v.squaredNorm()) {
      ++decomp_ok;
    }
  }

  for (int trial = 0; trial < trials; ++trial) {
    drdid::DgpConfig cfg;
    cfg.n = 120 + 2 * trial;
    cfg.p = 3;
    cfg.seed = 6000 + static_cast<std::uint64_t>(trial);
    const auto [s, truth] = drdid::gen_sample(cfg, 0);
    const drdid::NuisanceFit nuis = drdid::nuisance_from_truth(s, truth, 0.01);
    const drdid::PseudoOutcome pseudo = drdid::pseudo_outcome(s, nuis);
    drdid::FitOptions opt;
    opt.degree = 2;
    opt.lambda = 0.0;
    const drdid::DrDidFit fit = drdid::fit_drdid(s, pseudo, opt);

    const auto [spec, psi] = drdid::build_basis(s.z, 2);
    (void)spec;
    Eigen::MatrixXd a(s.n(), 3 + psi.cols());
    a.leftCols(3) = s.x;
    a.rightCols(psi.cols()) = psi;
    const Eigen::VectorXd joint = a.colPivHouseholderQr().solve(pseudo.s_hat);
    const double gap = std::max(
        (fit.beta_hat - joint.head(3)).lpNorm<Eigen::Infinity>(),
        (fit.gamma_hat - joint.tail(psi.cols())).lpNorm<Eigen::Infinity>());
    if (gap <= 1e-6) ++profile_ok;

    bool signs = true;
    for (Eigen::Index i = 0; i < s.n(); ++i) {
      const double rho = pseudo.rho_hat[i];
      signs = signs && (s.d[i] == 1 ? rho > 0.0 : rho < 0.0);
      const double expect = s.d[i] == 1 ? 1.0 / nuis.pi_hat[i]
                                        : -1.0 / (1.0 - nuis.pi_hat[i]);
      signs = signs && rho == expect;
    }
    if (signs) ++sign_ok;
  }

  const double elapsed = seconds_since(t0);
  c.pass = idem_ok == trials && decomp_ok == trials && profile_ok == trials &&
           sign_ok == trials;
  c.detail = fmt(
      "idempotent=%d/%d decomposition=%d/%d profile_vs_joint=%d/%d "
      "contrast_sign=%d/%d [%.1fs]",
      idem_ok, trials, decomp_ok, trials, profile_ok, trials, sign_ok, trials,
      elapsed);
  return c;
}

// ---------------------------------------------------------------------------
// 7. The one-step correction shrinks the slope bias and keeps variance >= 0.

Criterion criterion_7() {
  Criterion c{7, "", false};
  drdid::DgpConfig cfg;
  cfg.family = drdid::DgpFamily::kDgp1;
  cfg.n = 500;
  cfg.p = 200;
  cfg.seed = 20260807;
  const int reps = 100;
  const drdid::Tuning tuning;

  std::vector<double> t_hat(reps), beta_raw(reps), v_hat(reps);
  const auto t0 = std::chrono::steady_clock::now();
  drdid::parallel_for(reps, kThreads, [&](std::size_t r) {
    const auto [s, truth] = drdid::gen_sample(cfg, r);
    (void)truth;
    const drdid::NuisanceFit nuis = drdid::cross_fit(
        s, tuning.propensity, tuning.outcome, tuning.n_folds, tuning.epsilon,
        drdid::derive_seed(cfg.seed, r, 0xCF17));
    const drdid::DrDidFit fit =
        drdid::fit_drdid(s, drdid::pseudo_outcome(s, nuis));
    Eigen::VectorXd xi = Eigen::VectorXd::Zero(cfg.p);
    xi[0] = 1.0;
    const drdid::BetaInference inf =
        drdid::debias_beta(s, fit, xi, std::nullopt, 0.90);
    t_hat[r] = inf.t_hat;
    beta_raw[r] = fit.beta_hat[0];
    v_hat[r] = inf.v_hat;
  });
  const double elapsed = seconds_since(t0);

  double mean_t = 0.0, mean_b = 0.0;
  bool var_ok = true;
  for (int r = 0; r < reps; ++r) {
    mean_t += t_hat[r];
    mean_b += beta_raw[r];
    var_ok = var_ok && v_hat[r] >= 0.0;
  }
  mean_t /= reps;
  mean_b /= reps;

  const bool ok =
      std::abs(mean_t - 1.0) < std::abs(mean_b - 1.0) && var_ok;
  c.pass = ok;
  c.detail = fmt(
      "n=500 p=200 reps=100: |bias(debiased)|=%.4f |bias(raw)|=%.4f "
      "variance_nonneg=%s [%.1fs]",
      std::abs(mean_t - 1.0), std::abs(mean_b - 1.0), var_ok ? "yes" : "no",
      elapsed);
  return c;
}

// ---------------------------------------------------------------------------
// 8. The command-line tool writes byte-identical artifacts at any thread
// count for a fixed config and seed.

Criterion criterion_8(const std::string& cli) {
  Criterion c{8, "", false};
  if (cli.empty()) {
    c.detail = "no CLI binary path given";
    return c;
  }
  const auto t0 = std::chrono::steady_clock::now();
  namespace fs = std::filesystem;
  const fs::path root = fs::path("acceptance_cli");
  fs::remove_all(root);
  fs::create_directories(root);

  auto run = [&cli](const std::string& args) {
    const std::string cmd = cli + " " + args + " 2>> acceptance_cli/cli.log";
    return std::system(cmd.c_str());
  };

  {
    std::ofstream cfg(root / "sim.json");
    cfg << "{\n"
           "  \"family\": \"dgp1\", \"n\": 100, \"p\": 8, \"seed\": 77,\n"
           "  \"reps\": 6,\n"
           "  \"targets\": {\"z_points\": 5},\n"
           "  \"cells\": [{\"estimator\": \"drdid\"},\n"
           "             {\"n\": 40, \"p\": 60, \"estimator\": \"semidid\"}]\n"
           "}\n";
  }
  bool ok = true;
  ok = ok && run("simulate --config acceptance_cli/sim.json --out "
                 "acceptance_cli/sim_a --threads 1") == 0;
  ok = ok && run("simulate --config acceptance_cli/sim.json --out "
                 "acceptance_cli/sim_b --threads 4") == 0;
  int identical = 0, compared = 0;
  for (const char* name : {"report.csv", "report.txt", "report.json"}) {
    ++compared;
    const std::string a = read_file((root / "sim_a" / name).string());
    const std::string b = read_file((root / "sim_b" / name).string());
    if (!a.empty() && a.front() != '<' && a == b) ++identical;
  }

  {
    drdid::DgpConfig dcfg;
    dcfg.n = 150;
    dcfg.p = 6;
    dcfg.seed = 5;
    const auto [s, truth] = drdid::gen_sample(dcfg, 0);
    (void)truth;
    drdid::write_csv((root / "data.csv").string(), s);
    std::ofstream cfg(root / "est.json");
    cfg << "{\n"
           "  \"data\": {\"path\": \"acceptance_cli/data.csv\"},\n"
           "  \"seed\": 99,\n"
           "  \"targets\": {\"z_points\": 5, \"linear_coords\": [1, 2, 6]}\n"
           "}\n";
  }
  ok = ok && run("estimate --config acceptance_cli/est.json --out "
                 "acceptance_cli/est_a --threads 1") == 0;
  ok = ok && run("estimate --config acceptance_cli/est.json --out "
                 "acceptance_cli/est_b --threads 4") == 0;
  for (const char* name : {"estimate.json", "band.csv"}) {
    ++compared;
    const std::string a = read_file((root / "est_a" / name).string());
    const std::string b = read_file((root / "est_b" / name).string());
    if (!a.empty() && a.front() != '<' && a == b) ++identical;
  }
  const double elapsed = seconds_since(t0);

  c.pass = ok && identical == compared;
  c.detail = fmt("runs_ok=%s identical_artifacts=%d/%d [%.1fs]",
                 ok ? "yes" : "no", identical, compared, elapsed);
  return c;
}

void report(const Criterion& c, int& failures) {
  if (!c.pass) ++failures;
  std::printf("[%s] criterion %d: %s\n", c.pass ? "PASS" : "FAIL", c.id,
              c.detail.c_str());
  std::fflush(stdout);
}

Criterion guarded(int id, const std::function<Criterion()>& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    Criterion c{id, std::string("exception: ") + e.what(), false};
    return c;
  }
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "";
  int failures = 0;
  report(guarded(1, [] { return criterion_1(); }), failures);
  report(guarded(2, [] { return criterion_2(); }), failures);
  report(guarded(3, [] { return criterion_3(); }), failures);
  report(guarded(4, [] { return criterion_4(); }), failures);
  report(guarded(5, [] { return criterion_5(); }), failures);
  report(guarded(6, [] { return criterion_6(); }), failures);
  report(guarded(7, [] { return criterion_7(); }), failures);
  report(guarded(8, [&cli] { return criterion_8(cli); }), failures);
  return failures;
}
