#include "drdid/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "drdid/rng.hpp"

namespace drdid {

std::string family_name(DgpFamily family) {
  return family == DgpFamily::kDgp1 ? "dgp1" : "dgp2";
}

std::string estimator_name(EstimatorKind kind) {
  return kind == EstimatorKind::kDrDid ? "drdid" : "semidid";
}

std::pair<Sample, TruthInfo> gen_sample(const DgpConfig& cfg,
                                        std::uint64_t rep) {
  const Eigen::Index n = cfg.n;
  const Eigen::Index p = cfg.p;
  if (n < 20) throw ConfigError("dgp needs n >= 20");
  if (p < 1) throw ConfigError("dgp needs p >= 1");
  if (cfg.family == DgpFamily::kDgp2 && !(cfg.rho >= 0.0 && cfg.rho < 1.0)) {
    throw ConfigError("dgp2 rho must lie in [0, 1)");
  }

  Eigen::VectorXd beta_treat = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd beta_ctrl = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(p);
  for (Eigen::Index j = 0; j < std::min<Eigen::Index>(p, cfg.s_beta); ++j) {
    beta_treat[j] = 2.0 / static_cast<double>(j + 1);
    beta_ctrl[j] = 1.0 / static_cast<double>(j + 1);
  }
  for (Eigen::Index j = 0; j < std::min<Eigen::Index>(p, cfg.s_theta); ++j) {
    theta[j] = 1.0 / static_cast<double>(j + 1);
  }

  Rng rng = Rng::stream(cfg.seed, rep);
  Eigen::VectorXd dy(n), z(n);
  Eigen::VectorXi d(n);
  Eigen::MatrixXd x(n, p);
  const double ar_tail = std::sqrt(1.0 - cfg.rho * cfg.rho);
  for (Eigen::Index i = 0; i < n; ++i) {
    z[i] = rng.normal();
    if (cfg.family == DgpFamily::kDgp1) {
      for (Eigen::Index j = 0; j < p; ++j) x(i, j) = rng.normal();
    } else {
      x(i, 0) = rng.normal();
      for (Eigen::Index j = 1; j < p; ++j) {
        x(i, j) = cfg.rho * x(i, j - 1) + ar_tail * rng.normal();
      }
    }
    double base1, base0;
    if (cfg.family == DgpFamily::kDgp1) {
      base0 = rng.normal();
      base1 = rng.normal();
    } else {
      const double shock = rng.normal();
      base0 = base1 = shock * (z[i] + x(i, 0)) / std::sqrt(2.0);
    }
    const double eps1 = rng.normal();
    const double eps0 = rng.normal();
    const double index = x.row(i).dot(theta);
    const double pi = 1.0 - 1.0 / (1.0 + std::exp(index));
    d[i] = rng.bernoulli(pi) ? 1 : 0;
    const double post1 = base1 + x.row(i).dot(beta_treat) + std::exp(z[i]) + eps1;
    const double post0 = base0 + x.row(i).dot(beta_ctrl) + eps0;
    dy[i] = d[i] == 1 ? post1 - base1 : post0 - base0;
  }

  TruthInfo truth;
  truth.beta0 = beta_treat - beta_ctrl;
  truth.f0 = [](double zv) { return std::exp(zv); };
  truth.pi0 = [theta](const Eigen::VectorXd& xi, double) {
    return 1.0 - 1.0 / (1.0 + std::exp(xi.dot(theta)));
  };
  truth.phi1 = [beta_treat](const Eigen::VectorXd& xi, double zv) {
    return xi.dot(beta_treat) + std::exp(zv);
  };
  truth.phi0 = [beta_ctrl](const Eigen::VectorXd& xi, double) {
    return xi.dot(beta_ctrl);
  };
  return {Sample::create(std::move(dy), std::move(d), std::move(x), std::move(z)),
          std::move(truth)};
}

std::vector<int> default_linear_coords(Eigen::Index p) {
  std::set<int> coords;
  for (int j = 1; j <= std::min<Eigen::Index>(15, p); ++j) coords.insert(j);
  for (Eigen::Index j = std::max<Eigen::Index>(1, p - 4); j <= p; ++j) {
    coords.insert(static_cast<int>(j));
  }
  return {coords.begin(), coords.end()};
}

Eigen::VectorXd default_z_grid(int points) {
  if (points < 1) throw ConfigError("z grid needs at least one point");
  const double hi = normal_quantile(0.95);
  const double lo = -hi;
  Eigen::VectorXd grid(points);
  if (points == 1) {
    grid[0] = 0.0;
    return grid;
  }
  for (int i = 0; i < points; ++i) {
    grid[i] = lo + (hi - lo) * static_cast<double>(i) /
                       static_cast<double>(points - 1);
  }
  return grid;
}

namespace {

std::vector<int> resolve_coords(const TargetSpec& targets, Eigen::Index p) {
  std::vector<int> coords = targets.linear_coords.empty()
                                ? default_linear_coords(p)
                                : targets.linear_coords;
  for (int c : coords) {
    if (c < 1 || c > p) {
      throw ConfigError("linear target coordinate " + std::to_string(c) +
                        " outside 1..p");
    }
  }
  return coords;
}

// Mean/sd/metric reduction for one block. Estimates arrive as a matrix with
// one row per successful rep, one column per target.
BlockMetrics reduce_block(const std::vector<Eigen::VectorXd>& est,
                          const std::vector<Eigen::VectorXd>& se,
                          const Eigen::VectorXd& truth, double level) {
  BlockMetrics m;
  const std::size_t reps = est.size();
  const Eigen::Index k = truth.size();
  if (reps == 0 || k == 0) return m;
  const double zq = normal_quantile(0.5 * (1.0 + level));
  double bias = 0.0, mse = 0.0, cover = 0.0, length = 0.0, mean_se = 0.0,
         emp_sd = 0.0;
  for (Eigen::Index j = 0; j < k; ++j) {
    double s1 = 0.0;
    for (std::size_t r = 0; r < reps; ++r) s1 += est[r][j];
    const double mean_est = s1 / static_cast<double>(reps);
    double s2 = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
      const double e = est[r][j];
      s2 += (e - mean_est) * (e - mean_est);
      bias += e - truth[j];
      mse += (e - truth[j]) * (e - truth[j]);
      cover += std::abs(e - truth[j]) <= zq * se[r][j] ? 1.0 : 0.0;
      length += 2.0 * zq * se[r][j];
      mean_se += se[r][j];
    }
    emp_sd += reps > 1 ? std::sqrt(s2 / static_cast<double>(reps - 1)) : 0.0;
  }
  const double cells = static_cast<double>(reps) * static_cast<double>(k);
  m.valid = true;
  m.bias = bias / cells;
  m.mse = mse / cells;
  m.coverage = cover / cells;
  m.ci_length = length / cells;
  m.std_err = mean_se / cells;
  m.empirical_sd = emp_sd / static_cast<double>(k);
  return m;
}

}  // namespace

McReport run_mc_with(const DgpConfig& cfg, const RepRunner& runner, int reps,
                     const TargetSpec& targets, int parallelism) {
  if (reps < 2) throw ConfigError("run_mc needs reps >= 2");
  const std::vector<int> coords = resolve_coords(targets, cfg.p);
  const Eigen::VectorXd z_grid = default_z_grid(targets.z_points);

  std::vector<RepOutcome> outcomes(static_cast<std::size_t>(reps));
  parallel_for(static_cast<std::size_t>(reps), parallelism, [&](std::size_t r) {
    RepOutcome& out = outcomes[r];
    try {
      const auto [sample, truth] = gen_sample(cfg, r);
      out = runner(sample, truth, r);
    } catch (const Infeasible& e) {
      out.ok = false;
      out.infeasible = true;
      out.error = e.what();
    } catch (const std::exception& e) {
      out.ok = false;
      out.error = e.what();
    }
  });

  McReport report;
  report.cfg = cfg;
  report.reps = reps;
  report.targets = targets;
  report.targets.linear_coords = coords;
  report.rng_algorithm = kRngAlgorithm;

  std::vector<Eigen::VectorXd> lin_est, lin_se, f_est, f_se;
  bool all_infeasible = true;
  std::string first_error;
  for (const auto& out : outcomes) {
    if (!out.ok) {
      ++report.failures;
      if (!out.infeasible && first_error.empty()) first_error = out.error;
      if (!out.infeasible) all_infeasible = false;
      continue;
    }
    all_infeasible = false;
    if (targets.linear) {
      lin_est.push_back(out.lin_est);
      lin_se.push_back(out.lin_se);
    }
    if (targets.nonparametric) {
      f_est.push_back(out.f_est);
      f_se.push_back(out.f_se);
    }
  }
  if (report.failures == reps) {
    if (all_infeasible) {
      report.feasible = false;
      return report;
    }
    throw AllRepsFailed("all " + std::to_string(reps) +
                        " reps failed; first error: " + first_error);
  }
  if (report.failures > 0) {
    std::fprintf(stderr, "event=warn module=simulation msg=reps_failed n=%d\n",
                 report.failures);
  }

  // Truth at the targets; the effect vector is shared by both families.
  Eigen::VectorXd beta_truth(static_cast<Eigen::Index>(coords.size()));
  {
    DgpConfig probe = cfg;
    probe.n = std::max<Eigen::Index>(cfg.n, 20);
    const auto [sample, truth] = gen_sample(probe, 0);
    (void)sample;
    for (std::size_t j = 0; j < coords.size(); ++j) {
      beta_truth[static_cast<Eigen::Index>(j)] = truth.beta0[coords[j] - 1];
    }
    if (targets.nonparametric) {
      Eigen::VectorXd f_truth(z_grid.size());
      for (Eigen::Index g = 0; g < z_grid.size(); ++g) {
        f_truth[g] = truth.f0(z_grid[g]);
      }
      report.nonparametric = reduce_block(f_est, f_se, f_truth, targets.level);
    }
  }
  if (targets.linear) {
    report.linear = reduce_block(lin_est, lin_se, beta_truth, targets.level);
  }
  return report;
}

McReport run_mc(const DgpConfig& cfg, EstimatorKind estimator, int reps,
                const TargetSpec& targets, const Tuning& tuning,
                int parallelism) {
  const std::vector<int> coords = resolve_coords(targets, cfg.p);
  const Eigen::VectorXd z_grid = default_z_grid(targets.z_points);

  RepRunner runner;
  if (estimator == EstimatorKind::kDrDid) {
    runner = [&cfg, &targets, &tuning, coords, z_grid](
                 const Sample& sample, const TruthInfo&, std::uint64_t rep) {
      RepOutcome out;
      const NuisanceFit nuisance =
          cross_fit(sample, tuning.propensity, tuning.outcome, tuning.n_folds,
                    tuning.epsilon, derive_seed(cfg.seed, rep, 0xCF17));
      const PseudoOutcome pseudo = pseudo_outcome(sample, nuisance);
      FitOptions opts;
      opts.degree = tuning.degree;
      opts.c_lambda = tuning.c_lambda;
      const DrDidFit fit = fit_drdid(sample, pseudo, opts);
      if (targets.linear) {
        const DebiasContext ctx = make_debias_context(sample, fit);
        out.lin_est.resize(static_cast<Eigen::Index>(coords.size()));
        out.lin_se.resize(static_cast<Eigen::Index>(coords.size()));
        for (std::size_t j = 0; j < coords.size(); ++j) {
          Eigen::VectorXd xi = Eigen::VectorXd::Zero(sample.p());
          xi[coords[j] - 1] = 1.0;
          const BetaInference inf =
              debias_beta(ctx, xi, std::nullopt, targets.level, tuning.c_prime);
          out.lin_est[static_cast<Eigen::Index>(j)] = inf.t_hat;
          out.lin_se[static_cast<Eigen::Index>(j)] = inf.se;
        }
      }
      if (targets.nonparametric) {
        const FInference inf = debias_f(sample, fit, z_grid, std::nullopt,
                                        targets.level, tuning.c_dprime, 1);
        out.f_est = inf.f_bar;
        out.f_se = inf.sigma_z / std::sqrt(static_cast<double>(sample.n()));
      }
      out.ok = true;
      return out;
    };
  } else {
    runner = [&targets, &tuning, coords, z_grid](
                 const Sample& sample, const TruthInfo&, std::uint64_t) {
      RepOutcome out;
      const SemiDidFit fit =
          fit_semidid(sample, tuning.degree);
      if (targets.linear) {
        out.lin_est.resize(static_cast<Eigen::Index>(coords.size()));
        out.lin_se.resize(static_cast<Eigen::Index>(coords.size()));
        for (std::size_t j = 0; j < coords.size(); ++j) {
          const Eigen::Index c = coords[j] - 1;
          out.lin_est[static_cast<Eigen::Index>(j)] = fit.beta_hat[c];
          out.lin_se[static_cast<Eigen::Index>(j)] = std::sqrt(
              std::max(0.0, fit.cov(c, c)));
        }
      }
      if (targets.nonparametric) {
        const Eigen::Index k = fit.basis.k_n();
        const Eigen::MatrixXd cov_gamma = fit.cov.bottomRightCorner(k, k);
        out.f_est.resize(z_grid.size());
        out.f_se.resize(z_grid.size());
        for (Eigen::Index g = 0; g < z_grid.size(); ++g) {
          const Eigen::VectorXd b = eval_basis(fit.basis, z_grid[g]);
          out.f_est[g] = b.dot(fit.gamma_hat);
          out.f_se[g] = std::sqrt(std::max(0.0, b.dot(cov_gamma * b)));
        }
      }
      out.ok = true;
      return out;
    };
  }
  McReport report = run_mc_with(cfg, runner, reps, targets, parallelism);
  report.estimator = estimator;
  report.tuning = tuning;
  return report;
}

namespace {

struct MetricDef {
  const char* key;    // machine name used in the CSV
  const char* label;  // pretty name used in the text table
  double BlockMetrics::* field;
};

constexpr MetricDef kMetrics[] = {
    {"bias", "Bias", &BlockMetrics::bias},
    {"std_err", "Std Err", &BlockMetrics::std_err},
    {"mse", "MSE", &BlockMetrics::mse},
    {"coverage", "Coverage", &BlockMetrics::coverage},
    {"ci_length", "CI length", &BlockMetrics::ci_length},
};

std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format_cell(const BlockMetrics& block, const MetricDef& def) {
  if (!block.valid) return "-";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.4f", block.*(def.field));
  return buf;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

void render_table(const std::vector<McReport>& reports,
                  const std::string& csv_path, const std::string& txt_path) {
  std::ofstream csv(csv_path);
  if (!csv) throw DataError("cannot open " + csv_path + " for writing");
  csv << "family,n,p,estimator,reps,failures,block,metric,value\n";
  for (const auto& rep : reports) {
    const std::string head = family_name(rep.cfg.family) + "," +
                             std::to_string(rep.cfg.n) + "," +
                             std::to_string(rep.cfg.p) + "," +
                             estimator_name(rep.estimator) + "," +
                             std::to_string(rep.reps) + "," +
                             std::to_string(rep.failures) + ",";
    const std::pair<const char*, const BlockMetrics*> blocks[] = {
        {"linear", &rep.linear}, {"nonparametric", &rep.nonparametric}};
    const bool wanted[] = {rep.targets.linear, rep.targets.nonparametric};
    for (int b = 0; b < 2; ++b) {
      if (!wanted[b]) continue;
      for (const auto& def : kMetrics) {
        csv << head << blocks[b].first << "," << def.key << ","
            << (blocks[b].second->valid
                    ? format_full(blocks[b].second->*(def.field))
                    : "-")
            << "\n";
      }
    }
  }
  csv.close();

  // Text view groups reports that share a design size into one section with
  // a column per (p, estimator) pair.
  std::ofstream txt(txt_path);
  if (!txt) throw DataError("cannot open " + txt_path + " for writing");
  std::vector<std::pair<std::string, std::vector<const McReport*>>> groups;
  for (const auto& rep : reports) {
    const std::string key =
        family_name(rep.cfg.family) + "  n=" + std::to_string(rep.cfg.n);
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const auto& g) { return g.first == key; });
    if (it == groups.end()) {
      groups.push_back({key, {&rep}});
    } else {
      it->second.push_back(&rep);
    }
  }
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const auto& [key, members] = groups[gi];
    if (gi > 0) txt << "\n";
    txt << "== " << key << " ==\n";
    std::vector<std::string> labels;
    std::vector<std::size_t> widths;
    for (const McReport* rep : members) {
      std::string label = "p=" + std::to_string(rep->cfg.p) + " " +
                          estimator_name(rep->estimator);
      if (rep->failures > 0) {
        label += " (" + std::to_string(rep->failures) + " failed)";
      }
      widths.push_back(std::max<std::size_t>(label.size(), 9));
      labels.push_back(std::move(label));
    }
    txt << std::string(25, ' ');
    for (std::size_t c = 0; c < labels.size(); ++c) {
      txt << "  " << std::string(widths[c] - labels[c].size(), ' ')
          << labels[c];
    }
    txt << "\n";
    const char* block_names[] = {"linear", "nonparametric"};
    for (int b = 0; b < 2; ++b) {
      bool any = false;
      for (const McReport* rep : members) {
        any = any || (b == 0 ? rep->targets.linear
                             : rep->targets.nonparametric);
      }
      if (!any) continue;
      for (std::size_t mi = 0; mi < std::size(kMetrics); ++mi) {
        const auto& def = kMetrics[mi];
        char left[32];
        std::snprintf(left, sizeof(left), "%-14s %-10s",
                      mi == 0 ? block_names[b] : "", def.label);
        txt << left;
        for (std::size_t c = 0; c < members.size(); ++c) {
          const McReport* rep = members[c];
          const bool present = b == 0 ? rep->targets.linear
                                      : rep->targets.nonparametric;
          const BlockMetrics& block =
              b == 0 ? rep->linear : rep->nonparametric;
          const std::string cell = present ? format_cell(block, def) : "";
          txt << "  " << std::string(widths[c] - cell.size(), ' ') << cell;
        }
        txt << "\n";
      }
    }
  }
}

std::vector<McReport> parse_report_csv(const std::string& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw DataError("cannot open " + csv_path);
  std::string line;
  int line_no = 0;
  do {
    if (!std::getline(in, line)) throw DataError(csv_path + ": empty file");
    ++line_no;
  } while (line.empty() || line[0] == '#');
  if (split_line(line).size() != 9) {
    throw DataError(csv_path + ": unexpected header");
  }
  std::vector<McReport> reports;
  std::vector<std::string> keys;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const std::vector<std::string> f = split_line(line);
    if (f.size() != 9) {
      throw DataError(csv_path + ":" + std::to_string(line_no) +
                      ": expected 9 fields, got " + std::to_string(f.size()));
    }
    const std::string key =
        f[0] + "," + f[1] + "," + f[2] + "," + f[3] + "," + f[4] + "," + f[5];
    McReport* rep = nullptr;
    for (std::size_t i = 0; i < keys.size(); ++i) {
      if (keys[i] == key) rep = &reports[i];
    }
    if (rep == nullptr) {
      keys.push_back(key);
      reports.emplace_back();
      rep = &reports.back();
      if (f[0] == "dgp1") {
        rep->cfg.family = DgpFamily::kDgp1;
      } else if (f[0] == "dgp2") {
        rep->cfg.family = DgpFamily::kDgp2;
      } else {
        throw DataError(csv_path + ": unknown family " + f[0]);
      }
      rep->cfg.n = std::stoll(f[1]);
      rep->cfg.p = std::stoll(f[2]);
      if (f[3] == "drdid") {
        rep->estimator = EstimatorKind::kDrDid;
      } else if (f[3] == "semidid") {
        rep->estimator = EstimatorKind::kSemiDid;
      } else {
        throw DataError(csv_path + ": unknown estimator " + f[3]);
      }
      rep->reps = std::stoi(f[4]);
      rep->failures = std::stoi(f[5]);
      rep->targets.linear = rep->targets.nonparametric = false;
      rep->feasible = false;
    }
    BlockMetrics* block;
    if (f[6] == "linear") {
      block = &rep->linear;
      rep->targets.linear = true;
    } else if (f[6] == "nonparametric") {
      block = &rep->nonparametric;
      rep->targets.nonparametric = true;
    } else {
      throw DataError(csv_path + ": unknown block " + f[6]);
    }
    if (f[8] != "-") {
      block->valid = true;
      rep->feasible = true;
      bool known = false;
      for (const auto& def : kMetrics) {
        if (f[7] == def.key) {
          block->*(def.field) = std::stod(f[8]);
          known = true;
        }
      }
      if (!known) throw DataError(csv_path + ": unknown metric " + f[7]);
    }
  }
  return reports;
}

}  // namespace drdid
