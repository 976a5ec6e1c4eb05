// Command-line front end. Three subcommands share one JSON config file:
//   simulate  Monte Carlo study over (n, p, estimator) cells
//   estimate  fit + inference on a CSV dataset
//   band      like estimate but emits only the nonparametric CI band
// Flags --seed/--threads/--out override the matching config keys. Exit
// codes: 0 ok, 2 config error, 3 data error, 4 numerical failure.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "drdid/csv.hpp"
#include "drdid/report_io.hpp"
#include "drdid/rng.hpp"

namespace {

using drdid::ordered_json;

struct CliOverrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> out;
};

ordered_json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw drdid::ConfigError("cannot open config file " + path);
  try {
    return ordered_json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw drdid::ConfigError(path + ": " + e.what());
  }
}

template <typename T>
T get_or(const ordered_json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw drdid::ConfigError(std::string("config key '") + key +
                             "': " + e.what());
  }
}

// Writes `lines` above the existing contents so every artifact carries the
// version and the resolved config it came from.
void prepend_comment_header(const std::string& path,
                            const std::vector<std::string>& lines) {
  std::ifstream in(path);
  std::stringstream body;
  body << in.rdbuf();
  in.close();
  std::ofstream out(path);
  for (const auto& line : lines) out << "# " << line << "\n";
  out << body.str();
}

std::string out_dir(const ordered_json& cfg, const CliOverrides& cli) {
  std::string dir = cli.out.value_or(get_or<std::string>(cfg, "out", "."));
  std::filesystem::create_directories(dir);
  return dir;
}

int run_simulate(const ordered_json& cfg, const CliOverrides& cli) {
  drdid::DgpConfig base = drdid::dgp_from_json(cfg);
  if (cli.seed) base.seed = *cli.seed;
  const int reps = get_or(cfg, "reps", 200);
  const int threads = cli.threads.value_or(get_or(cfg, "threads", 1));
  drdid::TargetSpec targets =
      cfg.contains("targets") ? drdid::targets_from_json(cfg.at("targets"))
                              : drdid::TargetSpec{};
  drdid::Tuning tuning = cfg.contains("tuning")
                             ? drdid::tuning_from_json(cfg.at("tuning"))
                             : drdid::Tuning{};

  // Cells come from an explicit array, or a single top-level n/p/estimator.
  struct Cell {
    Eigen::Index n, p;
    drdid::EstimatorKind estimator;
  };
  auto parse_estimator = [](const std::string& name) {
    if (name == "drdid") return drdid::EstimatorKind::kDrDid;
    if (name == "semidid") return drdid::EstimatorKind::kSemiDid;
    throw drdid::ConfigError("unknown estimator '" + name + "'");
  };
  std::vector<Cell> cells;
  if (cfg.contains("cells")) {
    for (const auto& c : cfg.at("cells")) {
      cells.push_back({get_or<Eigen::Index>(c, "n", base.n),
                       get_or<Eigen::Index>(c, "p", base.p),
                       parse_estimator(
                           get_or<std::string>(c, "estimator", "drdid"))});
    }
    if (cells.empty()) throw drdid::ConfigError("cells array is empty");
  } else {
    cells.push_back({base.n, base.p,
                     parse_estimator(
                         get_or<std::string>(cfg, "estimator", "drdid"))});
  }

  ordered_json echo;
  echo["command"] = "simulate";
  echo["version"] = drdid::kVersion;
  {
    ordered_json d = drdid::dgp_to_json(base);
    d.erase("n");
    d.erase("p");
    echo["dgp"] = d;
  }
  echo["reps"] = reps;
  echo["cells"] = ordered_json::array();
  for (const auto& c : cells) {
    echo["cells"].push_back(ordered_json{
        {"n", c.n}, {"p", c.p}, {"estimator", drdid::estimator_name(c.estimator)}});
  }
  echo["targets"] = drdid::targets_to_json(targets);
  echo["tuning"] = drdid::tuning_to_json(tuning);

  std::vector<drdid::McReport> reports;
  for (const auto& cell : cells) {
    drdid::DgpConfig cell_cfg = base;
    cell_cfg.n = cell.n;
    cell_cfg.p = cell.p;
    std::fprintf(stderr,
                 "event=run command=simulate family=%s n=%lld p=%lld "
                 "estimator=%s reps=%d\n",
                 drdid::family_name(cell_cfg.family).c_str(),
                 static_cast<long long>(cell.n), static_cast<long long>(cell.p),
                 drdid::estimator_name(cell.estimator).c_str(), reps);
    reports.push_back(drdid::run_mc(cell_cfg, cell.estimator, reps, targets,
                                    tuning, threads));
  }

  const std::string dir = out_dir(cfg, cli);
  const std::string csv_path = dir + "/report.csv";
  const std::string txt_path = dir + "/report.txt";
  const std::string json_path = dir + "/report.json";
  drdid::render_table(reports, csv_path, txt_path);
  const std::vector<std::string> header = {
      std::string("version=") + drdid::kVersion, "config=" + echo.dump()};
  prepend_comment_header(csv_path, header);
  prepend_comment_header(txt_path, header);
  {
    ordered_json root;
    root["version"] = drdid::kVersion;
    root["rng_algorithm"] = drdid::kRngAlgorithm;
    root["config"] = echo;
    root["reports"] = ordered_json::array();
    for (const auto& report : reports) {
      root["reports"].push_back(drdid::report_to_json(report));
    }
    std::ofstream out(json_path);
    if (!out) throw drdid::DataError("cannot open " + json_path);
    out << root.dump(2) << "\n";
  }
  std::fprintf(stderr, "event=done command=simulate out=%s\n", dir.c_str());
  return 0;
}

drdid::CsvSchema schema_from_json(const ordered_json& j) {
  drdid::CsvSchema schema;
  schema.d_col = get_or(j, "d_col", schema.d_col);
  schema.z_col = get_or(j, "z_col", schema.z_col);
  schema.x_cols = get_or(j, "x_cols", schema.x_cols);
  schema.x_prefix = get_or(j, "x_prefix", schema.x_prefix);
  schema.dy_col = get_or(j, "dy_col", schema.dy_col);
  schema.y_post_col = get_or(j, "y_post_col", schema.y_post_col);
  schema.y_pre_col = get_or(j, "y_pre_col", schema.y_pre_col);
  return schema;
}

// Equispaced grid between the empirical 5% and 95% quantiles of z, used
// when the config does not pin the grid explicitly.
Eigen::VectorXd empirical_z_grid(const Eigen::VectorXd& z, int points) {
  std::vector<double> sorted(z.begin(), z.end());
  std::sort(sorted.begin(), sorted.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
  };
  const double lo = quantile(0.05), hi = quantile(0.95);
  Eigen::VectorXd grid(points);
  if (points == 1) {
    grid[0] = 0.5 * (lo + hi);
    return grid;
  }
  for (int i = 0; i < points; ++i) {
    grid[i] =
        lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  return grid;
}

int run_estimate(const ordered_json& cfg, const CliOverrides& cli,
                 bool band_only) {
  if (!cfg.contains("data")) {
    throw drdid::ConfigError("estimate config needs a 'data' section");
  }
  const ordered_json& data = cfg.at("data");
  const std::string csv_path = get_or<std::string>(data, "path", "");
  if (csv_path.empty()) throw drdid::ConfigError("data.path is required");
  const drdid::CsvSchema schema = schema_from_json(data);
  const std::uint64_t seed =
      cli.seed.value_or(get_or<std::uint64_t>(cfg, "seed", 1));
  const int threads = cli.threads.value_or(get_or(cfg, "threads", 1));
  drdid::TargetSpec targets =
      cfg.contains("targets") ? drdid::targets_from_json(cfg.at("targets"))
                              : drdid::TargetSpec{};
  drdid::Tuning tuning = cfg.contains("tuning")
                             ? drdid::tuning_from_json(cfg.at("tuning"))
                             : drdid::Tuning{};
  if (band_only) targets.nonparametric = true;

  const drdid::Sample sample = drdid::load_csv(csv_path, schema);
  std::fprintf(stderr, "event=run command=%s path=%s n=%lld p=%lld\n",
               band_only ? "band" : "estimate", csv_path.c_str(),
               static_cast<long long>(sample.n()),
               static_cast<long long>(sample.p()));

  const std::vector<int> coords = targets.linear_coords.empty()
                                      ? drdid::default_linear_coords(sample.p())
                                      : targets.linear_coords;
  Eigen::VectorXd z_grid;
  if (cfg.contains("targets") && cfg.at("targets").contains("z_grid")) {
    const std::vector<double> pts =
        cfg.at("targets").at("z_grid").get<std::vector<double>>();
    if (pts.empty()) throw drdid::ConfigError("targets.z_grid is empty");
    z_grid = Eigen::Map<const Eigen::VectorXd>(
        pts.data(), static_cast<Eigen::Index>(pts.size()));
  } else {
    z_grid = empirical_z_grid(sample.z, targets.z_points);
  }

  const drdid::NuisanceFit nuisance =
      drdid::cross_fit(sample, tuning.propensity, tuning.outcome,
                       tuning.n_folds, tuning.epsilon, seed);
  const drdid::PseudoOutcome pseudo = drdid::pseudo_outcome(sample, nuisance);
  drdid::FitOptions opts;
  opts.degree = tuning.degree;
  opts.c_lambda = tuning.c_lambda;
  const drdid::DrDidFit fit = drdid::fit_drdid(sample, pseudo, opts);
  std::fprintf(stderr,
               "event=fit lambda=%g sigma_s=%g lasso_iters=%d "
               "pi_range=[%g,%g] clipped=%lld\n",
               fit.lambda, fit.sigma_s, fit.lasso_iterations,
               nuisance.overlap.min_pi_hat, nuisance.overlap.max_pi_hat,
               static_cast<long long>(nuisance.overlap.n_clipped));

  ordered_json echo;
  echo["command"] = band_only ? "band" : "estimate";
  echo["version"] = drdid::kVersion;
  echo["data"] = ordered_json{{"path", csv_path},
                              {"d_col", schema.d_col},
                              {"z_col", schema.z_col},
                              {"x_cols", schema.x_cols},
                              {"x_prefix", schema.x_prefix},
                              {"dy_col", schema.dy_col},
                              {"y_post_col", schema.y_post_col},
                              {"y_pre_col", schema.y_pre_col}};
  echo["seed"] = seed;
  {
    drdid::TargetSpec resolved = targets;
    resolved.linear_coords = coords;
    echo["targets"] = drdid::targets_to_json(resolved);
    echo["targets"]["z_grid"] =
        std::vector<double>(z_grid.begin(), z_grid.end());
  }
  echo["tuning"] = drdid::tuning_to_json(tuning);

  const std::string dir = out_dir(cfg, cli);
  std::optional<drdid::FInference> f_inf;
  if (targets.nonparametric) {
    f_inf = drdid::debias_f(sample, fit, z_grid, std::nullopt, targets.level,
                            tuning.c_dprime, threads);
    drdid::ci_band_export(*f_inf, dir + "/band.csv", echo.dump());
  }
  if (band_only) {
    std::fprintf(stderr, "event=done command=band out=%s\n", dir.c_str());
    return 0;
  }

  ordered_json root;
  root["version"] = drdid::kVersion;
  root["rng_algorithm"] = drdid::kRngAlgorithm;
  root["config"] = echo;
  root["n"] = sample.n();
  root["p"] = sample.p();
  root["overlap"] = drdid::overlap_to_json(nuisance.overlap);
  root["lambda"] = fit.lambda;
  root["sigma_s"] = fit.sigma_s;
  root["lasso_iterations"] = fit.lasso_iterations;
  root["lasso_converged"] = fit.lasso_converged;
  root["beta_hat"] = drdid::sparse_coef_to_json(fit.beta_hat);
  root["gamma_hat"] =
      std::vector<double>(fit.gamma_hat.begin(), fit.gamma_hat.end());
  if (targets.linear) {
    const drdid::DebiasContext ctx = drdid::make_debias_context(sample, fit);
    root["linear"] = ordered_json::array();
    for (int coord : coords) {
      if (coord < 1 || coord > sample.p()) {
        throw drdid::ConfigError("linear target coordinate " +
                                 std::to_string(coord) + " outside 1..p");
      }
      Eigen::VectorXd xi = Eigen::VectorXd::Zero(sample.p());
      xi[coord - 1] = 1.0;
      const drdid::BetaInference inf =
          drdid::debias_beta(ctx, xi, std::nullopt, targets.level,
                             tuning.c_prime);
      ordered_json entry = drdid::beta_inference_to_json(inf);
      entry["coord"] = coord;
      root["linear"].push_back(std::move(entry));
    }
  }
  root["nonparametric"] =
      f_inf ? drdid::f_inference_to_json(*f_inf) : ordered_json(nullptr);

  const std::string json_path = dir + "/estimate.json";
  std::ofstream out(json_path);
  if (!out) throw drdid::DataError("cannot open " + json_path);
  out << root.dump(2) << "\n";
  std::fprintf(stderr, "event=done command=estimate out=%s\n", dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Doubly robust difference-in-differences estimation"};
  app.require_subcommand(1);
  CliOverrides cli;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", cli.config_path, "JSON config file")
        ->required();
    sub->add_option("--seed", cli.seed, "override the config seed");
    sub->add_option("--threads", cli.threads, "override worker count");
    sub->add_option("--out", cli.out, "override the output directory");
  };
  CLI::App* sim = app.add_subcommand("simulate", "run a Monte Carlo study");
  CLI::App* est = app.add_subcommand("estimate", "fit and infer on a CSV");
  CLI::App* band = app.add_subcommand("band", "export the CI band only");
  add_common(sim);
  add_common(est);
  add_common(band);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    const ordered_json cfg = load_config(cli.config_path);
    if (sim->parsed()) return run_simulate(cfg, cli);
    if (est->parsed()) return run_estimate(cfg, cli, false);
    return run_estimate(cfg, cli, true);
  } catch (const drdid::ConfigError& e) {
    std::fprintf(stderr, "event=error code=2 msg=\"%s\"\n", e.what());
    return 2;
  } catch (const drdid::DataError& e) {
    std::fprintf(stderr, "event=error code=3 msg=\"%s\"\n", e.what());
    return 3;
  } catch (const drdid::NumericalError& e) {
    std::fprintf(stderr, "event=error code=4 msg=\"%s\"\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "event=error code=1 msg=\"%s\"\n", e.what());
    return 1;
  }
}
