#include "drdid/report_io.hpp"

#include <fstream>

#include "drdid/rng.hpp"

namespace drdid {

namespace {

// Fetch with a default, rejecting nulls so a typo'd key fails loudly when
// the caller spells out an explicit null.
template <typename T>
T get_or(const ordered_json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

}  // namespace

ordered_json learner_to_json(const LearnerSpec& spec) {
  const char* kind = nullptr;
  switch (spec.kind) {
    case LearnerKind::kL1Logistic: kind = "l1_logistic"; break;
    case LearnerKind::kL1Linear: kind = "l1_linear"; break;
    case LearnerKind::kOls: kind = "ols"; break;
    case LearnerKind::kConstant: kind = "constant"; break;
  }
  return ordered_json{{"kind", kind}, {"lambda_rule", spec.lambda_rule}};
}

LearnerSpec learner_from_json(const ordered_json& j) {
  LearnerSpec spec;
  const std::string kind = get_or<std::string>(j, "kind", "l1_linear");
  if (kind == "l1_logistic") {
    spec.kind = LearnerKind::kL1Logistic;
  } else if (kind == "l1_linear") {
    spec.kind = LearnerKind::kL1Linear;
  } else if (kind == "ols") {
    spec.kind = LearnerKind::kOls;
  } else if (kind == "constant") {
    spec.kind = LearnerKind::kConstant;
  } else {
    throw ConfigError("unknown learner kind '" + kind + "'");
  }
  spec.lambda_rule = get_or(j, "lambda_rule", 1.0);
  if (!(spec.lambda_rule > 0.0)) {
    throw ConfigError("learner lambda_rule must be positive");
  }
  return spec;
}

ordered_json targets_to_json(const TargetSpec& targets) {
  return ordered_json{{"linear_coords", targets.linear_coords},
                      {"z_points", targets.z_points},
                      {"linear", targets.linear},
                      {"nonparametric", targets.nonparametric},
                      {"level", targets.level}};
}

TargetSpec targets_from_json(const ordered_json& j) {
  TargetSpec targets;
  targets.linear_coords =
      get_or(j, "linear_coords", std::vector<int>{});
  targets.z_points = get_or(j, "z_points", targets.z_points);
  targets.linear = get_or(j, "linear", targets.linear);
  targets.nonparametric = get_or(j, "nonparametric", targets.nonparametric);
  targets.level = get_or(j, "level", targets.level);
  if (!(targets.level > 0.0 && targets.level < 1.0)) {
    throw ConfigError("level must lie in (0, 1)");
  }
  if (targets.z_points < 1) throw ConfigError("z_points must be positive");
  return targets;
}

ordered_json tuning_to_json(const Tuning& tuning) {
  return ordered_json{{"degree", tuning.degree},
                      {"n_folds", tuning.n_folds},
                      {"epsilon", tuning.epsilon},
                      {"c_lambda", tuning.c_lambda},
                      {"c_prime", tuning.c_prime},
                      {"c_dprime", tuning.c_dprime},
                      {"propensity", learner_to_json(tuning.propensity)},
                      {"outcome", learner_to_json(tuning.outcome)}};
}

Tuning tuning_from_json(const ordered_json& j) {
  Tuning tuning;
  tuning.degree = get_or(j, "degree", tuning.degree);
  tuning.n_folds = get_or(j, "n_folds", tuning.n_folds);
  tuning.epsilon = get_or(j, "epsilon", tuning.epsilon);
  tuning.c_lambda = get_or(j, "c_lambda", tuning.c_lambda);
  tuning.c_prime = get_or(j, "c_prime", tuning.c_prime);
  tuning.c_dprime = get_or(j, "c_dprime", tuning.c_dprime);
  if (j.contains("propensity")) {
    tuning.propensity = learner_from_json(j.at("propensity"));
  }
  if (j.contains("outcome")) {
    tuning.outcome = learner_from_json(j.at("outcome"));
  }
  if (tuning.degree < 1) throw ConfigError("degree must be >= 1");
  if (tuning.n_folds < 2) throw ConfigError("n_folds must be >= 2");
  if (!(tuning.c_lambda > 0.0 && tuning.c_prime > 0.0 &&
        tuning.c_dprime > 0.0)) {
    throw ConfigError("tuning constants must be positive");
  }
  return tuning;
}

ordered_json dgp_to_json(const DgpConfig& cfg) {
  return ordered_json{{"family", family_name(cfg.family)},
                      {"n", cfg.n},
                      {"p", cfg.p},
                      {"rho", cfg.rho},
                      {"s_beta", cfg.s_beta},
                      {"s_theta", cfg.s_theta},
                      {"seed", cfg.seed}};
}

DgpConfig dgp_from_json(const ordered_json& j) {
  DgpConfig cfg;
  const std::string family = get_or<std::string>(j, "family", "dgp1");
  if (family == "dgp1") {
    cfg.family = DgpFamily::kDgp1;
  } else if (family == "dgp2") {
    cfg.family = DgpFamily::kDgp2;
  } else {
    throw ConfigError("unknown family '" + family + "'");
  }
  cfg.n = get_or<Eigen::Index>(j, "n", cfg.n);
  cfg.p = get_or<Eigen::Index>(j, "p", cfg.p);
  cfg.rho = get_or(j, "rho", cfg.rho);
  cfg.s_beta = get_or(j, "s_beta", cfg.s_beta);
  cfg.s_theta = get_or(j, "s_theta", cfg.s_theta);
  cfg.seed = get_or<std::uint64_t>(j, "seed", cfg.seed);
  return cfg;
}

ordered_json block_to_json(const BlockMetrics& block) {
  if (!block.valid) return nullptr;
  return ordered_json{{"bias", block.bias},
                      {"std_err", block.std_err},
                      {"empirical_sd", block.empirical_sd},
                      {"mse", block.mse},
                      {"coverage", block.coverage},
                      {"ci_length", block.ci_length}};
}

ordered_json report_to_json(const McReport& report) {
  ordered_json j;
  j["config"] = dgp_to_json(report.cfg);
  j["estimator"] = estimator_name(report.estimator);
  j["targets"] = targets_to_json(report.targets);
  j["tuning"] = tuning_to_json(report.tuning);
  j["reps"] = report.reps;
  j["failures"] = report.failures;
  j["feasible"] = report.feasible;
  j["linear"] = block_to_json(report.linear);
  j["nonparametric"] = block_to_json(report.nonparametric);
  return j;
}

void write_report_json(const std::vector<McReport>& reports,
                       const std::string& path) {
  ordered_json root;
  root["version"] = kVersion;
  root["rng_algorithm"] = kRngAlgorithm;
  root["reports"] = ordered_json::array();
  for (const auto& report : reports) {
    root["reports"].push_back(report_to_json(report));
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << root.dump(2) << "\n";
}

ordered_json beta_inference_to_json(const BetaInference& inf) {
  return ordered_json{{"t_hat", inf.t_hat},
                      {"se", inf.se},
                      {"ci_low", inf.ci_low},
                      {"ci_high", inf.ci_high},
                      {"v_hat", inf.v_hat},
                      {"level", inf.level},
                      {"lambda_prime", inf.lambda_prime},
                      {"escalations", inf.escalations}};
}

ordered_json f_inference_to_json(const FInference& inf) {
  ordered_json j;
  j["level"] = inf.level;
  j["lambda_dprime"] = inf.lambda_dprime;
  j["n_clamped"] = inf.n_clamped;
  j["z_grid"] = std::vector<double>(inf.z_grid.begin(), inf.z_grid.end());
  j["f_bar"] = std::vector<double>(inf.f_bar.begin(), inf.f_bar.end());
  j["sigma_z"] = std::vector<double>(inf.sigma_z.begin(), inf.sigma_z.end());
  j["ci_low"] = std::vector<double>(inf.ci_low.begin(), inf.ci_low.end());
  j["ci_high"] = std::vector<double>(inf.ci_high.begin(), inf.ci_high.end());
  return j;
}

ordered_json overlap_to_json(const OverlapDiagnostics& overlap) {
  return ordered_json{{"min_pi_hat", overlap.min_pi_hat},
                      {"max_pi_hat", overlap.max_pi_hat},
                      {"n_clipped", overlap.n_clipped},
                      {"treated_fraction", overlap.treated_fraction}};
}

ordered_json sparse_coef_to_json(const Eigen::VectorXd& coef) {
  ordered_json j = ordered_json::object();
  for (Eigen::Index i = 0; i < coef.size(); ++i) {
    if (coef[i] != 0.0) j[std::to_string(i + 1)] = coef[i];
  }
  return j;
}

}  // namespace drdid
