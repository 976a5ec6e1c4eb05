#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "drdid/simulation.hpp"

// JSON (de)serialization for configs and results. Field order is fixed so
// identical runs produce byte-identical files.

namespace drdid {

using ordered_json = nlohmann::ordered_json;

ordered_json targets_to_json(const TargetSpec& targets);
TargetSpec targets_from_json(const ordered_json& j);

ordered_json tuning_to_json(const Tuning& tuning);
Tuning tuning_from_json(const ordered_json& j);

ordered_json dgp_to_json(const DgpConfig& cfg);
DgpConfig dgp_from_json(const ordered_json& j);

ordered_json block_to_json(const BlockMetrics& block);

ordered_json report_to_json(const McReport& report);

// Wraps the per-cell reports under a version/rng header object.
void write_report_json(const std::vector<McReport>& reports,
                       const std::string& path);

ordered_json beta_inference_to_json(const BetaInference& inf);
ordered_json f_inference_to_json(const FInference& inf);
ordered_json overlap_to_json(const OverlapDiagnostics& overlap);

// Nonzero coefficients only, keyed by 1-based coordinate.
ordered_json sparse_coef_to_json(const Eigen::VectorXd& coef);

LearnerSpec learner_from_json(const ordered_json& j);
ordered_json learner_to_json(const LearnerSpec& spec);

}  // namespace drdid
