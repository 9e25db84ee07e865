#pragma once

#include <optional>
#include <string>

#include "spindoe/hashing.hpp"
#include "spindoe/spin.hpp"

namespace spindoe {

/// Tunables that the command line can override from a JSON file.
struct RunConfig {
  ScoringParams scoring;
  RecognitionConfig recognition;
  double visibility_threshold = 0.0;
  double success_gate = deg2rad(20.0);
  RansacConfig ransac;

  void validate() const;
};

/// Applies the keys present in a JSON object on top of `base`. Angles are in
/// degrees in the file. Unknown keys are rejected with InvalidArgument.
///
///   kappa, beta, alpha, k_nearest, shortlist_log_ratio, min_votes,
///   match_gate_deg, visibility_threshold, success_gate_deg,
///   ransac_iterations, inlier_gate_deg, min_inliers
RunConfig apply_overrides(const RunConfig& base, const std::string& json_text);

RunConfig load_config(const std::string& path, const RunConfig& base = {});

/// The explicit path if given, else $SPINDOE_CONFIG if set and non-empty.
std::optional<std::string> resolve_config_path(const std::optional<std::string>& flag);

/// All keys above with their current values, as JSON text.
std::string config_to_json(const RunConfig& cfg);

}  // namespace spindoe
