#include "spindoe/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace spindoe {

namespace {

using nlohmann::json;

template <typename T>
T get_number(const json& value, const std::string& key) {
  if (!value.is_number()) throw Error(ErrorCode::InvalidArgument, "config key '" + key + "' must be a number");
  if constexpr (std::is_integral_v<T>) {
    if (!value.is_number_integer()) {
      throw Error(ErrorCode::InvalidArgument, "config key '" + key + "' must be an integer");
    }
  }
  return value.get<T>();
}

}  // namespace

void RunConfig::validate() const {
  scoring.validate();
  if (recognition.k_nearest < 1) throw Error(ErrorCode::InvalidArgument, "k_nearest must be >= 1");
  if (recognition.min_votes < 1) throw Error(ErrorCode::InvalidArgument, "min_votes must be >= 1");
  if (!(recognition.shortlist_log_ratio >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "shortlist_log_ratio must be >= 0");
  }
  if (!(recognition.match_gate > 0.0)) throw Error(ErrorCode::InvalidArgument, "match gate must be positive");
  if (!(visibility_threshold > -1.0 && visibility_threshold < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "visibility threshold must lie in (-1, 1)");
  }
  if (!(success_gate > 0.0)) throw Error(ErrorCode::InvalidArgument, "success gate must be positive");
  if (ransac.iterations < 1) throw Error(ErrorCode::InvalidArgument, "ransac_iterations must be >= 1");
  if (!(ransac.inlier_gate > 0.0)) throw Error(ErrorCode::InvalidArgument, "inlier gate must be positive");
  if (ransac.min_inliers < 0) throw Error(ErrorCode::InvalidArgument, "min_inliers must be >= 0");
}

RunConfig apply_overrides(const RunConfig& base, const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::ParseError, "config must be a JSON object");

  RunConfig cfg = base;
  for (const auto& [key, value] : doc.items()) {
    if (key == "kappa") cfg.scoring.kappa = get_number<double>(value, key);
    else if (key == "beta") cfg.scoring.beta = get_number<double>(value, key);
    else if (key == "alpha") cfg.scoring.alpha = get_number<double>(value, key);
    else if (key == "k_nearest") cfg.recognition.k_nearest = get_number<int>(value, key);
    else if (key == "shortlist_log_ratio") cfg.recognition.shortlist_log_ratio = get_number<double>(value, key);
    else if (key == "min_votes") cfg.recognition.min_votes = get_number<int>(value, key);
    else if (key == "match_gate_deg") cfg.recognition.match_gate = deg2rad(get_number<double>(value, key));
    else if (key == "visibility_threshold") cfg.visibility_threshold = get_number<double>(value, key);
    else if (key == "success_gate_deg") cfg.success_gate = deg2rad(get_number<double>(value, key));
    else if (key == "ransac_iterations") cfg.ransac.iterations = get_number<int>(value, key);
    else if (key == "inlier_gate_deg") cfg.ransac.inlier_gate = deg2rad(get_number<double>(value, key));
    else if (key == "min_inliers") cfg.ransac.min_inliers = get_number<int>(value, key);
    else throw Error(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path, const RunConfig& base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open config file " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return apply_overrides(base, text.str());
}

std::optional<std::string> resolve_config_path(const std::optional<std::string>& flag) {
  if (flag && !flag->empty()) return flag;
  if (const char* env = std::getenv("SPINDOE_CONFIG"); env && *env) return std::string(env);
  return std::nullopt;
}

std::string config_to_json(const RunConfig& cfg) {
  json doc = {
      {"kappa", cfg.scoring.kappa},
      {"beta", cfg.scoring.beta},
      {"alpha", cfg.scoring.alpha},
      {"k_nearest", cfg.recognition.k_nearest},
      {"shortlist_log_ratio", cfg.recognition.shortlist_log_ratio},
      {"min_votes", cfg.recognition.min_votes},
      {"match_gate_deg", rad2deg(cfg.recognition.match_gate)},
      {"visibility_threshold", cfg.visibility_threshold},
      {"success_gate_deg", rad2deg(cfg.success_gate)},
      {"ransac_iterations", cfg.ransac.iterations},
      {"inlier_gate_deg", rad2deg(cfg.ransac.inlier_gate)},
      {"min_inliers", cfg.ransac.min_inliers},
  };
  return doc.dump(2);
}

}  // namespace spindoe
