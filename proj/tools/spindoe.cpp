#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "spindoe/config.hpp"
#include "spindoe/hashing.hpp"
#include "spindoe/io.hpp"
#include "spindoe/pattern.hpp"
#include "spindoe/spin.hpp"
#include "spindoe/synth.hpp"

#ifndef SPINDOE_VERSION
#define SPINDOE_VERSION "dev"
#endif

using nlohmann::json;
using namespace spindoe;

namespace {

/// Everything a subcommand needs besides its own flags, plus what ends up in
/// the manifest.
struct Context {
  std::vector<std::string> argv;
  std::string subcommand;
  RunConfig config;
  std::uint64_t seed = 0;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  json summary;
};

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path);
  return out;
}

void write_manifest(const Context& ctx, double seconds) {
  if (ctx.outputs.empty()) return;
  json manifest = {
      {"subcommand", ctx.subcommand},
      {"argv", ctx.argv},
      {"config", json::parse(config_to_json(ctx.config))},
      {"seed", ctx.seed},
      {"inputs", ctx.inputs},
      {"outputs", ctx.outputs},
      {"tool_version", SPINDOE_VERSION},
      {"wall_clock_seconds", seconds},
  };
  if (!ctx.summary.is_null()) manifest["summary"] = ctx.summary;
  std::ofstream out = open_output(ctx.outputs.front() + ".manifest.json");
  out << manifest.dump(2) << "\n";
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> values;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, "bad number '" + item + "' in list '" + text + "'");
    }
  }
  if (values.empty()) throw Error(ErrorCode::InvalidArgument, "empty list");
  return values;
}

double min_separation(const DotPattern& p) {
  double best = kPi;
  for (int i = 0; i < p.size(); ++i) {
    for (int j = i + 1; j < p.size(); ++j) best = std::min(best, angle_between(p.dots.col(i), p.dots.col(j)));
  }
  return best;
}

std::string truth_path_for(const std::string& out) {
  const auto dot = out.rfind('.');
  const auto slash = out.find_last_of('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return out + "_truth.csv";
  return out.substr(0, dot) + "_truth.csv";
}

EvaluationConfig evaluation_config(const Context& ctx) {
  EvaluationConfig cfg;
  cfg.recognition = ctx.config.recognition;
  cfg.visibility_threshold = ctx.config.visibility_threshold;
  cfg.success_gate = ctx.config.success_gate;
  cfg.seed = ctx.seed;
  return cfg;
}

json report_to_json(const PatternEvalReport& r) {
  return {
      {"success_rate", r.success_rate},
      {"trials", r.trials},
      {"successes", r.successes},
      {"insufficient_dots", r.insufficient_dots},
      {"noise_sigma_deg", r.noise_sigma_deg},
      {"mean_orientation_error", r.mean_orientation_error},
      {"mean_orientation_error_deg", rad2deg(r.mean_orientation_error)},
      {"failure_count_by_cause", r.failure_count_by_cause},
  };
}

// ---------------------------------------------------------------- pattern

struct PatternGenArgs {
  int n = 20;
  int iters = 60;
  bool random = false;
  double min_sep_deg = 0.0;
  std::string out;
};

void pattern_gen(Context& ctx, const PatternGenArgs& a) {
  if (a.n < 3) throw Error(ErrorCode::InvalidArgument, "--n must be at least 3");
  Rng rng(ctx.seed);
  DotPattern pattern;
  if (a.random) {
    pattern = random_pattern(a.n, deg2rad(a.min_sep_deg), rng);
  } else {
    if (a.n < 4) throw Error(ErrorCode::InvalidArgument, "optimized patterns need --n >= 4");
    OptimizeConfig oc;
    oc.iterations = a.iters;
    pattern = optimize_pattern(a.n, oc, rng);
  }
  save_pattern(a.out, pattern);
  ctx.outputs.push_back(a.out);
  ctx.summary = {{"n", pattern.size()},
                 {"id", pattern.id},
                 {"objective", hash_space_nn_objective(pattern)},
                 {"min_separation_deg", rad2deg(min_separation(pattern))}};
  std::cout << ctx.summary.dump(2) << "\n";
}

struct PatternEvalArgs {
  std::string pattern;
  double sigma_deg = 3.0;
  int trials = 10000;
  std::string report;
};

void pattern_eval(Context& ctx, const PatternEvalArgs& a) {
  const DotPattern pattern = load_pattern(a.pattern);
  ctx.inputs.push_back(a.pattern);
  const HashTable table = HashTable::build(pattern, ctx.config.scoring);
  const PatternEvalReport report = evaluate_pattern(table, a.trials, deg2rad(a.sigma_deg), evaluation_config(ctx));
  json doc = report_to_json(report);
  doc["pattern_id"] = pattern.id;
  doc["seed"] = ctx.seed;
  if (a.report.empty()) {
    std::cout << doc.dump(2) << "\n";
    return;
  }
  open_output(a.report) << doc.dump(2) << "\n";
  ctx.outputs.push_back(a.report);
}

// ---------------------------------------------------------------- hash

struct HashBuildArgs {
  std::string pattern;
  std::string out;
};

void hash_build(Context& ctx, const HashBuildArgs& a) {
  const DotPattern pattern = load_pattern(a.pattern);
  ctx.inputs.push_back(a.pattern);
  const HashTable table = HashTable::build(pattern, ctx.config.scoring);
  ctx.summary = {{"pattern_id", table.pattern_id()},
                 {"entries", table.entries().size()},
                 {"skipped_bases", table.skipped_bases()},
                 {"mean_nn_distance", table.index().mean_nearest_neighbor_distance()}};
  if (!a.out.empty()) {
    std::ofstream out = open_output(a.out);
    out << "h0,h1,h2,basis_first,basis_second,dot_id\n";
    for (const HashEntry& e : table.entries()) {
      out << format_double(e.hash_value.x()) << "," << format_double(e.hash_value.y()) << ","
          << format_double(e.hash_value.z()) << "," << e.basis_first << "," << e.basis_second << "," << e.dot_id
          << "\n";
    }
    ctx.outputs.push_back(a.out);
  }
  std::cout << ctx.summary.dump(2) << "\n";
}

// ---------------------------------------------------------------- orient

struct OrientArgs {
  std::string pattern;
  std::string obs;
  std::string out;
  bool randomize = false;
};

void orient(Context& ctx, const OrientArgs& a) {
  const DotPattern pattern = load_pattern(a.pattern);
  const std::vector<ObservationFrame> frames = read_observations_file(a.obs);
  ctx.inputs.push_back(a.pattern);
  ctx.inputs.push_back(a.obs);
  const HashTable table = HashTable::build(pattern, ctx.config.scoring);
  RecognitionConfig rc = ctx.config.recognition;
  rc.randomize = a.randomize;
  rc.seed = ctx.seed;

  std::vector<RecognitionRow> rows;
  int ok = 0;
  for (const ObservationFrame& f : frames) {
    RecognitionRow row;
    row.frame = f.frame;
    row.t = f.observed.t;
    row.n_dots = static_cast<int>(f.observed.dots.cols());
    if (row.n_dots < 3) {
      row.status = "too_few_dots";
    } else {
      try {
        const RecognitionResult r = recognize(table, f.observed, rc);
        row.q = r.orientation;
        row.rmse = r.rmse;
        row.n_matched = static_cast<int>(r.correspondences.size());
        row.status = "ok";
        ++ok;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NoBasisAboveThreshold && e.code() != ErrorCode::DegenerateConfiguration) throw;
        row.status = "no_consensus";
      }
    }
    rows.push_back(row);
  }
  std::ofstream out = open_output(a.out);
  write_recognition_results(out, rows);
  ctx.outputs.push_back(a.out);
  ctx.summary = {{"frames", rows.size()}, {"ok", ok}};
}

// ---------------------------------------------------------------- spin

struct SpinArgs {
  std::string orient;
  std::string out;
  double fps = 0.0;
  bool no_ransac = false;
  std::optional<int> iterations;
  std::optional<double> gate_deg;
  std::optional<int> min_inliers;
};

void spin(Context& ctx, const SpinArgs& a) {
  std::vector<OrientationSample> samples = read_orientations_file(a.orient);
  ctx.inputs.push_back(a.orient);
  if (a.fps > 0.0) {
    for (std::size_t i = 0; i < samples.size(); ++i) samples[i].t = static_cast<double>(i) / a.fps;
  }
  if (samples.size() < 3) {
    throw Error(ErrorCode::TooFewSamples, "spin needs at least 3 orientations, got " + std::to_string(samples.size()));
  }
  RansacConfig rc = ctx.config.ransac;
  if (a.iterations) rc.iterations = *a.iterations;
  if (a.gate_deg) rc.inlier_gate = deg2rad(*a.gate_deg);
  if (a.min_inliers) rc.min_inliers = *a.min_inliers;
  rc.seed = ctx.seed;

  SpinEstimate estimate;
  std::string status = "ok";
  try {
    estimate = a.no_ransac ? quatera_fit(samples) : ransac_spin(samples, rc);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::NoConsensus) status = "no_consensus";
    else if (e.code() == ErrorCode::NonUniqueAxis) status = "non_unique_axis";
    else throw;
  }
  std::ofstream out = open_output(a.out);
  write_spin(out, estimate, status);
  ctx.outputs.push_back(a.out);
  ctx.summary = {{"status", status}, {"mag_rps", estimate.omega.norm() / (2.0 * kPi)}};
}

// ---------------------------------------------------------------- dampen

struct DampenArgs {
  std::string norms;
  std::string orient;
  std::string out;
  bool linear = false;
  std::optional<double> nu;
  std::optional<double> radius;
  std::optional<double> mass;
};

void dampen(Context& ctx, const DampenArgs& a) {
  json doc = json::object();
  if (!a.norms.empty() || !a.orient.empty()) {
    std::vector<double> t, norms;
    if (!a.norms.empty()) {
      std::ifstream in(a.norms);
      if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open " + a.norms);
      read_norm_series(in, t, norms);
      ctx.inputs.push_back(a.norms);
    } else {
      const auto samples = read_orientations_file(a.orient);
      ctx.inputs.push_back(a.orient);
      for (std::size_t i = 1; i < samples.size(); ++i) {
        t.push_back(0.5 * (samples[i - 1].t + samples[i].t));
        norms.push_back(finite_difference_spin(samples[i - 1], samples[i]).norm());
      }
    }
    doc = json::parse(dampening_to_json(dampening_fit(t, norms)));
    if (a.linear) doc["linear"] = json::parse(dampening_to_json(dampening_fit_linear(t, norms)));
  }
  if (a.nu || a.radius || a.mass) {
    if (!(a.nu && a.radius && a.mass)) {
      throw Error(ErrorCode::InvalidArgument, "--nu, --radius and --mass go together");
    }
    doc["theoretical"] = theoretical_dampening(*a.nu, *a.radius, *a.mass);
  }
  if (doc.empty()) throw Error(ErrorCode::InvalidArgument, "give --norms, --orient or --nu/--radius/--mass");
  if (a.out.empty()) {
    std::cout << doc.dump(2) << "\n";
    return;
  }
  open_output(a.out) << doc.dump(2) << "\n";
  ctx.outputs.push_back(a.out);
}

// ---------------------------------------------------------------- synth

struct NoiseArgs {
  double sigma_deg = 0.0;
  double dropout = NoiseConfig{}.dropout_prob;
  double spurious = NoiseConfig{}.spurious_rate;
  bool clean = false;

  NoiseConfig resolve(const Context& ctx) const {
    NoiseConfig n;
    n.sigma = deg2rad(sigma_deg);
    n.dropout_prob = clean ? 0.0 : dropout;
    n.spurious_rate = clean ? 0.0 : spurious;
    n.seed = ctx.seed;
    n.visibility_threshold = ctx.config.visibility_threshold;
    n.validate();
    return n;
  }
};

void add_noise_flags(CLI::App* cmd, NoiseArgs& n) {
  cmd->add_option("--sigma", n.sigma_deg, "per-dot noise scale, degrees")->capture_default_str();
  cmd->add_option("--dropout", n.dropout, "probability of losing each visible dot")->capture_default_str();
  cmd->add_option("--spurious", n.spurious, "mean spurious dots per frame")->capture_default_str();
  cmd->add_flag("--clean", n.clean, "no dropout and no spurious dots");
}

void write_synth(Context& ctx, const std::vector<GroundTruthFrame>& frames, const std::string& out_path,
                 std::string truth_path) {
  if (truth_path.empty()) truth_path = truth_path_for(out_path);
  std::ofstream out = open_output(out_path);
  write_observations(out, to_observation_frames(frames));
  std::ofstream truth = open_output(truth_path);
  write_ground_truth(truth, frames);
  ctx.outputs = {out_path, truth_path};
}

struct SynthObsArgs {
  std::string pattern;
  int frames = 100;
  double fps = 350.0;
  NoiseArgs noise;
  std::string out;
  std::string truth;
};

void synth_obs(Context& ctx, const SynthObsArgs& a) {
  if (a.frames < 1) throw Error(ErrorCode::InvalidArgument, "--frames must be >= 1");
  if (!(a.fps > 0.0)) throw Error(ErrorCode::InvalidArgument, "--fps must be positive");
  const DotPattern pattern = load_pattern(a.pattern);
  ctx.inputs.push_back(a.pattern);
  const NoiseConfig noise = a.noise.resolve(ctx);
  std::vector<GroundTruthFrame> frames;
  for (int i = 0; i < a.frames; ++i) {
    Rng rng = derive_rng(ctx.seed, static_cast<std::uint64_t>(i));
    GroundTruthFrame f = generate_observation(pattern, random_rotation(rng), noise, rng);
    f.t = i / a.fps;
    f.observed.t = f.t;
    frames.push_back(std::move(f));
  }
  write_synth(ctx, frames, a.out, a.truth);
}

struct SynthSeqArgs {
  std::string pattern;
  double rps = 50.0;
  std::string axis;
  double fps = 350.0;
  int frames = 10;
  std::optional<double> dampening;
  NoiseArgs noise;
  std::string out;
  std::string truth;
};

void synth_seq(Context& ctx, const SynthSeqArgs& a) {
  const DotPattern pattern = load_pattern(a.pattern);
  ctx.inputs.push_back(a.pattern);
  Rng rng(ctx.seed);
  const Rotationd q0 = random_rotation(rng);
  Vector3d axis = random_unit_vector(rng);
  if (!a.axis.empty()) {
    const auto v = parse_list(a.axis);
    if (v.size() != 3) throw Error(ErrorCode::InvalidArgument, "--axis needs three components");
    axis = Vector3d(v[0], v[1], v[2]);
    if (!(axis.norm() > 0.0)) throw Error(ErrorCode::InvalidArgument, "--axis must be non-zero");
    axis.normalize();
  }
  const auto frames = generate_sequence(pattern, q0, 2.0 * kPi * a.rps * axis, a.fps, a.frames,
                                        a.noise.resolve(ctx), a.dampening);
  write_synth(ctx, frames, a.out, a.truth);
  ctx.summary = {{"omega", {2.0 * kPi * a.rps * axis.x(), 2.0 * kPi * a.rps * axis.y(), 2.0 * kPi * a.rps * axis.z()}},
                 {"q0", {q0.w(), q0.x(), q0.y(), q0.z()}}};
}

// ---------------------------------------------------------------- bench

struct BenchArgs {
  std::string suite;
  std::string pattern;
  int trials = 1000;
  std::string sigmas = "0,1,3,5,8";
  double rps = 50.0;
  double fps = 350.0;
  int frames = 10;
  bool pipeline = false;
  std::string out;
};

void bench_sensitivity(Context& ctx, const HashTable& table, const BenchArgs& a, std::ostream& out) {
  out << "sigma_deg,trials,evaluated,successes,success_rate,mean_error_deg,insufficient_dots,no_basis,"
         "wrong_orientation\n";
  json summary = json::array();
  for (double s : parse_list(a.sigmas)) {
    const auto r = evaluate_pattern(table, a.trials, deg2rad(s), evaluation_config(ctx));
    out << format_double(s) << "," << r.trials << "," << r.trials - r.insufficient_dots << "," << r.successes
        << "," << format_double(r.success_rate) << "," << format_double(rad2deg(r.mean_orientation_error)) << ","
        << r.insufficient_dots << "," << r.failure_count_by_cause.at("no_basis") << ","
        << r.failure_count_by_cause.at("wrong_orientation") << "\n";
    summary.push_back({{"sigma_deg", s}, {"success_rate", r.success_rate}});
  }
  ctx.summary = summary;
}

void bench_orientation(Context& ctx, const HashTable& table, const BenchArgs& a, std::ostream& out) {
  constexpr double kBinDeg = 0.25;
  out << "sigma_deg,bin_lo_deg,bin_hi_deg,count\n";
  json summary = json::array();
  for (double s : parse_list(a.sigmas)) {
    EvaluationConfig cfg = evaluation_config(ctx);
    cfg.keep_errors = true;
    const auto r = evaluate_pattern(table, a.trials, deg2rad(s), cfg);
    const double gate_deg = rad2deg(cfg.success_gate);
    const int bins = static_cast<int>(std::ceil(gate_deg / kBinDeg));
    std::vector<int> counts(static_cast<std::size_t>(bins) + 1, 0);
    for (double e : r.errors) {
      const double deg = rad2deg(e);
      const int b = deg >= gate_deg ? bins : std::min(bins - 1, static_cast<int>(deg / kBinDeg));
      ++counts[static_cast<std::size_t>(b)];
    }
    for (int b = 0; b < bins; ++b) {
      out << format_double(s) << "," << format_double(b * kBinDeg) << ","
          << format_double(std::min(gate_deg, (b + 1) * kBinDeg)) << "," << counts[static_cast<std::size_t>(b)]
          << "\n";
    }
    out << format_double(s) << "," << format_double(gate_deg) << ",inf," << counts.back() << "\n";
    summary.push_back({{"sigma_deg", s},
                       {"mean_error_deg", rad2deg(r.mean_orientation_error)},
                       {"success_rate", r.success_rate}});
  }
  ctx.summary = summary;
}

void bench_spin(Context& ctx, const DotPattern& pattern, const BenchArgs& a, std::ostream& out) {
  out << "sigma_deg,trial,true_rps,est_rps,rel_error,n_inliers,status\n";
  std::optional<HashTable> table;
  if (a.pipeline) table = HashTable::build(pattern, ctx.config.scoring);
  json summary = json::array();
  for (double s : parse_list(a.sigmas)) {
    std::vector<double> rel;
    for (int trial = 0; trial < a.trials; ++trial) {
      Rng rng = derive_rng(ctx.seed, static_cast<std::uint64_t>(trial));
      const Rotationd q0 = random_rotation(rng);
      const Vector3d omega = 2.0 * kPi * a.rps * random_unit_vector(rng);
      std::vector<OrientationSample> samples;
      if (a.pipeline) {
        NoiseConfig noise = NoiseConfig::clean();
        noise.sigma = deg2rad(s);
        noise.seed = rng();
        noise.visibility_threshold = ctx.config.visibility_threshold;
        for (const auto& f : generate_sequence(pattern, q0, omega, a.fps, a.frames, noise)) {
          try {
            samples.push_back({f.t, recognize(*table, f.observed, ctx.config.recognition).orientation, {}});
          } catch (const Error& e) {
            if (e.code() != ErrorCode::NoBasisAboveThreshold && e.code() != ErrorCode::DegenerateConfiguration &&
                e.code() != ErrorCode::TooFewDots) {
              throw;
            }
          }
        }
      } else {
        for (int i = 0; i < a.frames; ++i) {
          const double t = i / a.fps;
          samples.push_back({t, perturb_rotation(propagate_orientation(q0, omega, t), deg2rad(s), rng), {}});
        }
      }
      std::string status = "ok";
      SpinEstimate est;
      try {
        RansacConfig rc = ctx.config.ransac;
        rc.seed = ctx.seed + static_cast<std::uint64_t>(trial);
        est = ransac_spin(samples, rc);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::NoConsensus) status = "no_consensus";
        else if (e.code() == ErrorCode::NonUniqueAxis) status = "non_unique_axis";
        else if (e.code() == ErrorCode::TooFewSamples) status = "too_few_samples";
        else throw;
      }
      const double r = status == "ok" ? (est.omega - omega).norm() / omega.norm() : 1.0;
      if (status == "ok") rel.push_back(r);
      out << format_double(s) << "," << trial << "," << format_double(a.rps) << ","
          << format_double(est.omega.norm() / (2.0 * kPi)) << "," << format_double(r) << "," << est.inliers.size()
          << "," << status << "\n";
    }
    std::sort(rel.begin(), rel.end());
    auto quantile = [&](double p) {
      return rel.empty() ? std::nan("") : rel[static_cast<std::size_t>(p * static_cast<double>(rel.size() - 1))];
    };
    summary.push_back({{"sigma_deg", s},
                       {"fits", rel.size()},
                       {"median_rel_error", quantile(0.5)},
                       {"p90_rel_error", quantile(0.9)},
                       {"max_rel_error", quantile(1.0)}});
  }
  ctx.summary = summary;
}

void bench(Context& ctx, const BenchArgs& a) {
  if (a.trials < 1) throw Error(ErrorCode::InvalidArgument, "--trials must be >= 1");
  DotPattern pattern;
  if (a.pattern.empty()) {
    Rng rng(ctx.seed);
    pattern = random_pattern(20, 0.0, rng);
  } else {
    pattern = load_pattern(a.pattern);
    ctx.inputs.push_back(a.pattern);
  }
  std::ofstream file;
  if (!a.out.empty()) file = open_output(a.out);
  std::ostream& out = a.out.empty() ? std::cout : file;
  if (a.suite == "spin") {
    bench_spin(ctx, pattern, a, out);
  } else {
    const HashTable table = HashTable::build(pattern, ctx.config.scoring);
    if (a.suite == "sensitivity") bench_sensitivity(ctx, table, a, out);
    else bench_orientation(ctx, table, a, out);
  }
  if (!a.out.empty()) {
    ctx.outputs.push_back(a.out);
    std::cout << ctx.summary.dump(2) << "\n";
  }
}

// ---------------------------------------------------------------- driver

int run(const std::vector<std::string>& args, const std::optional<RunConfig>& forced_config);

int replay(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open " + manifest_path);
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, std::string("manifest: ") + e.what());
  }
  if (!manifest.contains("argv") || !manifest["argv"].is_array()) {
    throw Error(ErrorCode::ParseError, "manifest has no argv");
  }
  const auto args = manifest["argv"].get<std::vector<std::string>>();
  std::optional<RunConfig> config;
  if (manifest.contains("config")) config = apply_overrides(RunConfig{}, manifest["config"].dump());
  return run(args, config);
}

int run(const std::vector<std::string>& args, const std::optional<RunConfig>& forced_config) {
  CLI::App app{"Orientation and spin estimation for dotted balls"};
  app.set_version_flag("--version", SPINDOE_VERSION);
  app.require_subcommand(1);
  app.fallthrough();

  Context ctx;
  ctx.argv = args;
  std::optional<std::string> config_path;
  app.add_option("--seed", ctx.seed, "master random seed")->capture_default_str();
  app.add_option("--config", config_path, "JSON overrides (falls back to $SPINDOE_CONFIG)");

  auto* pattern_cmd = app.add_subcommand("pattern", "generate or evaluate dot patterns");
  pattern_cmd->require_subcommand(1);
  PatternGenArgs gen;
  auto* gen_cmd = pattern_cmd->add_subcommand("gen", "create a pattern");
  gen_cmd->add_option("--n", gen.n, "number of dots")->capture_default_str();
  gen_cmd->add_option("--iters", gen.iters, "optimizer iterations")->capture_default_str();
  gen_cmd->add_flag("--random", gen.random, "uniform random dots, no optimization");
  gen_cmd->add_option("--min-sep", gen.min_sep_deg, "minimum separation for --random, degrees");
  gen_cmd->add_option("-o,--out", gen.out, "pattern JSON")->required();

  PatternEvalArgs eval;
  auto* eval_cmd = pattern_cmd->add_subcommand("eval", "Monte Carlo robustness of a pattern");
  eval_cmd->add_option("--pattern", eval.pattern)->required();
  eval_cmd->add_option("--sigma", eval.sigma_deg, "dot noise, degrees")->capture_default_str();
  eval_cmd->add_option("--trials", eval.trials)->capture_default_str()->check(CLI::PositiveNumber);
  eval_cmd->add_option("--report", eval.report, "report JSON (stdout if omitted)");

  auto* hash_cmd = app.add_subcommand("hash", "hash table tools");
  hash_cmd->require_subcommand(1);
  HashBuildArgs hb;
  auto* build_cmd = hash_cmd->add_subcommand("build", "build the table and report its size");
  build_cmd->add_option("--pattern", hb.pattern)->required();
  build_cmd->add_option("-o,--out", hb.out, "entries CSV");

  OrientArgs oa;
  auto* orient_cmd = app.add_subcommand("orient", "recognize the orientation of each observed frame");
  orient_cmd->add_option("--pattern", oa.pattern)->required();
  orient_cmd->add_option("--obs", oa.obs, "observation CSV")->required();
  orient_cmd->add_option("--out", oa.out, "result CSV")->required();
  orient_cmd->add_flag("--randomize", oa.randomize, "shuffle basis pairs with --seed");

  SpinArgs sa;
  auto* spin_cmd = app.add_subcommand("spin", "fit a constant spin to an orientation sequence");
  spin_cmd->add_option("--orient", sa.orient, "orientation or recognition CSV")->required();
  spin_cmd->add_option("--out", sa.out, "spin CSV")->required();
  spin_cmd->add_option("--fps", sa.fps, "replace timestamps by row / fps");
  spin_cmd->add_flag("--no-ransac", sa.no_ransac, "plain regression on all samples");
  spin_cmd->add_option("--iterations", sa.iterations, "RANSAC iterations");
  spin_cmd->add_option("--gate", sa.gate_deg, "RANSAC inlier gate, degrees");
  spin_cmd->add_option("--min-inliers", sa.min_inliers, "0 selects max(4, n/2)");

  DampenArgs da;
  auto* dampen_cmd = app.add_subcommand("dampen", "fit exponential spin decay");
  dampen_cmd->add_option("--norms", da.norms, "CSV t,omega (rad/s)");
  dampen_cmd->add_option("--orient", da.orient, "orientation CSV, norms from successive differences");
  dampen_cmd->add_option("--out", da.out, "JSON output (stdout if omitted)");
  dampen_cmd->add_flag("--linear", da.linear, "also report the first-order linear fit");
  dampen_cmd->add_option("--nu", da.nu, "air viscosity, kg/(m s)");
  dampen_cmd->add_option("--radius", da.radius, "ball radius, m");
  dampen_cmd->add_option("--mass", da.mass, "ball mass, kg");

  auto* synth_cmd = app.add_subcommand("synth", "synthetic observations with ground truth");
  synth_cmd->require_subcommand(1);
  SynthObsArgs so;
  auto* obs_cmd = synth_cmd->add_subcommand("obs", "independent random orientations");
  obs_cmd->add_option("--pattern", so.pattern)->required();
  obs_cmd->add_option("--frames", so.frames)->capture_default_str();
  obs_cmd->add_option("--fps", so.fps)->capture_default_str();
  add_noise_flags(obs_cmd, so.noise);
  obs_cmd->add_option("--out", so.out, "observation CSV")->required();
  obs_cmd->add_option("--truth", so.truth, "ground-truth CSV (default <out>_truth.csv)");

  SynthSeqArgs sq;
  auto* seq_cmd = synth_cmd->add_subcommand("seq", "a spinning sequence");
  seq_cmd->add_option("--pattern", sq.pattern)->required();
  seq_cmd->add_option("--rps", sq.rps, "spin, revolutions per second")->capture_default_str();
  seq_cmd->add_option("--axis", sq.axis, "spin axis x,y,z (random if omitted)");
  seq_cmd->add_option("--fps", sq.fps)->capture_default_str();
  seq_cmd->add_option("--frames", sq.frames)->capture_default_str();
  seq_cmd->add_option("--dampening", sq.dampening, "decay rate k, 1/s");
  add_noise_flags(seq_cmd, sq.noise);
  seq_cmd->add_option("--out", sq.out, "observation CSV")->required();
  seq_cmd->add_option("--truth", sq.truth, "ground-truth CSV (default <out>_truth.csv)");

  BenchArgs ba;
  auto* bench_cmd = app.add_subcommand("bench", "benchmark suites emitting plot data as CSV");
  bench_cmd->add_option("--suite", ba.suite)->required()->check(CLI::IsMember({"orientation", "spin", "sensitivity"}));
  bench_cmd->add_option("--pattern", ba.pattern, "pattern JSON (random 20 dots if omitted)");
  bench_cmd->add_option("--trials", ba.trials)->capture_default_str();
  bench_cmd->add_option("--sigmas", ba.sigmas, "comma-separated noise levels, degrees")->capture_default_str();
  bench_cmd->add_option("--rps", ba.rps, "spin suite magnitude")->capture_default_str();
  bench_cmd->add_option("--fps", ba.fps)->capture_default_str();
  bench_cmd->add_option("--frames", ba.frames)->capture_default_str();
  bench_cmd->add_flag("--pipeline", ba.pipeline, "spin suite through dot noise and recognition");
  bench_cmd->add_option("--out", ba.out, "CSV output (stdout if omitted)");

  std::string manifest_path;
  auto* replay_cmd = app.add_subcommand("replay", "rerun the command recorded in a manifest");
  replay_cmd->add_option("--manifest", manifest_path)->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (replay_cmd->parsed()) return replay(manifest_path);

  if (forced_config) {
    ctx.config = *forced_config;
  } else if (const auto path = resolve_config_path(config_path)) {
    ctx.config = load_config(*path);
    ctx.inputs.push_back(*path);
  }

  const auto start = std::chrono::steady_clock::now();
  if (gen_cmd->parsed()) {
    ctx.subcommand = "pattern gen";
    pattern_gen(ctx, gen);
  } else if (eval_cmd->parsed()) {
    ctx.subcommand = "pattern eval";
    pattern_eval(ctx, eval);
  } else if (build_cmd->parsed()) {
    ctx.subcommand = "hash build";
    hash_build(ctx, hb);
  } else if (orient_cmd->parsed()) {
    ctx.subcommand = "orient";
    orient(ctx, oa);
  } else if (spin_cmd->parsed()) {
    ctx.subcommand = "spin";
    spin(ctx, sa);
  } else if (dampen_cmd->parsed()) {
    ctx.subcommand = "dampen";
    dampen(ctx, da);
  } else if (obs_cmd->parsed()) {
    ctx.subcommand = "synth obs";
    synth_obs(ctx, so);
  } else if (seq_cmd->parsed()) {
    ctx.subcommand = "synth seq";
    synth_seq(ctx, sq);
  } else if (bench_cmd->parsed()) {
    ctx.subcommand = "bench " + ba.suite;
    bench(ctx, ba);
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_manifest(ctx, seconds);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    return run(args, std::nullopt);
  } catch (const Error& e) {
    std::cerr << "spindoe: " << e.what() << "\n";
    return e.code() == ErrorCode::NonConvergence ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "spindoe: internal error: " << e.what() << "\n";
    return 1;
  }
}
