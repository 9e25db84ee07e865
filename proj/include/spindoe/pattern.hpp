#pragma once

#include <map>
#include <string>
#include <vector>

#include "spindoe/hashing.hpp"

namespace spindoe {

/// Polar angle theta in [0, pi] and azimuth phi in [0, 2 pi).
struct SphericalCoords {
  double theta;
  double phi;
};

SphericalCoords to_spherical(const Vector3d& v);
Vector3d from_spherical(const SphericalCoords& s);

/// Rotated pattern dots with z > threshold, original indices preserved.
struct VisibleDots {
  Matrix3Xd dots;
  std::vector<int> ids;
};

VisibleDots visible_dots(const DotPattern& pattern, const Rotationd& rotation, double threshold = 0.0);

/// n uniform dots, each redrawn until it keeps min_separation from the
/// previous ones. Throws InfeasibleSeparation after 10 000 redraws in total.
DotPattern random_pattern(int n, double min_separation, Rng& rng);

/// Rotates d about a uniformly random axis orthogonal to d by |N(0, sigma)|.
Vector3d perturb_dot(const Vector3d& d, double sigma, Rng& rng);

struct EvaluationConfig {
  RecognitionConfig recognition;
  double visibility_threshold = 0.0;
  /// Geodesic error at or above this counts as an identification failure.
  double success_gate = deg2rad(20.0);
  std::uint64_t seed = 0;
  /// Keep per-trial orientation errors (radians) for histograms.
  bool keep_errors = false;
};

struct PatternEvalReport {
  /// successes / (trials - insufficient_dots)
  double success_rate = 0.0;
  int trials = 0;
  int successes = 0;
  int insufficient_dots = 0;
  double noise_sigma_deg = 0.0;
  /// Mean geodesic error over successful trials, radians.
  double mean_orientation_error = 0.0;
  std::map<std::string, int> failure_count_by_cause;
  std::vector<double> errors;
};

/// Monte Carlo robustness: random rotation, visibility cull, per-dot
/// perturbation, recognition. Trial i draws from derive_rng(seed, i).
PatternEvalReport evaluate_pattern(const HashTable& table, int trials, double sigma,
                                   const EvaluationConfig& cfg = {});
PatternEvalReport evaluate_pattern(const DotPattern& pattern, int trials, double sigma,
                                   const EvaluationConfig& cfg = {});

/// Hash values of every (ordered basis, third dot) triple, as in HashTable::build.
Matrix3Xd hash_values(const Matrix3Xd& dots);

/// Mean over hash entries of the Euclidean distance to the nearest other entry.
double hash_space_nn_objective(const DotPattern& pattern);
double hash_space_nn_objective(const Matrix3Xd& dots);

/// Smoothed objective: the nearest-neighbour distance of each entry is
/// replaced by a log-sum-exp soft minimum (temperature `temperature`) over its
/// `neighbors` closest entries. Tends to the hard objective as temperature grows.
///
/// With saturation s > 0 each distance d first goes through s (1 - exp(-d / s)).
/// Nearly parallel or antipodal bases throw hash values arbitrarily far out, so
/// the raw mean is unbounded; the saturated form is what optimize_pattern climbs.
double soft_nn_objective(const Matrix3Xd& dots, double temperature, int neighbors = 8,
                         double saturation = 0.0);

/// Hard objective with the same saturation as soft_nn_objective.
double saturated_nn_objective(const Matrix3Xd& dots, double saturation);

struct OptimizeConfig {
  int iterations = 60;
  double initial_step = 0.05;  // radians along the normalized gradient
  double temperature = 50.0;
  double fd_step = 1e-5;
  int neighbors = 8;
  double saturation = 0.3;
};

struct OptimizeTrace {
  std::vector<double> soft_objective;  // after each accepted step
  std::vector<double> hard_objective;  // saturated hard objective
  double initial_soft = 0.0;
  double initial_hard = 0.0;
};

/// Gradient ascent over spherical coordinates with central-difference
/// gradients and backtracking on the saturated soft objective. Returns the
/// best pattern seen by the saturated hard objective.
DotPattern optimize_pattern(int n, const OptimizeConfig& cfg, Rng& rng,
                            OptimizeTrace* trace = nullptr);

}  // namespace spindoe
