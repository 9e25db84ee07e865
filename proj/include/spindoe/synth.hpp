#pragma once

#include <optional>
#include <vector>

#include "spindoe/hashing.hpp"

namespace spindoe {

struct NoiseConfig {
  double sigma = 0.0;           // radians, per-dot perturbation scale
  double dropout_prob = 0.05;   // each visible dot is lost with this probability
  double spurious_rate = 0.3;   // mean number of extra dots per frame (Poisson)
  std::uint64_t seed = 0;
  double visibility_threshold = 0.0;

  static NoiseConfig clean() { return {0.0, 0.0, 0.0, 0, 0.0}; }
  void validate() const;
};

struct GroundTruthFrame {
  double t = 0.0;
  Rotationd q_true = Rotationd::Identity();
  std::vector<int> visible_ids;
  ObservedDotSet observed;
  /// Pattern index behind each observed dot, -1 for spurious detections.
  std::vector<int> source_ids;
};

/// Rotate, cull to z > threshold, perturb, drop out, then append spurious dots
/// drawn uniformly on the visible cap.
GroundTruthFrame generate_observation(const DotPattern& pattern, const Rotationd& q,
                                      const NoiseConfig& noise, Rng& rng);

/// Frames at t = i / fps. Frame i draws its noise from derive_rng(noise.seed, i).
/// With a dampening coefficient k the axis stays fixed and the rotation angle
/// is |w0| (1 - exp(-k t)) / k.
std::vector<GroundTruthFrame> generate_sequence(const DotPattern& pattern, const Rotationd& q0,
                                                const Vector3d& omega, double fps, int n_frames,
                                                const NoiseConfig& noise,
                                                std::optional<double> dampening = std::nullopt);

/// q followed by a rotation about a uniformly random axis by |N(0, sigma)|.
Rotationd perturb_rotation(const Rotationd& q, double sigma, Rng& rng);

/// Orientation at time t under the sequence model above.
Rotationd sequence_orientation(const Rotationd& q0, const Vector3d& omega, double t,
                               std::optional<double> dampening = std::nullopt);

}  // namespace spindoe
