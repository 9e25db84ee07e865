#include "spindoe/synth.hpp"

#include <cmath>

#include "spindoe/pattern.hpp"
#include "spindoe/spin.hpp"

namespace spindoe {

void NoiseConfig::validate() const {
  if (!(sigma >= 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma must be >= 0");
  if (!(dropout_prob >= 0.0 && dropout_prob <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "dropout_prob must lie in [0, 1]");
  }
  if (!(spurious_rate >= 0.0)) throw Error(ErrorCode::InvalidArgument, "spurious_rate must be >= 0");
  if (!(visibility_threshold > -1.0 && visibility_threshold < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "visibility threshold must lie in (-1, 1)");
  }
}

GroundTruthFrame generate_observation(const DotPattern& pattern, const Rotationd& q,
                                      const NoiseConfig& noise, Rng& rng) {
  noise.validate();
  GroundTruthFrame frame;
  frame.q_true = canonical(q);
  const VisibleDots visible = visible_dots(pattern, frame.q_true, noise.visibility_threshold);
  frame.visible_ids = visible.ids;

  std::vector<Vector3d> dots;
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  for (std::size_t k = 0; k < visible.ids.size(); ++k) {
    const Vector3d d = perturb_dot(visible.dots.col(static_cast<Eigen::Index>(k)), noise.sigma, rng);
    if (noise.dropout_prob > 0.0 && uniform(rng) < noise.dropout_prob) continue;
    dots.push_back(d);
    frame.source_ids.push_back(visible.ids[k]);
  }
  if (noise.spurious_rate > 0.0) {
    const int extra = std::poisson_distribution<int>(noise.spurious_rate)(rng);
    for (int s = 0; s < extra; ++s) {
      // Uniform on the cap z > threshold: z is uniform there (Archimedes).
      const double z = noise.visibility_threshold + (1.0 - noise.visibility_threshold) * (1.0 - uniform(rng));
      const double phi = 2.0 * kPi * uniform(rng);
      const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
      dots.emplace_back(rho * std::cos(phi), rho * std::sin(phi), z);
      frame.source_ids.push_back(-1);
    }
  }
  frame.observed.dots.resize(3, static_cast<Eigen::Index>(dots.size()));
  for (std::size_t k = 0; k < dots.size(); ++k) frame.observed.dots.col(static_cast<Eigen::Index>(k)) = dots[k];
  return frame;
}

Rotationd perturb_rotation(const Rotationd& q, double sigma, Rng& rng) {
  if (!(sigma >= 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma must be >= 0");
  const Vector3d axis = random_unit_vector(rng);
  const double angle = std::abs(std::normal_distribution<double>(0.0, sigma)(rng));
  return canonical(Rotationd(Eigen::AngleAxisd(angle, axis) * q));
}

Rotationd sequence_orientation(const Rotationd& q0, const Vector3d& omega, double t,
                               std::optional<double> dampening) {
  if (!dampening || *dampening == 0.0) return propagate_orientation(q0, omega, t);
  const double k = *dampening;
  const double magnitude = omega.norm();
  if (magnitude == 0.0) return canonical(q0);
  const double angle = magnitude * -std::expm1(-k * t) / k;
  return canonical(Rotationd(exp_map(omega / magnitude * angle) * q0));
}

std::vector<GroundTruthFrame> generate_sequence(const DotPattern& pattern, const Rotationd& q0,
                                                const Vector3d& omega, double fps, int n_frames,
                                                const NoiseConfig& noise,
                                                std::optional<double> dampening) {
  if (!(fps > 0.0)) throw Error(ErrorCode::InvalidArgument, "fps must be positive");
  if (n_frames < 1) throw Error(ErrorCode::InvalidArgument, "need at least one frame");
  std::vector<GroundTruthFrame> frames;
  frames.reserve(static_cast<std::size_t>(n_frames));
  for (int i = 0; i < n_frames; ++i) {
    const double t = i / fps;
    Rng rng = derive_rng(noise.seed, static_cast<std::uint64_t>(i));
    GroundTruthFrame frame =
        generate_observation(pattern, sequence_orientation(q0, omega, t, dampening), noise, rng);
    frame.t = t;
    frame.observed.t = t;
    frames.push_back(std::move(frame));
  }
  return frames;
}

}  // namespace spindoe
