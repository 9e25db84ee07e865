#include "spindoe/geometry.hpp"

#include <array>

namespace spindoe {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::SingularBasis: return "SingularBasis";
    case ErrorCode::OutsideDisk: return "OutsideDisk";
    case ErrorCode::TooFewDots: return "TooFewDots";
    case ErrorCode::NoBasisAboveThreshold: return "NoBasisAboveThreshold";
    case ErrorCode::EmptyCorrespondences: return "EmptyCorrespondences";
    case ErrorCode::InfeasibleSeparation: return "InfeasibleSeparation";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::NonUniqueAxis: return "NonUniqueAxis";
    case ErrorCode::NoConsensus: return "NoConsensus";
    case ErrorCode::NonPositiveNorm: return "NonPositiveNorm";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

Rng derive_rng(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t state = seed;
  const std::uint64_t a = splitmix64(state);
  state = a ^ (stream * 0xD1B54A32D192ED03ULL);
  std::array<std::uint32_t, 8> words{};
  for (std::size_t i = 0; i < words.size(); i += 2) {
    const std::uint64_t w = splitmix64(state);
    words[i] = static_cast<std::uint32_t>(w);
    words[i + 1] = static_cast<std::uint32_t>(w >> 32);
  }
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

Rotationd random_rotation(Rng& rng) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double u1 = uniform(rng);
  const double u2 = uniform(rng);
  const double u3 = uniform(rng);
  const double a = std::sqrt(1.0 - u1);
  const double b = std::sqrt(u1);
  Rotationd q(b * std::cos(2.0 * kPi * u3),   // w
              a * std::sin(2.0 * kPi * u2),   // x
              a * std::cos(2.0 * kPi * u2),   // y
              b * std::sin(2.0 * kPi * u3));  // z
  return canonical(q);
}

Vector3d random_unit_vector(Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (;;) {
    Vector3d v(normal(rng), normal(rng), normal(rng));
    const double n = v.norm();
    if (n > 1e-12) return v / n;
  }
}

AxisAngle to_axis_angle(const Rotationd& q) {
  const Rotationd c = canonical(q);
  const double s = c.vec().norm();
  if (s < 1e-300) return {Vector3d::UnitX(), 0.0};
  return {c.vec() / s, 2.0 * std::atan2(s, c.w())};
}

Rotationd from_axis_angle(const AxisAngle& aa) {
  return canonical(Rotationd(Eigen::AngleAxisd(aa.angle, aa.axis.normalized())));
}

Rotationd exp_map(const Vector3d& rotation_vector) {
  const double angle = rotation_vector.norm();
  if (angle < 1e-300) return Rotationd::Identity();
  const double half = 0.5 * angle;
  Rotationd q;
  q.w() = std::cos(half);
  q.vec() = std::sin(half) / angle * rotation_vector;
  return q;
}

Vector3d log_map(const Rotationd& q) {
  const AxisAngle aa = to_axis_angle(q);
  return aa.axis * aa.angle;
}

Vector3d orthogonal_unit(const Vector3d& v) {
  Eigen::Index axis = 0;
  v.cwiseAbs().minCoeff(&axis);
  return v.cross(Vector3d::Unit(axis)).normalized();
}

}  // namespace spindoe
