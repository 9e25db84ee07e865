#pragma once

#include <optional>
#include <vector>

#include "spindoe/geometry.hpp"

namespace spindoe {

struct OrientationSample {
  double t = 0.0;  // seconds
  Rotationd q = Rotationd::Identity();
  std::optional<double> quality;  // recognition rmse, when known
};

struct SpinEstimate {
  Vector3d omega = Vector3d::Zero();  // rad/s, axis times magnitude
  std::vector<int> inliers;
  double residual_rms = 0.0;  // radians, geodesic
  Eigen::Vector4d plane_singular_values = Eigen::Vector4d::Zero();
};

struct DampeningFit {
  double coefficient = 0.0;  // k in |w(t)| = w0 exp(-k t), 1/s
  double omega0 = 0.0;       // rad/s
  double r2 = 0.0;
  int n = 0;
};

/// exp(omega dt) applied after q0.
Rotationd propagate_orientation(const Rotationd& q0, const Vector3d& omega, double dt);

/// Rotation vector of q_b q_a^-1 divided by the elapsed time.
Vector3d finite_difference_spin(const OrientationSample& a, const OrientationSample& b);

/// Cumulative unwrapping: each successive difference is brought into (-pi, pi].
std::vector<double> unwrap_angles(const std::vector<double>& angles);

/// Quaternion regression. The sign-aligned quaternions of a constant spin lie
/// on a great circle of S^3; the plane of that circle comes from the SVD of
/// the stacked samples, the spin axis from the two spanning vectors and the
/// magnitude from a line fit of the in-plane angle against time. Quaternion
/// angles advance at half the rotation rate, so the slope is doubled.
/// Samples need not be evenly spaced: the angle is unwrapped against the rate
/// seen over the shortest step, so dropped frames are tolerated while that
/// step stays below the Nyquist limit. At exactly half a turn per step the
/// sense of rotation cannot be observed; the magnitude is still exact but the
/// axis sign is arbitrary.
///
/// Throws TooFewSamples below 3 samples, InvalidArgument for non-increasing
/// timestamps and NonUniqueAxis when sigma_2 / sigma_3 < 3.
SpinEstimate quatera_fit(const std::vector<OrientationSample>& samples);

struct RansacConfig {
  int iterations = 100;
  double inlier_gate = deg2rad(5.0);
  /// 0 selects max(4, n / 2).
  int min_inliers = 0;
  std::uint64_t seed = 0;
};

/// Minimal subsets of three samples, consensus judged by propagating the
/// subset model from its first sample; the largest consensus set is refit
/// with quatera_fit. Throws NoConsensus when no model reaches min_inliers.
SpinEstimate ransac_spin(const std::vector<OrientationSample>& samples, const RansacConfig& cfg = {});

/// 12 pi nu r / m for a thin spherical shell in a viscous medium.
double theoretical_dampening(double nu, double radius, double mass);

/// Least squares of log |w| against t.
DampeningFit dampening_fit(const std::vector<double>& t, const std::vector<double>& norms);

/// First-order variant |w| = w0 (1 - k t), fitted as a straight line.
DampeningFit dampening_fit_linear(const std::vector<double>& t, const std::vector<double>& norms);

}  // namespace spindoe
