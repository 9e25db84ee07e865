#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/SVD>

#include "spindoe/errors.hpp"

namespace spindoe {

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Matrix3X = Eigen::Matrix<Scalar, 3, Eigen::Dynamic>;
template <typename Scalar>
using Rotation = Eigen::Quaternion<Scalar>;

using Vector3d = Eigen::Vector3d;
using Matrix3d = Eigen::Matrix3d;
using Matrix3Xd = Eigen::Matrix3Xd;
using Rotationd = Eigen::Quaterniond;

/// Random engine used throughout. State is always owned by the caller.
using Rng = std::mt19937_64;

/// Independent stream `stream` of a master seed (splitmix64 mixing), so that
/// Monte Carlo results do not depend on evaluation order.
Rng derive_rng(std::uint64_t seed, std::uint64_t stream);

inline constexpr double kPi = 3.14159265358979323846;

inline constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

struct AxisAngle {
  Vector3d axis;
  double angle;  // [0, pi]
};

/// True when |v| is 1 up to rounding. Dividing such a vector by its computed
/// norm can still move the last bit, which would break exact file round trips.
template <typename Derived>
bool is_unit(const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  return std::abs(v.squaredNorm() - Scalar(1)) <= Scalar(4) * std::numeric_limits<Scalar>::epsilon();
}

/// Unit-norm quaternion with w >= 0.
template <typename Scalar>
Rotation<Scalar> canonical(const Rotation<Scalar>& q) {
  Rotation<Scalar> out = is_unit(q.coeffs()) ? q : q.normalized();
  if (out.w() < Scalar(0)) out.coeffs() = -out.coeffs();
  return out;
}

/// Angle between two unit vectors, accurate for tiny and near-pi angles.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar angle_between(const Eigen::MatrixBase<DerivedA>& a,
                                        const Eigen::MatrixBase<DerivedB>& b) {
  using std::atan2;
  return atan2(a.cross(b).norm(), a.dot(b));
}

/// Geodesic distance on SO(3): 2 acos |<a, b>|, evaluated through atan2 of the
/// relative quaternion so that it stays exact near zero.
template <typename Scalar>
Scalar geodesic_angle(const Rotation<Scalar>& a, const Rotation<Scalar>& b) {
  using std::abs;
  using std::atan2;
  const Rotation<Scalar> rel = a.normalized().conjugate() * b.normalized();
  return Scalar(2) * atan2(rel.vec().norm(), abs(rel.w()));
}

template <typename Scalar, typename Derived>
Vector3<Scalar> rotate(const Rotation<Scalar>& r, const Eigen::MatrixBase<Derived>& v) {
  return r * Vector3<Scalar>(v);
}

/// Rotation minimizing sum_i |R ref_i - obs_i|^2 over matched columns.
///
/// Both inputs are 3xN with N >= 2. Reflections are corrected through the sign
/// of the smallest singular value. Throws DegenerateConfiguration when the
/// second singular value of the cross-covariance falls below 1e-12, i.e. the
/// points are collinear and the rotation about their common axis is free.
template <typename DerivedRef, typename DerivedObs>
Rotation<typename DerivedRef::Scalar> kabsch(const Eigen::MatrixBase<DerivedRef>& reference,
                                             const Eigen::MatrixBase<DerivedObs>& observed) {
  using Scalar = typename DerivedRef::Scalar;
  using Mat3 = Eigen::Matrix<Scalar, 3, 3>;
  static_assert(DerivedRef::RowsAtCompileTime == 3 || DerivedRef::RowsAtCompileTime == Eigen::Dynamic);
  if (reference.rows() != 3 || observed.rows() != 3 || reference.cols() != observed.cols()) {
    throw Error(ErrorCode::LengthMismatch, "kabsch needs two 3xN sets of equal size");
  }
  if (reference.cols() < 2) {
    throw Error(ErrorCode::DegenerateConfiguration, "kabsch needs at least two correspondences");
  }
  const Mat3 cov = observed * reference.transpose();
  Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (svd.singularValues()(1) < Scalar(1e-12)) {
    throw Error(ErrorCode::DegenerateConfiguration, "correspondences are collinear");
  }
  Mat3 correction = Mat3::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < Scalar(0)) {
    correction(2, 2) = Scalar(-1);
  }
  const Mat3 rot = svd.matrixU() * correction * svd.matrixV().transpose();
  return canonical(Rotation<Scalar>(rot));
}

/// Uniform sample on SO(3) from three uniform variates.
Rotationd random_rotation(Rng& rng);

/// Uniform sample on the unit sphere.
Vector3d random_unit_vector(Rng& rng);

AxisAngle to_axis_angle(const Rotationd& q);
Rotationd from_axis_angle(const AxisAngle& aa);

/// Exponential map of a rotation vector (axis * angle).
Rotationd exp_map(const Vector3d& rotation_vector);
/// Inverse of exp_map with angle in [0, pi].
Vector3d log_map(const Rotationd& q);

/// Any unit vector orthogonal to v, chosen deterministically from the
/// coordinate axis along which v has its smallest component.
Vector3d orthogonal_unit(const Vector3d& v);

}  // namespace spindoe
