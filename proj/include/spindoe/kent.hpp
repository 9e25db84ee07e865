#pragma once

#include <vector>

#include "spindoe/geometry.hpp"

namespace spindoe {

/// Kent (FB5) distribution on the unit sphere.
///
/// gamma1 is the mean direction, gamma2/gamma3 the major/minor axes. The
/// density is proportional to
///   exp{ kappa g1.x + beta [ (g2.x)^2 - (g3.x)^2 ] }
/// and is unimodal while 2 beta < kappa.
struct KentParams {
  Vector3d gamma1 = Vector3d::UnitZ();
  Vector3d gamma2 = Vector3d::UnitX();
  Vector3d gamma3 = Vector3d::UnitY();
  double kappa = 500.0;
  double beta = 0.0;

  /// Params centred on `mean` with the frame from kent_frame().
  static KentParams centred_on(const Vector3d& mean, double kappa, double beta);

  /// Throws InvalidParams unless the frame is orthonormal and 0 <= 2 beta < kappa.
  void validate() const;
};

/// Width of the radial ("projection") Gaussian that lifts the spherical pdf to R^3.
struct ProjectionParams {
  double alpha = 0.03;
};

/// Operating point of the Bayesian scoring: kappa = 500, beta = 0, alpha = 0.03.
struct ScoringParams {
  double kappa = 500.0;
  double beta = 0.0;
  double alpha = 0.03;

  void validate() const;
};

/// Columns (gamma1, gamma2, gamma3) for a mean direction. gamma2 is
/// mean x e_k with e_k the axis of the smallest |component| of mean.
Matrix3d kent_frame(const Vector3d& mean);

/// log I_{n + 1/2}(x) for n = 0..max_order, x > 0.
///
/// Anchored on I_{1/2}(x) = sqrt(2 / (pi x)) sinh x and extended with ratios
/// I_{n+1/2} / I_{n-1/2} from the backward three-term recurrence, which is
/// stable for all orders. Everything stays in log space, so x = 700 is fine.
std::vector<double> log_bessel_i_half_orders(int max_order, double x);

/// log c(kappa, beta), the Kent normalizing constant, via its Bessel series.
/// Throws InvalidParams (kappa <= 0 or 2 beta >= kappa) or NonConvergence.
double log_kent_normalizer(double kappa, double beta);

/// c(kappa, beta) in linear space; overflows to +inf for large kappa.
double kent_normalizer(double kappa, double beta);

double kent_log_pdf(const KentParams& params, const Vector3d& x);
/// Same with a precomputed log c(kappa, beta).
double kent_log_pdf(const KentParams& params, const Vector3d& x, double log_normalizer);

/// n unit vectors drawn from the Kent distribution (3 x n).
Matrix3Xd kent_sample(const KentParams& params, int n, Rng& rng);

double projection_likelihood(double alpha, const Vector3d& x);
double projection_log_likelihood(double alpha, const Vector3d& x);

/// log p_d(x) = log n(x) + log k_d(x / |x|). The Kent factor is evaluated on
/// the sphere; the radial spread is carried by n(x) alone.
double feature_log_likelihood(const KentParams& kent, const ProjectionParams& proj,
                              const Vector3d& x);

/// log p_phi(h) = log p_d(B h) + log |det B|: density of a hash-space feature
/// h obtained through f(x) = B^-1 x. Throws SingularBasis for |det B| <= 1e-12.
double hash_space_log_likelihood(const KentParams& kent, const ProjectionParams& proj,
                                 const Matrix3d& basis, const Vector3d& h);

/// Basis [d, d', d x d'] used to express dots in hash space.
Matrix3d hash_basis(const Vector3d& first, const Vector3d& second);

}  // namespace spindoe
