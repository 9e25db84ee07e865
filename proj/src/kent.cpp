#include "spindoe/kent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace spindoe {

namespace {

constexpr int kMaxSeriesTerms = 200;
constexpr double kSeriesRelTol = 1e-12;

double log_sinh(double x) {
  if (x < 20.0) return std::log(std::sinh(x));
  return x - std::log(2.0) + std::log1p(-std::exp(-2.0 * x));
}

double log_add_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

void check_kappa_beta(double kappa, double beta) {
  if (!(kappa > 0.0) || !std::isfinite(kappa)) {
    throw Error(ErrorCode::InvalidParams, "kappa must be positive, got " + std::to_string(kappa));
  }
  if (!(beta >= 0.0) || !(2.0 * beta < kappa)) {
    throw Error(ErrorCode::InvalidParams, "need 0 <= 2 beta < kappa, got beta=" + std::to_string(beta));
  }
}

}  // namespace

KentParams KentParams::centred_on(const Vector3d& mean, double kappa, double beta) {
  const Matrix3d frame = kent_frame(mean);
  KentParams p;
  p.gamma1 = frame.col(0);
  p.gamma2 = frame.col(1);
  p.gamma3 = frame.col(2);
  p.kappa = kappa;
  p.beta = beta;
  return p;
}

void KentParams::validate() const {
  check_kappa_beta(kappa, beta);
  Matrix3d frame;
  frame << gamma1, gamma2, gamma3;
  if (!(frame.transpose() * frame).isApprox(Matrix3d::Identity(), 1e-9)) {
    throw Error(ErrorCode::InvalidParams, "gamma1, gamma2, gamma3 must be orthonormal");
  }
}

void ScoringParams::validate() const {
  check_kappa_beta(kappa, beta);
  if (!(alpha > 0.0)) throw Error(ErrorCode::InvalidParams, "alpha must be positive");
}

Matrix3d kent_frame(const Vector3d& mean) {
  Matrix3d frame;
  frame.col(0) = mean.normalized();
  frame.col(1) = orthogonal_unit(frame.col(0));
  frame.col(2) = frame.col(0).cross(frame.col(1));
  return frame;
}

std::vector<double> log_bessel_i_half_orders(int max_order, double x) {
  if (!(x > 0.0)) throw Error(ErrorCode::InvalidParams, "Bessel argument must be positive");
  max_order = std::max(max_order, 0);
  const int start = max_order + 64 + static_cast<int>(std::ceil(x));

  // ratio[m] = I_{m+1/2}(x) / I_{m-1/2}(x)
  std::vector<double> ratio(static_cast<std::size_t>(max_order) + 1, 0.0);
  const double nu = start + 1.5;
  double r = x / (nu + std::sqrt(nu * nu + x * x));
  for (int m = start; m >= 1; --m) {
    r = 1.0 / ((2.0 * m + 1.0) / x + r);
    if (m <= max_order) ratio[static_cast<std::size_t>(m)] = r;
  }

  std::vector<double> out(static_cast<std::size_t>(max_order) + 1);
  out[0] = 0.5 * std::log(2.0 / (kPi * x)) + log_sinh(x);
  for (int m = 1; m <= max_order; ++m) {
    out[static_cast<std::size_t>(m)] = out[static_cast<std::size_t>(m) - 1] +
                                       std::log(ratio[static_cast<std::size_t>(m)]);
  }
  return out;
}

double log_kent_normalizer(double kappa, double beta) {
  check_kappa_beta(kappa, beta);
  const double log_half_kappa = std::log(0.5 * kappa);
  const double log_two_pi = std::log(2.0 * kPi);

  if (beta == 0.0) {
    const auto log_i = log_bessel_i_half_orders(0, kappa);
    return log_two_pi + std::lgamma(0.5) - 0.5 * log_half_kappa + log_i[0];
  }

  const auto log_i = log_bessel_i_half_orders(2 * kMaxSeriesTerms, kappa);
  const double log_beta = std::log(beta);
  double sum = -std::numeric_limits<double>::infinity();
  double previous = std::numeric_limits<double>::infinity();
  for (int j = 0; j < kMaxSeriesTerms; ++j) {
    const double term = std::lgamma(j + 0.5) - std::lgamma(j + 1.0) + 2.0 * j * log_beta -
                        (2.0 * j + 0.5) * log_half_kappa + log_i[static_cast<std::size_t>(2 * j)];
    sum = log_add_exp(sum, term);
    if (j > 0 && term < previous && term - sum < std::log(kSeriesRelTol)) {
      return log_two_pi + sum;
    }
    previous = term;
  }
  throw Error(ErrorCode::NonConvergence,
              "Kent normalizer series did not converge in " + std::to_string(kMaxSeriesTerms) +
                  " terms");
}

double kent_normalizer(double kappa, double beta) {
  return std::exp(log_kent_normalizer(kappa, beta));
}

double kent_log_pdf(const KentParams& params, const Vector3d& x, double log_normalizer) {
  const double major = params.gamma2.dot(x);
  const double minor = params.gamma3.dot(x);
  return params.kappa * params.gamma1.dot(x) + params.beta * (major * major - minor * minor) -
         log_normalizer;
}

double kent_log_pdf(const KentParams& params, const Vector3d& x) {
  params.validate();
  if (std::abs(x.norm() - 1.0) > 1e-6) {
    throw Error(ErrorCode::InvalidArgument, "kent_log_pdf expects a unit vector");
  }
  return kent_log_pdf(params, x, log_kent_normalizer(params.kappa, params.beta));
}

Matrix3Xd kent_sample(const KentParams& params, int n, Rng& rng) {
  params.validate();
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "sample count must be >= 1");

  // Joint rejection sampler in (t = g1.x, psi). Proposal: t ~ exp(lambda t) on
  // [-1, 1] with lambda = kappa - 2 beta, psi uniform. The log target
  // kappa t + beta (1 - t^2) cos(2 psi) never exceeds the log proposal by more
  // than 2 beta, giving the acceptance below. For beta = 0 every draw is
  // accepted and this is the exact von Mises-Fisher inverse-CDF sampler.
  const double kappa = params.kappa;
  const double beta = params.beta;
  const double lambda = kappa - 2.0 * beta;
  const double floor = std::exp(-2.0 * lambda);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  Matrix3Xd out(3, n);
  for (int i = 0; i < n; ++i) {
    for (;;) {
      const double u = 1.0 - uniform(rng);  // (0, 1]
      const double t = std::clamp(1.0 + std::log(u + (1.0 - u) * floor) / lambda, -1.0, 1.0);
      const double psi = 2.0 * kPi * uniform(rng);
      const double s2 = std::max(0.0, 1.0 - t * t);
      if (beta > 0.0) {
        const double log_accept = 2.0 * beta * (t - 1.0) + beta * s2 * std::cos(2.0 * psi);
        if (std::log(1.0 - uniform(rng)) > log_accept) continue;
      }
      const double s = std::sqrt(s2);
      const Vector3d x =
          t * params.gamma1 + s * (std::cos(psi) * params.gamma2 + std::sin(psi) * params.gamma3);
      out.col(i) = x.normalized();
      break;
    }
  }
  return out;
}

double projection_log_likelihood(double alpha, const Vector3d& x) {
  const double z = (x.norm() - 1.0) / alpha;
  return -0.5 * z * z - std::log(alpha * std::sqrt(2.0 * kPi));
}

double projection_likelihood(double alpha, const Vector3d& x) {
  return std::exp(projection_log_likelihood(alpha, x));
}

double feature_log_likelihood(const KentParams& kent, const ProjectionParams& proj,
                              const Vector3d& x) {
  kent.validate();
  if (!(proj.alpha > 0.0)) throw Error(ErrorCode::InvalidParams, "alpha must be positive");
  const double norm = x.norm();
  if (!(norm > 0.0)) return -std::numeric_limits<double>::infinity();
  return projection_log_likelihood(proj.alpha, x) +
         kent_log_pdf(kent, x / norm, log_kent_normalizer(kent.kappa, kent.beta));
}

double hash_space_log_likelihood(const KentParams& kent, const ProjectionParams& proj,
                                 const Matrix3d& basis, const Vector3d& h) {
  const double det = basis.determinant();
  if (!(std::abs(det) > 1e-12)) throw Error(ErrorCode::SingularBasis, "|det B| <= 1e-12");
  return feature_log_likelihood(kent, proj, basis * h) + std::log(std::abs(det));
}

Matrix3d hash_basis(const Vector3d& first, const Vector3d& second) {
  Matrix3d basis;
  basis << first, second, first.cross(second);
  return basis;
}

}  // namespace spindoe
