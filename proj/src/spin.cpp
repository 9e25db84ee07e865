#include "spindoe/spin.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace spindoe {

namespace {

Eigen::Vector4d wxyz(const Rotationd& q) { return {q.w(), q.x(), q.y(), q.z()}; }

Rotationd from_wxyz(const Eigen::Vector4d& v) { return Rotationd(v(0), v(1), v(2), v(3)); }

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw Error(ErrorCode::InvalidArgument, "regression needs distinct abscissae");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  // Relative cutoff: a constant series leaves only rounding noise in syy.
  const double scale = std::max(my * my, 1e-300) * n;
  if (syy > 1e-24 * scale) {
    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = y[i] - (fit.intercept + fit.slope * x[i]);
      ss_res += r * r;
    }
    fit.r2 = std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
  }
  return fit;
}

void check_series(const std::vector<double>& t, const std::vector<double>& norms) {
  if (t.size() != norms.size()) throw Error(ErrorCode::LengthMismatch, "t and norms differ in length");
  if (t.size() < 3) throw Error(ErrorCode::TooFewSamples, "dampening fit needs at least 3 points");
  for (double v : norms) {
    if (!(v > 0.0)) throw Error(ErrorCode::NonPositiveNorm, "spin norms must be positive");
  }
}

std::vector<OrientationSample> subset(const std::vector<OrientationSample>& samples,
                                      const std::vector<int>& ids) {
  std::vector<OrientationSample> out;
  out.reserve(ids.size());
  for (int i : ids) out.push_back(samples[static_cast<std::size_t>(i)]);
  return out;
}

// In-plane quaternion angles are only defined modulo pi (q and -q are the same
// rotation), so each increment is known only up to multiples of pi. The
// increment over the shortest time step is taken in (-pi/2, pi/2], with an
// exact half turn counted as positive. Longer steps, visited by increasing
// length, take the branch closest to the rate seen so far. Gaps left by
// dropped samples are therefore resolved as long as the shortest step is
// below the Nyquist limit.
std::vector<double> unwrap_with_rate(const std::vector<double>& t, const std::vector<double>& angles) {
  const std::size_t n = angles.size();
  std::vector<double> out(n);
  if (n == 0) return out;
  std::vector<double> step(n, 0.0);
  std::vector<std::size_t> order;
  for (std::size_t i = 1; i < n; ++i) {
    double d = angles[i] - angles[i - 1];
    d -= kPi * std::round(d / kPi);
    if (std::abs(std::abs(d) - kPi / 2) < 1e-9) d = kPi / 2;
    step[i] = d;
    order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return t[a] - t[a - 1] < t[b] - t[b - 1]; });
  double angle_sum = 0.0, time_sum = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const std::size_t i = order[k];
    const double dt = t[i] - t[i - 1];
    if (k > 0) {
      const double predicted = angle_sum / time_sum * dt;
      step[i] += kPi * std::round((predicted - step[i]) / kPi);
    }
    angle_sum += step[i];
    time_sum += dt;
  }
  out[0] = angles[0];
  for (std::size_t i = 1; i < n; ++i) out[i] = out[i - 1] + step[i];
  return out;
}

}  // namespace

Rotationd propagate_orientation(const Rotationd& q0, const Vector3d& omega, double dt) {
  return canonical(Rotationd(exp_map(omega * dt) * q0));
}

Vector3d finite_difference_spin(const OrientationSample& a, const OrientationSample& b) {
  const double dt = b.t - a.t;
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "samples must be in increasing time");
  return log_map(b.q * a.q.conjugate()) / dt;
}

std::vector<double> unwrap_angles(const std::vector<double>& angles) {
  std::vector<double> out(angles.size());
  double offset = 0.0;
  for (std::size_t i = 0; i < angles.size(); ++i) {
    if (i > 0) {
      double step = angles[i] - angles[i - 1];
      const double wrapped = step - 2.0 * kPi * std::ceil((step - kPi) / (2.0 * kPi));
      offset += wrapped - step;
    }
    out[i] = angles[i] + offset;
  }
  return out;
}

SpinEstimate quatera_fit(const std::vector<OrientationSample>& samples) {
  const auto n = static_cast<Eigen::Index>(samples.size());
  if (n < 3) throw Error(ErrorCode::TooFewSamples, "spin regression needs at least 3 samples");
  for (Eigen::Index i = 1; i < n; ++i) {
    if (!(samples[static_cast<std::size_t>(i)].t > samples[static_cast<std::size_t>(i - 1)].t)) {
      throw Error(ErrorCode::InvalidArgument, "timestamps must be strictly increasing");
    }
  }

  Eigen::MatrixX4d stacked(n, 4);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Vector4d q = wxyz(samples[static_cast<std::size_t>(i)].q.normalized());
    if (i > 0 && q.dot(stacked.row(i - 1)) < 0.0) q = -q;
    stacked.row(i) = q;
  }

  Eigen::JacobiSVD<Eigen::MatrixX4d> svd(stacked, Eigen::ComputeThinV);
  SpinEstimate est;
  est.plane_singular_values = svd.singularValues();
  const double s2 = est.plane_singular_values(1);
  const double s3 = est.plane_singular_values(2);
  if (!(s2 > 3.0 * s3) || !(s2 > 1e-12 * est.plane_singular_values(0))) {
    throw Error(ErrorCode::NonUniqueAxis, "rotation plane is ill-defined (sigma2/sigma3 < 3)");
  }
  const Eigen::Vector4d u1 = svd.matrixV().col(0);
  const Eigen::Vector4d u2 = svd.matrixV().col(1);
  const Vector3d axis = (from_wxyz(u2) * from_wxyz(u1).conjugate()).vec().normalized();

  std::vector<double> t(static_cast<std::size_t>(n)), angle(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    t[static_cast<std::size_t>(i)] = samples[static_cast<std::size_t>(i)].t;
    angle[static_cast<std::size_t>(i)] = std::atan2(stacked.row(i).dot(u2), stacked.row(i).dot(u1));
  }
  angle = unwrap_with_rate(t, angle);
  // Centre time so that large absolute timestamps do not cost precision.
  const double t0 = t.front();
  for (double& v : t) v -= t0;
  const LineFit fit = fit_line(t, angle);
  est.omega = 2.0 * fit.slope * axis;

  double sq = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double phi = fit.intercept + fit.slope * t[static_cast<std::size_t>(i)];
    const Rotationd model = from_wxyz(std::cos(phi) * u1 + std::sin(phi) * u2);
    const double r = geodesic_angle(model, samples[static_cast<std::size_t>(i)].q);
    sq += r * r;
  }
  est.residual_rms = std::sqrt(sq / static_cast<double>(n));
  est.inliers.resize(static_cast<std::size_t>(n));
  std::iota(est.inliers.begin(), est.inliers.end(), 0);
  return est;
}

SpinEstimate ransac_spin(const std::vector<OrientationSample>& samples, const RansacConfig& cfg) {
  const int n = static_cast<int>(samples.size());
  const int min_inliers = cfg.min_inliers > 0 ? cfg.min_inliers : std::max(4, n / 2);
  if (n < std::max(3, min_inliers)) {
    throw Error(ErrorCode::TooFewSamples,
                "RANSAC needs at least " + std::to_string(std::max(3, min_inliers)) + " samples");
  }
  if (cfg.iterations < 1) throw Error(ErrorCode::InvalidArgument, "RANSAC iterations must be >= 1");

  Rng rng(cfg.seed);
  std::vector<int> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), 0);
  std::vector<int> best;
  for (int it = 0; it < cfg.iterations; ++it) {
    std::vector<int> pick = all;
    for (int k = 0; k < 3; ++k) {
      std::uniform_int_distribution<int> draw(k, n - 1);
      std::swap(pick[static_cast<std::size_t>(k)], pick[static_cast<std::size_t>(draw(rng))]);
    }
    pick.resize(3);
    std::sort(pick.begin(), pick.end());

    SpinEstimate model;
    try {
      model = quatera_fit(subset(samples, pick));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::NonUniqueAxis) continue;
      throw;
    }
    const OrientationSample& anchor = samples[static_cast<std::size_t>(pick.front())];
    std::vector<int> consensus;
    for (int i = 0; i < n; ++i) {
      const OrientationSample& s = samples[static_cast<std::size_t>(i)];
      const Rotationd predicted = propagate_orientation(anchor.q, model.omega, s.t - anchor.t);
      if (geodesic_angle(predicted, s.q) <= cfg.inlier_gate) consensus.push_back(i);
    }
    if (consensus.size() > best.size()) best = std::move(consensus);
    if (static_cast<int>(best.size()) == n) break;
  }
  if (static_cast<int>(best.size()) < min_inliers) {
    throw Error(ErrorCode::NoConsensus, "no spin model reached " + std::to_string(min_inliers) + " inliers");
  }
  SpinEstimate est = quatera_fit(subset(samples, best));
  est.inliers = best;
  return est;
}

double theoretical_dampening(double nu, double radius, double mass) {
  if (!(nu >= 0.0) || !(radius > 0.0) || !(mass > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "need nu >= 0 and positive radius and mass");
  }
  return 12.0 * kPi * nu * radius / mass;
}

DampeningFit dampening_fit(const std::vector<double>& t, const std::vector<double>& norms) {
  check_series(t, norms);
  std::vector<double> logs(norms.size());
  std::transform(norms.begin(), norms.end(), logs.begin(), [](double v) { return std::log(v); });
  const LineFit fit = fit_line(t, logs);
  return {-fit.slope, std::exp(fit.intercept), fit.r2, static_cast<int>(t.size())};
}

DampeningFit dampening_fit_linear(const std::vector<double>& t, const std::vector<double>& norms) {
  check_series(t, norms);
  const LineFit fit = fit_line(t, norms);
  return {-fit.slope / fit.intercept, fit.intercept, fit.r2, static_cast<int>(t.size())};
}

}  // namespace spindoe
