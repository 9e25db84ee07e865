#include "spindoe/pattern.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace spindoe {

namespace {

constexpr int kMaxRedraws = 10000;

Matrix3Xd dots_from_coords(const Eigen::VectorXd& coords) {
  const Eigen::Index n = coords.size() / 2;
  Matrix3Xd dots(3, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    dots.col(i) = from_spherical({coords(2 * i), coords(2 * i + 1)});
  }
  return dots;
}

}  // namespace

SphericalCoords to_spherical(const Vector3d& v) {
  const Vector3d u = v.normalized();
  double phi = std::atan2(u.y(), u.x());
  if (phi < 0.0) phi += 2.0 * kPi;
  return {std::acos(std::clamp(u.z(), -1.0, 1.0)), phi};
}

Vector3d from_spherical(const SphericalCoords& s) {
  const double st = std::sin(s.theta);
  return {st * std::cos(s.phi), st * std::sin(s.phi), std::cos(s.theta)};
}

VisibleDots visible_dots(const DotPattern& pattern, const Rotationd& rotation, double threshold) {
  const Matrix3Xd rotated = rotation.toRotationMatrix() * pattern.dots;
  VisibleDots out;
  for (Eigen::Index i = 0; i < rotated.cols(); ++i) {
    if (rotated(2, i) > threshold) out.ids.push_back(static_cast<int>(i));
  }
  out.dots.resize(3, static_cast<Eigen::Index>(out.ids.size()));
  for (std::size_t k = 0; k < out.ids.size(); ++k) {
    out.dots.col(static_cast<Eigen::Index>(k)) = rotated.col(out.ids[k]);
  }
  return out;
}

DotPattern random_pattern(int n, double min_separation, Rng& rng) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "pattern needs at least one dot");
  Matrix3Xd dots(3, n);
  int redraws = 0;
  for (int i = 0; i < n; ++i) {
    for (;;) {
      const Vector3d candidate = random_unit_vector(rng);
      bool ok = true;
      for (int j = 0; j < i && ok; ++j) {
        const double sep = angle_between(candidate, dots.col(j));
        ok = sep >= min_separation && sep > 1e-6;
      }
      if (ok) {
        dots.col(i) = candidate;
        break;
      }
      if (++redraws > kMaxRedraws) {
        throw Error(ErrorCode::InfeasibleSeparation,
                    "could not place " + std::to_string(n) + " dots at the requested separation");
      }
    }
  }
  return DotPattern::from_dots(dots);
}

Vector3d perturb_dot(const Vector3d& d, double sigma, Rng& rng) {
  if (sigma < 0.0) throw Error(ErrorCode::InvalidArgument, "sigma must be non-negative");
  if (sigma == 0.0) return d;
  std::uniform_real_distribution<double> uniform(0.0, 2.0 * kPi);
  std::normal_distribution<double> normal(0.0, sigma);
  const Vector3d u = d.normalized();
  const Vector3d t1 = orthogonal_unit(u);
  const Vector3d t2 = u.cross(t1);
  const double psi = uniform(rng);
  const Vector3d axis = std::cos(psi) * t1 + std::sin(psi) * t2;
  const double angle = std::abs(normal(rng));
  return (Eigen::AngleAxisd(angle, axis) * u).normalized();
}

PatternEvalReport evaluate_pattern(const HashTable& table, int trials, double sigma,
                                   const EvaluationConfig& cfg) {
  if (trials < 1) throw Error(ErrorCode::InvalidArgument, "trials must be >= 1");
  PatternEvalReport report;
  report.trials = trials;
  report.noise_sigma_deg = rad2deg(sigma);
  report.failure_count_by_cause = {{"insufficient_dots", 0}, {"no_basis", 0}, {"wrong_orientation", 0}};
  double error_sum = 0.0;

  for (int trial = 0; trial < trials; ++trial) {
    Rng rng = derive_rng(cfg.seed, static_cast<std::uint64_t>(trial));
    const Rotationd truth = random_rotation(rng);
    const VisibleDots visible = visible_dots(table.pattern(), truth, cfg.visibility_threshold);
    if (visible.ids.size() < 3) {
      ++report.insufficient_dots;
      ++report.failure_count_by_cause["insufficient_dots"];
      continue;
    }
    ObservedDotSet observed;
    observed.dots.resize(3, visible.dots.cols());
    for (Eigen::Index i = 0; i < visible.dots.cols(); ++i) {
      observed.dots.col(i) = perturb_dot(visible.dots.col(i), sigma, rng);
    }
    double error = kPi;
    try {
      error = geodesic_angle(recognize(table, observed, cfg.recognition).orientation, truth);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoBasisAboveThreshold) throw;
      ++report.failure_count_by_cause["no_basis"];
      if (cfg.keep_errors) report.errors.push_back(error);
      continue;
    }
    if (cfg.keep_errors) report.errors.push_back(error);
    if (error < cfg.success_gate) {
      ++report.successes;
      error_sum += error;
    } else {
      ++report.failure_count_by_cause["wrong_orientation"];
    }
  }
  const int evaluated = trials - report.insufficient_dots;
  report.success_rate = evaluated > 0 ? static_cast<double>(report.successes) / evaluated : 0.0;
  report.mean_orientation_error = report.successes > 0 ? error_sum / report.successes : 0.0;
  return report;
}

PatternEvalReport evaluate_pattern(const DotPattern& pattern, int trials, double sigma,
                                   const EvaluationConfig& cfg) {
  return evaluate_pattern(HashTable::build(pattern), trials, sigma, cfg);
}

Matrix3Xd hash_values(const Matrix3Xd& dots) {
  const auto n = static_cast<int>(dots.cols());
  if (n < 3) throw Error(ErrorCode::TooFewDots, "hash space needs at least 3 dots");
  Matrix3Xd out(3, static_cast<Eigen::Index>(n) * (n - 1) * (n - 2));
  Eigen::Index e = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (j == i || dots.col(i).cross(dots.col(j)).norm() < 1e-6) continue;
      const Matrix3d inverse = hash_basis(dots.col(i), dots.col(j)).inverse();
      for (int k = 0; k < n; ++k) {
        if (k != i && k != j) out.col(e++) = inverse * dots.col(k);
      }
    }
  }
  out.conservativeResize(3, e);
  return out;
}

double hash_space_nn_objective(const Matrix3Xd& dots) {
  return HashSpaceIndex(hash_values(dots)).mean_nearest_neighbor_distance();
}

double hash_space_nn_objective(const DotPattern& pattern) {
  return hash_space_nn_objective(pattern.dots);
}

double saturated_nn_objective(const Matrix3Xd& dots, double saturation) {
  const HashSpaceIndex index(hash_values(dots));
  const Matrix3Xd& pts = index.points();
  double total = 0.0;
  for (Eigen::Index i = 0; i < pts.cols(); ++i) {
    const auto nn = index.nearest(pts.col(i), 2);
    const int other = nn[0] != i ? nn[0] : nn[1];
    const double d = (pts.col(other) - pts.col(i)).norm();
    total += saturation > 0.0 ? saturation * -std::expm1(-d / saturation) : d;
  }
  return total / static_cast<double>(pts.cols());
}

double soft_nn_objective(const Matrix3Xd& dots, double temperature, int neighbors,
                         double saturation) {
  if (!(temperature > 0.0)) throw Error(ErrorCode::InvalidArgument, "temperature must be positive");
  if (neighbors < 1) throw Error(ErrorCode::InvalidArgument, "neighbors must be >= 1");
  const HashSpaceIndex index(hash_values(dots));
  const Matrix3Xd& pts = index.points();
  double total = 0.0;
  std::vector<double> dist;
  for (Eigen::Index i = 0; i < pts.cols(); ++i) {
    dist.clear();
    for (int j : index.nearest(pts.col(i), neighbors + 1)) {
      if (j != i) dist.push_back((pts.col(j) - pts.col(i)).norm());
    }
    if (static_cast<int>(dist.size()) > neighbors) dist.resize(static_cast<std::size_t>(neighbors));
    const double d_min = *std::min_element(dist.begin(), dist.end());
    double acc = 0.0;
    for (double d : dist) acc += std::exp(-temperature * (d - d_min));
    const double soft = d_min - std::log(acc) / temperature;
    total += saturation > 0.0 ? saturation * -std::expm1(-soft / saturation) : soft;
  }
  return total / static_cast<double>(pts.cols());
}

DotPattern optimize_pattern(int n, const OptimizeConfig& cfg, Rng& rng, OptimizeTrace* trace) {
  if (n < 4) throw Error(ErrorCode::InvalidArgument, "pattern optimization needs n >= 4");
  const DotPattern start = random_pattern(n, 0.0, rng);
  // Random global rotation keeps the initial dots away from the coordinate poles.
  const Matrix3Xd recentred = random_rotation(rng).toRotationMatrix() * start.dots;

  Eigen::VectorXd coords(2 * n);
  for (int i = 0; i < n; ++i) {
    const SphericalCoords s = to_spherical(recentred.col(i));
    coords(2 * i) = s.theta;
    coords(2 * i + 1) = s.phi;
  }
  auto soft = [&](const Eigen::VectorXd& c) {
    return soft_nn_objective(dots_from_coords(c), cfg.temperature, cfg.neighbors, cfg.saturation);
  };
  auto hard = [&](const Eigen::VectorXd& c) {
    return saturated_nn_objective(dots_from_coords(c), cfg.saturation);
  };

  double value = soft(coords);
  Eigen::VectorXd best = coords;
  double best_hard = hard(coords);
  if (trace) {
    trace->initial_soft = value;
    trace->initial_hard = best_hard;
  }
  double step = cfg.initial_step;

  for (int it = 0; it < cfg.iterations && step > 1e-9; ++it) {
    Eigen::VectorXd grad(coords.size());
    for (Eigen::Index p = 0; p < coords.size(); ++p) {
      Eigen::VectorXd plus = coords, minus = coords;
      plus(p) += cfg.fd_step;
      minus(p) -= cfg.fd_step;
      grad(p) = (soft(plus) - soft(minus)) / (2.0 * cfg.fd_step);
    }
    const double norm = grad.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) break;
    const Eigen::VectorXd direction = grad / norm;

    bool accepted = false;
    for (int attempt = 0; attempt < 8; ++attempt) {
      const Eigen::VectorXd trial = coords + step * direction;
      const double trial_value = soft(trial);
      if (trial_value > value) {
        coords = trial;
        value = trial_value;
        step *= 1.5;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) continue;

    const double current = hard(coords);
    if (trace) {
      trace->soft_objective.push_back(value);
      trace->hard_objective.push_back(current);
    }
    if (current > best_hard) {
      best_hard = current;
      best = coords;
    }
  }
  return DotPattern::from_dots(dots_from_coords(best));
}

}  // namespace spindoe
