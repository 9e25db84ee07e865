#include "spindoe/hashing.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <string>

namespace spindoe {

namespace {

constexpr double kNearParallel = 1e-6;

double log_add_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

struct Vote {
  int observed;
  int reference;
  double log_likelihood;
};

struct BasisScore {
  double log_score = -std::numeric_limits<double>::infinity();
  int voters = 0;
  int last_voter = -1;
  std::vector<Vote> votes;
};

struct Candidate {
  Rotationd rotation;
  std::vector<Correspondence> matches;
  double selection_error;
  double log_score;
};

std::vector<Correspondence> complete_matches(const Rotationd& rotation, const Matrix3Xd& observed,
                                             const Matrix3Xd& reference, double gate) {
  const Matrix3Xd rotated = rotation.toRotationMatrix() * reference;
  struct Pair {
    double angle;
    int obs;
    int ref;
  };
  std::vector<Pair> pairs;
  for (Eigen::Index o = 0; o < observed.cols(); ++o) {
    for (Eigen::Index r = 0; r < rotated.cols(); ++r) {
      const double a = angle_between(observed.col(o), rotated.col(r));
      if (a <= gate) pairs.push_back({a, static_cast<int>(o), static_cast<int>(r)});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& x, const Pair& y) {
    if (x.angle != y.angle) return x.angle < y.angle;
    if (x.obs != y.obs) return x.obs < y.obs;
    return x.ref < y.ref;
  });
  std::vector<char> obs_used(static_cast<std::size_t>(observed.cols()), 0);
  std::vector<char> ref_used(static_cast<std::size_t>(reference.cols()), 0);
  std::vector<Correspondence> out;
  for (const auto& p : pairs) {
    if (obs_used[static_cast<std::size_t>(p.obs)] || ref_used[static_cast<std::size_t>(p.ref)]) continue;
    obs_used[static_cast<std::size_t>(p.obs)] = 1;
    ref_used[static_cast<std::size_t>(p.ref)] = 1;
    out.push_back({p.obs, p.ref});
  }
  std::sort(out.begin(), out.end(),
            [](const Correspondence& x, const Correspondence& y) { return x.observed < y.observed; });
  return out;
}

Rotationd fit(const std::vector<Correspondence>& matches, const Matrix3Xd& observed,
              const Matrix3Xd& reference) {
  Matrix3Xd ref(3, static_cast<Eigen::Index>(matches.size()));
  Matrix3Xd obs(3, static_cast<Eigen::Index>(matches.size()));
  for (std::size_t i = 0; i < matches.size(); ++i) {
    ref.col(static_cast<Eigen::Index>(i)) = reference.col(matches[i].reference);
    obs.col(static_cast<Eigen::Index>(i)) = observed.col(matches[i].observed);
  }
  return kabsch(ref, obs);
}

// RMS over all observed dots of the angle to the closest rotated reference dot,
// capped at the gate so that spurious detections weigh the same for every candidate.
double selection_error(const Rotationd& rotation, const Matrix3Xd& observed,
                       const Matrix3Xd& reference, double gate) {
  const Matrix3Xd rotated = rotation.toRotationMatrix() * reference;
  double sum = 0.0;
  for (Eigen::Index o = 0; o < observed.cols(); ++o) {
    double best = gate;
    for (Eigen::Index r = 0; r < rotated.cols(); ++r) {
      best = std::min(best, angle_between(observed.col(o), rotated.col(r)));
    }
    sum += best * best;
  }
  return std::sqrt(sum / static_cast<double>(observed.cols()));
}

}  // namespace

std::string pattern_content_id(const Matrix3Xd& dots) {
  std::uint64_t h = 1469598103934665603ULL;
  for (Eigen::Index i = 0; i < dots.size(); ++i) {
    const double v = dots.data()[i];
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof(double));
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 1099511628211ULL;
    }
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kHex[h & 0xF];
    h >>= 4;
  }
  return out;
}

DotPattern DotPattern::from_dots(const Matrix3Xd& dots) {
  DotPattern p;
  p.dots = dots;
  for (Eigen::Index i = 0; i < p.dots.cols(); ++i) {
    const double n = p.dots.col(i).norm();
    if (!(n > 1e-12) || !std::isfinite(n)) {
      throw Error(ErrorCode::InvalidArgument, "dot " + std::to_string(i) + " has zero length");
    }
    if (!is_unit(p.dots.col(i))) p.dots.col(i) /= n;
  }
  for (Eigen::Index i = 0; i < p.dots.cols(); ++i) {
    for (Eigen::Index j = i + 1; j < p.dots.cols(); ++j) {
      if (angle_between(p.dots.col(i), p.dots.col(j)) < 1e-6) {
        throw Error(ErrorCode::InvalidArgument, "dots " + std::to_string(i) + " and " +
                                                    std::to_string(j) + " coincide");
      }
    }
  }
  p.id = pattern_content_id(p.dots);
  return p;
}

HashTable HashTable::build(const DotPattern& pattern, const ScoringParams& params) {
  const auto n = static_cast<int>(pattern.size());
  if (n < 3) throw Error(ErrorCode::TooFewDots, "hash table needs at least 3 dots");
  params.validate();

  HashTable table;
  table.pattern_ = pattern;
  table.params_ = params;
  table.bases_.assign(static_cast<std::size_t>(n * n), Matrix3d::Zero());
  table.log_abs_det_.assign(static_cast<std::size_t>(n * n),
                            -std::numeric_limits<double>::infinity());
  table.entries_.reserve(static_cast<std::size_t>(n) * (n - 1) * (n - 2));

  const Matrix3Xd& d = pattern.dots;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      if (d.col(i).cross(d.col(j)).norm() < kNearParallel) {
        ++table.skipped_bases_;
        continue;
      }
      const Matrix3d basis = hash_basis(d.col(i), d.col(j));
      const Matrix3d inverse = basis.inverse();
      const auto slot = static_cast<std::size_t>(i * n + j);
      table.bases_[slot] = basis;
      table.log_abs_det_[slot] = std::log(std::abs(basis.determinant()));
      for (int k = 0; k < n; ++k) {
        if (k == i || k == j) continue;
        table.entries_.push_back({inverse * d.col(k), i, j, k});
      }
    }
  }

  Matrix3Xd values(3, static_cast<Eigen::Index>(table.entries_.size()));
  for (std::size_t e = 0; e < table.entries_.size(); ++e) {
    values.col(static_cast<Eigen::Index>(e)) = table.entries_[e].hash_value;
  }
  table.index_ = HashSpaceIndex(std::move(values));
  return table;
}

std::vector<int> HashTable::nearest_indices(const Vector3d& phi, int k) const {
  return index_.nearest(phi, k);
}

std::vector<HashEntry> HashTable::nearest(const Vector3d& phi, int k) const {
  std::vector<HashEntry> out;
  for (int i : index_.nearest(phi, k)) out.push_back(entries_[static_cast<std::size_t>(i)]);
  return out;
}

const Matrix3d& HashTable::basis(int first, int second) const {
  return bases_[static_cast<std::size_t>(first * pattern_.size() + second)];
}

double HashTable::log_abs_det(int first, int second) const {
  return log_abs_det_[static_cast<std::size_t>(first * pattern_.size() + second)];
}

Vector3d lift_to_sphere(const Eigen::Vector2d& p, double radius) {
  if (!(radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "ball radius must be positive");
  const double x = p.x() / radius;
  const double y = p.y() / radius;
  const double rho2 = x * x + y * y;
  if (rho2 > 1.0) throw Error(ErrorCode::OutsideDisk, "image point lies outside the ball disk");
  return Vector3d(x, y, std::sqrt(std::max(0.0, 1.0 - rho2))).normalized();
}

double reprojection_rmse(const Rotationd& rotation, const ObservedDotSet& observed,
                         const std::vector<Correspondence>& correspondences,
                         const DotPattern& pattern) {
  if (correspondences.empty()) {
    throw Error(ErrorCode::EmptyCorrespondences, "no correspondences to evaluate");
  }
  double sum = 0.0;
  for (const auto& c : correspondences) {
    const Vector3d predicted = rotation * Vector3d(pattern.dots.col(c.reference));
    const double a = angle_between(predicted, observed.dots.col(c.observed));
    sum += a * a;
  }
  return std::sqrt(sum / static_cast<double>(correspondences.size()));
}

RecognitionResult recognize(const HashTable& table, const ObservedDotSet& observed,
                            const RecognitionConfig& cfg) {
  const auto n_obs = static_cast<int>(observed.size());
  if (n_obs < 3) throw Error(ErrorCode::TooFewDots, "recognition needs at least 3 dots");
  if (cfg.k_nearest < 1) throw Error(ErrorCode::InvalidArgument, "k_nearest must be >= 1");

  const ScoringParams& sp = table.params();
  const double log_c = log_kent_normalizer(sp.kappa, sp.beta);
  const double log_proj_norm = -std::log(sp.alpha * std::sqrt(2.0 * kPi));
  const Matrix3Xd& reference = table.pattern().dots;
  const auto n_ref = static_cast<int>(reference.cols());
  const Matrix3Xd& obs = observed.dots;

  std::vector<Matrix3d> frames;
  if (sp.beta > 0.0) {
    for (int r = 0; r < n_ref; ++r) frames.push_back(kent_frame(reference.col(r)));
  }

  struct ObservedPair {
    double separation;
    int a, b;
  };
  std::vector<ObservedPair> pairs;
  for (int a = 0; a < n_obs; ++a) {
    for (int b = a + 1; b < n_obs; ++b) {
      if (obs.col(a).cross(obs.col(b)).norm() < kNearParallel) continue;
      pairs.push_back({obs.col(a).cross(obs.col(b)).norm(), a, b});
    }
  }
  if (cfg.randomize) {
    Rng rng(cfg.seed);
    std::shuffle(pairs.begin(), pairs.end(), rng);
  } else {
    std::stable_sort(pairs.begin(), pairs.end(), [](const ObservedPair& x, const ObservedPair& y) {
      return x.separation > y.separation;
    });
  }

  const int vote_floor = std::min(cfg.min_votes, n_obs - 2);
  std::vector<BasisScore> scores(static_cast<std::size_t>(n_ref * n_ref));
  std::vector<int> touched;
  int tried = 0;

  for (const auto& pair : pairs) {
    ++tried;
    for (int slot : touched) scores[static_cast<std::size_t>(slot)] = BasisScore{};
    touched.clear();

    const Matrix3d observed_basis = hash_basis(obs.col(pair.a), obs.col(pair.b));
    const Matrix3d to_hash = observed_basis.inverse();

    for (int c = 0; c < n_obs; ++c) {
      if (c == pair.a || c == pair.b) continue;
      const Vector3d phi = to_hash * obs.col(c);
      for (int e : table.nearest_indices(phi, cfg.k_nearest)) {
        const HashEntry& entry = table.entries()[static_cast<std::size_t>(e)];
        // p_phi(h) = n(B h) k_d(B h / |B h|) |det B| with B the candidate reference
        // basis and the Kent density centred on the hashed reference dot.
        const Vector3d lifted = table.basis(entry.basis_first, entry.basis_second) * phi;
        const double norm = lifted.norm();
        const double radial = (norm - 1.0) / sp.alpha;
        const Vector3d x = lifted / norm;
        double ll = log_proj_norm - 0.5 * radial * radial +
                    sp.kappa * reference.col(entry.dot_id).dot(x) - log_c +
                    table.log_abs_det(entry.basis_first, entry.basis_second);
        if (sp.beta > 0.0) {
          const Matrix3d& f = frames[static_cast<std::size_t>(entry.dot_id)];
          const double major = f.col(1).dot(x);
          const double minor = f.col(2).dot(x);
          ll += sp.beta * (major * major - minor * minor);
        }
        const int slot = entry.basis_first * n_ref + entry.basis_second;
        BasisScore& s = scores[static_cast<std::size_t>(slot)];
        if (s.votes.empty()) touched.push_back(slot);
        s.log_score = log_add_exp(s.log_score, ll);
        if (s.last_voter != c) {
          ++s.voters;
          s.last_voter = c;
        }
        s.votes.push_back({c, entry.dot_id, ll});
      }
    }

    double best_log = -std::numeric_limits<double>::infinity();
    for (int slot : touched) {
      const BasisScore& s = scores[static_cast<std::size_t>(slot)];
      if (s.voters >= vote_floor) best_log = std::max(best_log, s.log_score);
    }
    if (!std::isfinite(best_log)) continue;

    std::vector<int> shortlist;
    for (int slot : touched) {
      const BasisScore& s = scores[static_cast<std::size_t>(slot)];
      if (s.voters >= vote_floor && s.log_score >= best_log - cfg.shortlist_log_ratio) {
        shortlist.push_back(slot);
      }
    }
    std::sort(shortlist.begin(), shortlist.end());

    bool have = false;
    Candidate best{};
    for (int slot : shortlist) {
      const BasisScore& s = scores[static_cast<std::size_t>(slot)];
      const int first = slot / n_ref;
      const int second = slot % n_ref;

      // Best-supported reference dot per voting observed dot, one use per reference dot.
      std::vector<Vote> votes = s.votes;
      std::sort(votes.begin(), votes.end(), [](const Vote& x, const Vote& y) {
        if (x.log_likelihood != y.log_likelihood) return x.log_likelihood > y.log_likelihood;
        if (x.observed != y.observed) return x.observed < y.observed;
        return x.reference < y.reference;
      });
      std::vector<Correspondence> matches{{pair.a, first}, {pair.b, second}};
      std::vector<char> obs_used(static_cast<std::size_t>(n_obs), 0);
      std::vector<char> ref_used(static_cast<std::size_t>(n_ref), 0);
      obs_used[static_cast<std::size_t>(pair.a)] = obs_used[static_cast<std::size_t>(pair.b)] = 1;
      ref_used[static_cast<std::size_t>(first)] = ref_used[static_cast<std::size_t>(second)] = 1;
      for (const auto& v : votes) {
        if (obs_used[static_cast<std::size_t>(v.observed)] ||
            ref_used[static_cast<std::size_t>(v.reference)]) {
          continue;
        }
        obs_used[static_cast<std::size_t>(v.observed)] = 1;
        ref_used[static_cast<std::size_t>(v.reference)] = 1;
        matches.push_back({v.observed, v.reference});
      }

      Rotationd rotation;
      try {
        rotation = fit(matches, obs, reference);
      } catch (const Error&) {
        continue;
      }
      for (int pass = 0; pass < 2; ++pass) {
        auto completed = complete_matches(rotation, obs, reference, cfg.match_gate);
        if (completed.size() < 2) break;
        try {
          rotation = fit(completed, obs, reference);
          matches = std::move(completed);
        } catch (const Error&) {
          break;
        }
      }
      const double err = selection_error(rotation, obs, reference, cfg.match_gate);
      if (!have || err < best.selection_error ||
          (err == best.selection_error && s.log_score > best.log_score)) {
        best = {rotation, std::move(matches), err, s.log_score};
        have = true;
      }
    }
    if (!have) continue;

    std::sort(best.matches.begin(), best.matches.end(),
              [](const Correspondence& x, const Correspondence& y) { return x.observed < y.observed; });
    RecognitionResult result;
    result.orientation = canonical(best.rotation);
    result.correspondences = std::move(best.matches);
    result.rmse = reprojection_rmse(result.orientation, observed, result.correspondences,
                                    table.pattern());
    result.score = best.log_score;
    result.bases_tried = tried;
    return result;
  }
  throw Error(ErrorCode::NoBasisAboveThreshold,
              "no basis reached the voting threshold after " + std::to_string(tried) + " pairs");
}

}  // namespace spindoe
