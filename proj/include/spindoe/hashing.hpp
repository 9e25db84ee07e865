#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "spindoe/geometry.hpp"
#include "spindoe/hash_index.hpp"
#include "spindoe/kent.hpp"

namespace spindoe {

/// Reference dot layout: unit vectors as columns, plus a content hash.
struct DotPattern {
  Matrix3Xd dots;
  std::string id;

  Eigen::Index size() const { return dots.cols(); }

  /// Normalizes columns, checks distinctness (> 1e-6 rad) and assigns the id.
  static DotPattern from_dots(const Matrix3Xd& dots);
};

/// 16 hex digits of FNV-1a over the IEEE-754 bytes of the dot coordinates.
std::string pattern_content_id(const Matrix3Xd& dots);

/// A reference dot expressed in the frame of an ordered basis pair.
struct HashEntry {
  Vector3d hash_value;
  int basis_first;
  int basis_second;
  int dot_id;
};

/// Voting and verification knobs for recognize(). The density parameters
/// (kappa, beta, alpha) live with the HashTable.
struct RecognitionConfig {
  /// Nearest hash values that each transformed dot votes for.
  int k_nearest = 8;
  /// Bases within this log-likelihood margin of the best one are verified (log 100).
  double shortlist_log_ratio = 4.605170185988092;
  /// Distinct voting dots a basis needs, capped at the number of non-basis dots.
  int min_votes = 2;
  /// Angular gate when completing correspondences after a basis wins.
  double match_gate = deg2rad(10.0);
  /// Shuffle the basis-pair order instead of ranking pairs by |o x o'|.
  bool randomize = false;
  std::uint64_t seed = 0;
};

/// All reference dots hashed under every ordered pair of reference dots.
class HashTable {
 public:
  /// Throws TooFewDots for patterns with fewer than 3 dots. Bases with
  /// |d x d'| < 1e-6 are skipped and counted.
  static HashTable build(const DotPattern& pattern, const ScoringParams& params = {});

  const std::vector<HashEntry>& entries() const { return entries_; }
  const DotPattern& pattern() const { return pattern_; }
  const std::string& pattern_id() const { return pattern_.id; }
  const ScoringParams& params() const { return params_; }
  const HashSpaceIndex& index() const { return index_; }
  int skipped_bases() const { return skipped_bases_; }

  /// The k entries closest to `phi`, ties broken by (basis, dot_id).
  std::vector<HashEntry> nearest(const Vector3d& phi, int k) const;
  std::vector<int> nearest_indices(const Vector3d& phi, int k) const;

  /// Basis matrix of an ordered reference pair.
  const Matrix3d& basis(int first, int second) const;
  double log_abs_det(int first, int second) const;

 private:
  DotPattern pattern_;
  ScoringParams params_;
  std::vector<HashEntry> entries_;
  std::vector<Matrix3d> bases_;
  std::vector<double> log_abs_det_;
  HashSpaceIndex index_;
  int skipped_bases_ = 0;
};

/// Alias kept for readability at call sites.
inline std::vector<HashEntry> nearest_hash_values(const HashTable& table, const Vector3d& phi,
                                                  int k) {
  return table.nearest(phi, k);
}

struct ObservedDotSet {
  Matrix3Xd dots;  // unit vectors, z >= 0
  double t = 0.0;

  Eigen::Index size() const { return dots.cols(); }
};

struct Correspondence {
  int observed;
  int reference;
};

struct RecognitionResult {
  Rotationd orientation = Rotationd::Identity();  // maps reference dots to observed dots
  std::vector<Correspondence> correspondences;
  double rmse = 0.0;
  double score = 0.0;
  int bases_tried = 0;
};

/// Image-plane point (in ball-radius units) to the viewer-side unit sphere.
/// Throws OutsideDisk when x^2 + y^2 > r^2.
Vector3d lift_to_sphere(const Eigen::Vector2d& p, double radius = 1.0);

/// Bayesian geometric hashing. Throws TooFewDots (< 3 dots) and
/// NoBasisAboveThreshold when no basis pair yields a verified candidate.
RecognitionResult recognize(const HashTable& table, const ObservedDotSet& observed,
                            const RecognitionConfig& cfg = {});

/// RMS geodesic angle between rotated reference dots and their observed matches.
double reprojection_rmse(const Rotationd& rotation, const ObservedDotSet& observed,
                         const std::vector<Correspondence>& correspondences,
                         const DotPattern& pattern);

}  // namespace spindoe
