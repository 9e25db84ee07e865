#pragma once

#include <vector>

#include "spindoe/geometry.hpp"

namespace spindoe {

/// Exact k-nearest-neighbour search over a fixed 3D point set.
///
/// Static k-d tree (median split on the widest axis, small leaves). Hash
/// values are heavy tailed, since nearly antipodal bases map dots far from the
/// origin, so a space-partitioning tree beats any single grid resolution.
/// Results are ordered by (distance, point index).
class HashSpaceIndex {
 public:
  HashSpaceIndex() = default;
  explicit HashSpaceIndex(Matrix3Xd points);

  std::vector<int> nearest(const Vector3d& query, int k) const;

  Eigen::Index size() const { return points_.cols(); }
  const Matrix3Xd& points() const { return points_; }

  /// Mean over points of the distance to the closest other point.
  double mean_nearest_neighbor_distance() const;

 private:
  struct Node {
    Vector3d lo, hi;  // bounding box of the node's points
    int begin, end;   // range in order_
    int left = -1, right = -1;
  };

  int build(int begin, int end);

  Matrix3Xd points_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
};

}  // namespace spindoe
