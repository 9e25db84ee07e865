#include "spindoe/hash_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <utility>

namespace spindoe {

namespace {

constexpr int kLeafSize = 8;

using Candidate = std::pair<double, int>;  // (squared distance, index)

double box_distance2(const Vector3d& q, const Vector3d& lo, const Vector3d& hi) {
  return (lo - q).cwiseMax(q - hi).cwiseMax(0.0).squaredNorm();
}

}  // namespace

HashSpaceIndex::HashSpaceIndex(Matrix3Xd points) : points_(std::move(points)) {
  order_.resize(static_cast<std::size_t>(points_.cols()));
  std::iota(order_.begin(), order_.end(), 0);
  if (points_.cols() > 0) {
    nodes_.reserve(static_cast<std::size_t>(2 * points_.cols() / kLeafSize + 2));
    build(0, static_cast<int>(points_.cols()));
  }
}

int HashSpaceIndex::build(int begin, int end) {
  Node node;
  node.begin = begin;
  node.end = end;
  node.lo = Vector3d::Constant(std::numeric_limits<double>::infinity());
  node.hi = -node.lo;
  for (int s = begin; s < end; ++s) {
    const auto p = points_.col(order_[static_cast<std::size_t>(s)]);
    node.lo = node.lo.cwiseMin(p);
    node.hi = node.hi.cwiseMax(p);
  }
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(node);
  if (end - begin <= kLeafSize) return id;

  Eigen::Index axis = 0;
  (node.hi - node.lo).maxCoeff(&axis);
  const int mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](int a, int b) { return points_(axis, a) < points_(axis, b); });
  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[static_cast<std::size_t>(id)].left = left;
  nodes_[static_cast<std::size_t>(id)].right = right;
  return id;
}

std::vector<int> HashSpaceIndex::nearest(const Vector3d& query, int k) const {
  if (k <= 0 || points_.cols() == 0) return {};
  k = static_cast<int>(std::min<Eigen::Index>(k, points_.cols()));

  // Max-heap on (distance, index): the top is the current k-th best.
  std::priority_queue<Candidate> best;
  auto offer = [&](const Candidate& c) {
    if (static_cast<int>(best.size()) < k) {
      best.push(c);
    } else if (c < best.top()) {
      best.pop();
      best.push(c);
    }
  };

  // Best-first traversal by box distance.
  using Pending = std::pair<double, int>;
  std::priority_queue<Pending, std::vector<Pending>, std::greater<>> frontier;
  frontier.emplace(box_distance2(query, nodes_[0].lo, nodes_[0].hi), 0);
  while (!frontier.empty()) {
    const auto [d2, id] = frontier.top();
    frontier.pop();
    // Equal distances may still win on index, so only prune strictly farther boxes.
    if (static_cast<int>(best.size()) == k && d2 > best.top().first) break;
    const Node& node = nodes_[static_cast<std::size_t>(id)];
    if (node.left < 0) {
      for (int s = node.begin; s < node.end; ++s) {
        const int i = order_[static_cast<std::size_t>(s)];
        offer({(points_.col(i) - query).squaredNorm(), i});
      }
      continue;
    }
    for (int child : {node.left, node.right}) {
      const Node& c = nodes_[static_cast<std::size_t>(child)];
      frontier.emplace(box_distance2(query, c.lo, c.hi), child);
    }
  }

  std::vector<int> out(best.size());
  for (auto it = out.rbegin(); it != out.rend(); ++it) {
    *it = best.top().second;
    best.pop();
  }
  return out;
}

double HashSpaceIndex::mean_nearest_neighbor_distance() const {
  if (points_.cols() < 2) return 0.0;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < points_.cols(); ++i) {
    const auto nn = nearest(points_.col(i), 2);
    // With exact duplicates the point itself may rank second; distance is zero then.
    const int other = nn[0] != i ? nn[0] : nn[1];
    sum += (points_.col(other) - points_.col(i)).norm();
  }
  return sum / static_cast<double>(points_.cols());
}

}  // namespace spindoe
