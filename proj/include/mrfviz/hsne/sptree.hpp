#ifndef MRFVIZ_HSNE_SPTREE_HPP
#define MRFVIZ_HSNE_SPTREE_HPP

// Space-partitioning tree (quadtree for 2D, octree for 3D) used for the
// Barnes-Hut approximation of the repulsive t-SNE forces.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace mrfviz::hsne {

template <int Dim>
class SpTree {
public:
  static constexpr int kChildren = 1 << Dim;

  /// `coords` is row-major n x Dim and must outlive the tree.
  SpTree(const double* coords, std::size_t n) : coords_(coords) {
    std::array<double, Dim> lo, hi;
    lo.fill(std::numeric_limits<double>::infinity());
    hi.fill(-std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < n; ++i)
      for (int d = 0; d < Dim; ++d) {
        lo[d] = std::min(lo[d], coords[i * Dim + d]);
        hi[d] = std::max(hi[d], coords[i * Dim + d]);
      }
    Node root;
    for (int d = 0; d < Dim; ++d) {
      root.center[d] = 0.5 * (lo[d] + hi[d]);
      root.half[d] = std::max(0.5 * (hi[d] - lo[d]), 1e-5) * (1.0 + 1e-5);
    }
    nodes_.reserve(2 * n + 1);
    nodes_.push_back(root);
    for (std::size_t i = 0; i < n; ++i) insert(0, static_cast<std::uint32_t>(i), 0);
  }

  /// Accumulates sum_j q_ij^2 Z^2 (y_i - y_j) into `force` and returns sum_j q_ij Z
  /// (both unnormalized) for point `i`.
  double repulsion(std::size_t i, double theta, double* force) const {
    double z = 0.0;
    visit(0, i, theta * theta, force, z);
    return z;
  }

private:
  struct Node {
    std::array<double, Dim> center{};
    std::array<double, Dim> half{};
    std::array<double, Dim> com{};
    std::uint32_t count = 0;
    std::int64_t point = -1; ///< stored point when this is an occupied leaf
    std::int32_t first_child = -1;
  };

  static constexpr int kMaxDepth = 64;

  int child_slot(const Node& nd, const double* y) const {
    int slot = 0;
    for (int d = 0; d < Dim; ++d)
      if (y[d] > nd.center[d]) slot |= 1 << d;
    return slot;
  }

  void subdivide(std::size_t idx) {
    const auto first = static_cast<std::int32_t>(nodes_.size());
    for (int c = 0; c < kChildren; ++c) {
      Node child;
      for (int d = 0; d < Dim; ++d) {
        child.half[d] = 0.5 * nodes_[idx].half[d];
        child.center[d] = nodes_[idx].center[d] + ((c >> d) & 1 ? child.half[d] : -child.half[d]);
      }
      nodes_.push_back(child);
    }
    nodes_[idx].first_child = first;
  }

  void insert(std::size_t idx, std::uint32_t pt, int depth) {
    const double* y = coords_ + static_cast<std::size_t>(pt) * Dim;
    {
      Node& nd = nodes_[idx];
      const double inv = 1.0 / static_cast<double>(nd.count + 1);
      for (int d = 0; d < Dim; ++d) nd.com[d] = nd.com[d] * (static_cast<double>(nd.count) * inv) + y[d] * inv;
      ++nd.count;
      if (nd.count == 1) {
        nd.point = pt;
        return;
      }
    }
    if (depth >= kMaxDepth) { // coincident points: keep aggregated as a bucket
      nodes_[idx].point = -1;
      return;
    }
    if (nodes_[idx].first_child < 0) {
      subdivide(idx);
      const auto old = nodes_[idx].point;
      nodes_[idx].point = -1;
      if (old >= 0) {
        const double* yo = coords_ + static_cast<std::size_t>(old) * Dim;
        insert(static_cast<std::size_t>(nodes_[idx].first_child + child_slot(nodes_[idx], yo)),
               static_cast<std::uint32_t>(old), depth + 1);
      }
    }
    insert(static_cast<std::size_t>(nodes_[idx].first_child + child_slot(nodes_[idx], y)), pt, depth + 1);
  }

  void visit(std::size_t idx, std::size_t i, double theta2, double* force, double& z) const {
    const Node& nd = nodes_[idx];
    if (nd.count == 0) return;
    if (nd.count == 1 && nd.point == static_cast<std::int64_t>(i)) return;
    const double* y = coords_ + i * Dim;
    double d2 = 0.0;
    std::array<double, Dim> diff;
    for (int d = 0; d < Dim; ++d) {
      diff[d] = y[d] - nd.com[d];
      d2 += diff[d] * diff[d];
    }
    double max_width = 0.0;
    for (int d = 0; d < Dim; ++d) max_width = std::max(max_width, 2.0 * nd.half[d]);
    const bool leaf = nd.first_child < 0;
    if (leaf || max_width * max_width < theta2 * d2) {
      double cnt = static_cast<double>(nd.count);
      if (leaf && nd.point < 0) {
        // Depth-capped bucket of coincident points; may contain i itself.
        if (d2 == 0.0) cnt -= 1.0;
      }
      if (cnt <= 0.0) return;
      const double w = 1.0 / (1.0 + d2);
      const double mult = cnt * w;
      z += mult;
      for (int d = 0; d < Dim; ++d) force[d] += mult * w * diff[d];
      return;
    }
    for (int c = 0; c < kChildren; ++c) visit(static_cast<std::size_t>(nd.first_child + c), i, theta2, force, z);
  }

  const double* coords_;
  std::vector<Node> nodes_;
};

} // namespace mrfviz::hsne

#endif
