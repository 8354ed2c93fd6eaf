#ifndef MRFVIZ_HSNE_KNN_HPP
#define MRFVIZ_HSNE_KNN_HPP

#include "../errors.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <numeric>
#include <vector>

namespace mrfviz::hsne {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Exact k-nearest-neighbour lists, row-major n x k, distances ascending.
struct NeighborGraph {
  std::size_t n = 0;
  std::size_t k = 0;
  std::vector<std::uint32_t> indices;
  std::vector<double> distances; ///< Euclidean, not squared

  std::uint32_t index(std::size_t i, std::size_t j) const { return indices[i * k + j]; }
  double distance(std::size_t i, std::size_t j) const { return distances[i * k + j]; }
};

/// Brute-force Euclidean kNN. Self matches are excluded and ties resolve to
/// the lower index.
///
/// Candidates are screened with blocked dot products (|a|^2 + |b|^2 - 2 a.b),
/// then every candidate that could still belong to the top k under the
/// rounding bound of that expansion is re-measured directly as |a - b|.
/// The returned distances and ordering therefore come from the direct
/// differences only.
inline NeighborGraph knn(const RowMatrix& data, std::size_t k) {
  const auto n = static_cast<std::size_t>(data.rows());
  if (data.cols() < 1) throw DomainError("knn: data must have at least one column");
  if (k == 0 || k >= n) throw DomainError("knn: need 0 < k < n (k=" + std::to_string(k) + ", n=" + std::to_string(n) + ")");

  NeighborGraph g;
  g.n = n;
  g.k = k;
  g.indices.resize(n * k);
  g.distances.resize(n * k);

  const Eigen::VectorXd sq = data.rowwise().squaredNorm();
  constexpr Eigen::Index kBlock = 256;
  std::vector<double> approx(n);
  std::vector<double> scratch(n);
  std::vector<std::uint32_t> cand;
  std::vector<std::pair<double, std::uint32_t>> exact;

  for (Eigen::Index b0 = 0; b0 < data.rows(); b0 += kBlock) {
    const Eigen::Index rows = std::min<Eigen::Index>(kBlock, data.rows() - b0);
    const RowMatrix dots = data.middleRows(b0, rows) * data.transpose();
    for (Eigen::Index r = 0; r < rows; ++r) {
      const std::size_t i = static_cast<std::size_t>(b0 + r);
      double max_sq = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        approx[j] = sq[static_cast<Eigen::Index>(i)] + sq[static_cast<Eigen::Index>(j)] -
                    2.0 * dots(r, static_cast<Eigen::Index>(j));
        max_sq = std::max(max_sq, sq[static_cast<Eigen::Index>(j)]);
      }
      approx[i] = std::numeric_limits<double>::infinity();
      const double tol = 1e-10 * (sq[static_cast<Eigen::Index>(i)] + max_sq) + 1e-300;

      std::copy(approx.begin(), approx.end(), scratch.begin());
      std::nth_element(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(k - 1), scratch.end());
      const double cutoff = scratch[k - 1] + 2.0 * tol;

      cand.clear();
      for (std::size_t j = 0; j < n; ++j)
        if (j != i && approx[j] <= cutoff) cand.push_back(static_cast<std::uint32_t>(j));

      exact.clear();
      for (auto j : cand) {
        const double d2 = (data.row(static_cast<Eigen::Index>(i)) - data.row(j)).squaredNorm();
        exact.emplace_back(d2, j);
      }
      std::partial_sort(exact.begin(), exact.begin() + static_cast<std::ptrdiff_t>(k), exact.end());
      for (std::size_t j = 0; j < k; ++j) {
        g.indices[i * k + j] = exact[j].second;
        g.distances[i * k + j] = std::sqrt(exact[j].first);
      }
    }
  }
  return g;
}

} // namespace mrfviz::hsne

#endif
