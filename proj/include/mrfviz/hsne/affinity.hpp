#ifndef MRFVIZ_HSNE_AFFINITY_HPP
#define MRFVIZ_HSNE_AFFINITY_HPP

#include "../errors.hpp"
#include "knn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <tuple>
#include <vector>

namespace mrfviz::hsne {

/// Sparse matrix in compressed-row form with sorted column indices.
struct SparseMatrix {
  std::size_t n = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::uint32_t> col;
  std::vector<double> val;

  std::size_t nnz() const { return val.size(); }

  /// Builds from (row, col, value) triplets; duplicates are summed in sorted order.
  static SparseMatrix from_triplets(std::size_t n, std::vector<std::tuple<std::uint32_t, std::uint32_t, double>> t) {
    std::sort(t.begin(), t.end(), [](const auto& a, const auto& b) {
      return std::tie(std::get<0>(a), std::get<1>(a)) < std::tie(std::get<0>(b), std::get<1>(b));
    });
    SparseMatrix m;
    m.n = n;
    m.row_ptr.assign(n + 1, 0);
    for (std::size_t e = 0; e < t.size(); ++e) {
      const auto [r, c, v] = t[e];
      if (!m.col.empty() && e > 0 && std::get<0>(t[e - 1]) == r && std::get<1>(t[e - 1]) == c) {
        m.val.back() += v;
        continue;
      }
      m.col.push_back(c);
      m.val.push_back(v);
      ++m.row_ptr[r + 1];
    }
    for (std::size_t i = 0; i < n; ++i) m.row_ptr[i + 1] += m.row_ptr[i];
    return m;
  }

  double sum() const {
    double s = 0.0;
    for (double v : val) s += v;
    return s;
  }
};

/// Symmetric joint probabilities P over n points (sum 1) and the perplexity
/// used to calibrate the conditional rows.
struct AffinityMatrix {
  SparseMatrix p;
  double perplexity = 0.0;
  std::size_t n() const { return p.n; }
};

struct ConditionalRows {
  std::size_t n = 0, k = 0;
  std::vector<double> p; ///< n x k, aligned with NeighborGraph::indices
  std::vector<double> beta;
};

/// Per-row Gaussian bandwidths such that the Shannon entropy (nats) of each
/// conditional distribution equals log(perplexity) within `tol`.
inline ConditionalRows conditional_probabilities(const NeighborGraph& g, double perplexity, double tol = 1e-5,
                                                 int max_steps = 200) {
  if (!(perplexity > 0.0) || perplexity > static_cast<double>(g.k))
    throw DomainError("perplexity must lie in (0, k]");
  ConditionalRows out;
  out.n = g.n;
  out.k = g.k;
  out.p.resize(g.n * g.k);
  out.beta.resize(g.n);
  const double target = std::log(perplexity);
  std::vector<double> d2(g.k);

  for (std::size_t i = 0; i < g.n; ++i) {
    double* row = out.p.data() + i * g.k;
    double dmin = std::numeric_limits<double>::infinity(), dmax = 0.0;
    for (std::size_t j = 0; j < g.k; ++j) {
      const double d = g.distance(i, j);
      d2[j] = d * d;
      dmin = std::min(dmin, d2[j]);
      dmax = std::max(dmax, d2[j]);
    }
    for (auto& v : d2) v -= dmin; // shift for stability; cancels in normalization

    if (dmax - dmin <= 0.0) {
      // Equidistant neighbours: every bandwidth gives the uniform distribution.
      std::fill(row, row + g.k, 1.0 / static_cast<double>(g.k));
      out.beta[i] = 0.0;
      continue;
    }

    double beta = 1.0 / ((dmax - dmin) / static_cast<double>(g.k) + 1e-300);
    double lo = 0.0, hi = std::numeric_limits<double>::infinity();
    bool converged = false;
    for (int step = 0; step < max_steps; ++step) {
      double sum = 0.0;
      for (std::size_t j = 0; j < g.k; ++j) {
        row[j] = std::exp(-beta * d2[j]);
        sum += row[j];
      }
      double h = 0.0;
      for (std::size_t j = 0; j < g.k; ++j) {
        row[j] /= sum;
        if (row[j] > 0.0) h -= row[j] * std::log(row[j]);
      }
      const double diff = h - target;
      if (std::abs(diff) < tol) {
        converged = true;
        break;
      }
      if (diff > 0.0) { // too flat: sharpen
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
      } else {
        hi = beta;
        beta = 0.5 * (beta + lo);
      }
    }
    if (!converged)
      throw NumericalError("perplexity bisection did not converge for row " + std::to_string(i) +
                           " (perplexity " + std::to_string(perplexity) + ")");
    out.beta[i] = beta;
  }
  return out;
}

/// p_ij = (p_j|i + p_i|j) / (2n) on the union of neighbour lists.
inline AffinityMatrix affinities(const NeighborGraph& g, double perplexity) {
  const auto cond = conditional_probabilities(g, perplexity);
  std::vector<std::tuple<std::uint32_t, std::uint32_t, double>> t;
  t.reserve(2 * g.n * g.k);
  const double scale = 1.0 / (2.0 * static_cast<double>(g.n));
  for (std::size_t i = 0; i < g.n; ++i)
    for (std::size_t j = 0; j < g.k; ++j) {
      const auto a = static_cast<std::uint32_t>(i);
      const auto b = g.index(i, j);
      const double v = cond.p[i * g.k + j] * scale;
      t.emplace_back(a, b, v);
      t.emplace_back(b, a, v);
    }
  AffinityMatrix a;
  a.p = SparseMatrix::from_triplets(g.n, std::move(t));
  a.perplexity = perplexity;
  return a;
}

} // namespace mrfviz::hsne

#endif
