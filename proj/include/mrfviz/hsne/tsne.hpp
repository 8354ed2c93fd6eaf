#ifndef MRFVIZ_HSNE_TSNE_HPP
#define MRFVIZ_HSNE_TSNE_HPP

// Gradient descent on KL(P || Q) with a Student-t low-dimensional kernel.
// Exact O(n^2) repulsion for small sets, Barnes-Hut above a size threshold.

#include "../errors.hpp"
#include "affinity.hpp"
#include "../parallel.hpp"
#include "sptree.hpp"

#include <cmath>
#include <cstdint>
#include <sstream>
#include <vector>

namespace mrfviz::hsne {

struct OptimizerOptions {
  int iterations = 1000;
  int exaggeration_iterations = 0; ///< leading iterations with exaggerated P
  double exaggeration = 1.0;
  double learning_rate = 200.0;
  double momentum = 0.5;
  double final_momentum = 0.8;
  int momentum_switch = 250;
  double theta = 0.5;
  std::size_t exact_threshold = 20000; ///< exact gradient for n <= threshold
  int checkpoint_every = 100;
};

/// KL value recorded after `iteration` completed steps.
struct Checkpoint {
  int iteration = 0;
  double kl = 0.0;
};

namespace detail {

/// Repulsion row sums for point i over all j (including j == i, which adds 1 to
/// the kernel sum and nothing to the force). Coordinates are column-major
/// (`cols[d][j]`). Four fixed accumulator lanes keep the loop vectorizable and
/// the summation order independent of the machine.
template <int Dim>
double exact_row(const std::vector<double>* cols, std::size_t n, std::size_t i, double* force) {
  constexpr int kLanes = 4;
  double yi[Dim];
  for (int d = 0; d < Dim; ++d) yi[d] = cols[d][i];
  double zacc[kLanes] = {0.0, 0.0, 0.0, 0.0};
  double facc[Dim][kLanes] = {};
  const std::size_t blocks = n / kLanes;
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t j0 = b * kLanes;
    for (int l = 0; l < kLanes; ++l) {
      double diff[Dim];
      double d2 = 0.0;
      for (int d = 0; d < Dim; ++d) {
        diff[d] = yi[d] - cols[d][j0 + l];
        d2 += diff[d] * diff[d];
      }
      const double w = 1.0 / (1.0 + d2);
      zacc[l] += w;
      for (int d = 0; d < Dim; ++d) facc[d][l] += w * w * diff[d];
    }
  }
  for (std::size_t j = blocks * kLanes; j < n; ++j) {
    double diff[Dim];
    double d2 = 0.0;
    for (int d = 0; d < Dim; ++d) {
      diff[d] = yi[d] - cols[d][j];
      d2 += diff[d] * diff[d];
    }
    const double w = 1.0 / (1.0 + d2);
    zacc[0] += w;
    for (int d = 0; d < Dim; ++d) facc[d][0] += w * w * diff[d];
  }
  if (force)
    for (int d = 0; d < Dim; ++d) force[d] = (facc[d][0] + facc[d][1]) + (facc[d][2] + facc[d][3]);
  return (zacc[0] + zacc[1]) + (zacc[2] + zacc[3]) - 1.0;
}

/// Unnormalized repulsive forces (row-major, may be null) and the normalizer
/// sum over i != j of 1 / (1 + |y_i - y_j|^2).
template <int Dim>
double exact_repulsion(const std::vector<double>& y, std::size_t n, double* rep) {
  std::vector<double> cols[Dim];
  for (int d = 0; d < Dim; ++d) {
    cols[d].resize(n);
    for (std::size_t i = 0; i < n; ++i) cols[d][i] = y[i * Dim + d];
  }
  std::vector<double> zrow(n);
  parallel_for(n, [&](std::size_t i) { zrow[i] = exact_row<Dim>(cols, n, i, rep ? rep + i * Dim : nullptr); });
  double z = 0.0;
  for (double v : zrow) z += v;
  return z;
}

inline double exact_repulsion(const std::vector<double>& y, std::size_t n, int dim, double* rep) {
  return dim == 2 ? exact_repulsion<2>(y, n, rep) : exact_repulsion<3>(y, n, rep);
}

inline double exact_normalizer(const std::vector<double>& y, std::size_t n, int dim) {
  return exact_repulsion(y, n, dim, nullptr);
}

inline double kl_from_normalizer(const SparseMatrix& p, const std::vector<double>& y, int dim, double z) {
  double kl = 0.0;
  for (std::size_t i = 0; i < p.n; ++i) {
    const double* yi = y.data() + i * dim;
    for (std::size_t e = p.row_ptr[i]; e < p.row_ptr[i + 1]; ++e) {
      const double pij = p.val[e];
      if (pij <= 0.0) continue;
      const double* yj = y.data() + static_cast<std::size_t>(p.col[e]) * dim;
      double d2 = 0.0;
      for (int d = 0; d < dim; ++d) d2 += (yi[d] - yj[d]) * (yi[d] - yj[d]);
      const double q = 1.0 / ((1.0 + d2) * z);
      kl += pij * std::log(pij / q);
    }
  }
  return kl;
}

} // namespace detail

/// KL(P || Q) where q_ij = (1 + |y_i - y_j|^2)^-1 / sum_{k != l} (1 + |y_k - y_l|^2)^-1.
/// The sum runs over the stored (non-zero) entries of P; P is expected to sum to 1.
inline double kl_divergence(const AffinityMatrix& a, const std::vector<double>& y, int dim) {
  if (y.size() != a.n() * static_cast<std::size_t>(dim)) throw DomainError("kl_divergence: size mismatch");
  return detail::kl_from_normalizer(a.p, y, dim, detail::exact_normalizer(y, a.n(), dim));
}

/// Exact gradient dKL/dy (with P multiplied by `exaggeration`), row-major n x dim.
inline std::vector<double> kl_gradient_exact(const SparseMatrix& p, const std::vector<double>& y, int dim,
                                             double exaggeration = 1.0) {
  if (dim != 2 && dim != 3) throw DomainError("embedding dimension must be 2 or 3");
  const std::size_t n = p.n;
  std::vector<double> grad(n * dim, 0.0), rep(n * dim, 0.0);
  const double z = detail::exact_repulsion(y, n, dim, rep.data());
  for (std::size_t i = 0; i < n; ++i) {
    const double* yi = y.data() + i * dim;
    for (std::size_t e = p.row_ptr[i]; e < p.row_ptr[i + 1]; ++e) {
      const double* yj = y.data() + static_cast<std::size_t>(p.col[e]) * dim;
      double d2 = 0.0;
      for (int d = 0; d < dim; ++d) d2 += (yi[d] - yj[d]) * (yi[d] - yj[d]);
      const double mult = exaggeration * p.val[e] / (1.0 + d2);
      for (int d = 0; d < dim; ++d) grad[i * dim + d] += mult * (yi[d] - yj[d]);
    }
    for (int d = 0; d < dim; ++d) grad[i * dim + d] = 4.0 * (grad[i * dim + d] - rep[i * dim + d] / z);
  }
  return grad;
}

namespace detail {

template <int Dim>
std::vector<double> kl_gradient_bh(const SparseMatrix& p, const std::vector<double>& y, double exaggeration,
                                   double theta, double* z_out) {
  const std::size_t n = p.n;
  SpTree<Dim> tree(y.data(), n);
  std::vector<double> grad(n * Dim, 0.0), rep(n * Dim, 0.0);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) z += tree.repulsion(i, theta, rep.data() + i * Dim);
  for (std::size_t i = 0; i < n; ++i) {
    const double* yi = y.data() + i * Dim;
    for (std::size_t e = p.row_ptr[i]; e < p.row_ptr[i + 1]; ++e) {
      const double* yj = y.data() + static_cast<std::size_t>(p.col[e]) * Dim;
      double d2 = 0.0;
      for (int d = 0; d < Dim; ++d) d2 += (yi[d] - yj[d]) * (yi[d] - yj[d]);
      const double mult = exaggeration * p.val[e] / (1.0 + d2);
      for (int d = 0; d < Dim; ++d) grad[i * Dim + d] += mult * (yi[d] - yj[d]);
    }
    for (int d = 0; d < Dim; ++d) grad[i * Dim + d] = 4.0 * (grad[i * Dim + d] - rep[i * Dim + d] / z);
  }
  if (z_out) *z_out = z;
  return grad;
}

template <int Dim>
double bh_normalizer(const std::vector<double>& y, std::size_t n, double theta) {
  SpTree<Dim> tree(y.data(), n);
  std::vector<double> scratch(Dim);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(scratch.begin(), scratch.end(), 0.0);
    z += tree.repulsion(i, theta, scratch.data());
  }
  return z;
}

} // namespace detail

/// Runs gradient descent in place on `y` (row-major n x dim) and returns the
/// KL trace recorded every `checkpoint_every` iterations (and after the last).
inline std::vector<Checkpoint> optimize(const AffinityMatrix& a, std::vector<double>& y, int dim,
                                        const OptimizerOptions& opt) {
  if (dim != 2 && dim != 3) throw DomainError("embedding dimension must be 2 or 3");
  const std::size_t n = a.n();
  if (y.size() != n * static_cast<std::size_t>(dim)) throw DomainError("optimize: size mismatch");
  const bool exact = n <= opt.exact_threshold;

  std::vector<double> update(y.size(), 0.0), gains(y.size(), 1.0);
  std::vector<Checkpoint> trace;

  auto measure = [&](int iteration) {
    double z = 0.0;
    if (exact) {
      z = detail::exact_normalizer(y, n, dim);
    } else {
      z = dim == 2 ? detail::bh_normalizer<2>(y, n, opt.theta) : detail::bh_normalizer<3>(y, n, opt.theta);
    }
    trace.push_back({iteration, detail::kl_from_normalizer(a.p, y, dim, z)});
  };

  for (int it = 0; it < opt.iterations; ++it) {
    const double exag = it < opt.exaggeration_iterations ? opt.exaggeration : 1.0;
    const double momentum = it < opt.momentum_switch ? opt.momentum : opt.final_momentum;
    std::vector<double> grad;
    if (exact) {
      grad = kl_gradient_exact(a.p, y, dim, exag);
    } else if (dim == 2) {
      grad = detail::kl_gradient_bh<2>(a.p, y, exag, opt.theta, nullptr);
    } else {
      grad = detail::kl_gradient_bh<3>(a.p, y, exag, opt.theta, nullptr);
    }

    for (std::size_t i = 0; i < y.size(); ++i) {
      const bool same_sign = (grad[i] > 0.0) == (update[i] > 0.0);
      gains[i] = same_sign ? gains[i] * 0.8 : gains[i] + 0.2;
      if (gains[i] < 0.01) gains[i] = 0.01;
      update[i] = momentum * update[i] - opt.learning_rate * gains[i] * grad[i];
      y[i] += update[i];
    }
    // Re-centre; Q only depends on pairwise distances.
    for (int d = 0; d < dim; ++d) {
      double mean = 0.0;
      for (std::size_t i = 0; i < n; ++i) mean += y[i * dim + d];
      mean /= static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) y[i * dim + d] -= mean;
    }
    for (double v : y) {
      if (!std::isfinite(v)) {
        std::ostringstream os;
        os << "embedding diverged at iteration " << it << " (learning rate " << opt.learning_rate << ")";
        throw NumericalError(os.str());
      }
    }
    if (opt.checkpoint_every > 0 && (it + 1) % opt.checkpoint_every == 0) measure(it + 1);
  }
  if (trace.empty() || trace.back().iteration != opt.iterations) measure(opt.iterations);
  return trace;
}

} // namespace mrfviz::hsne

#endif
