#ifndef MRFVIZ_HSNE_EMBED_HPP
#define MRFVIZ_HSNE_EMBED_HPP

#include "../errors.hpp"
#include "affinity.hpp"
#include "hierarchy.hpp"
#include "knn.hpp"
#include "tsne.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

namespace mrfviz::hsne {

struct EmbedOptions {
  int dim = 2;
  std::size_t neighbors = 90;      ///< kNN neighbourhood size
  double perplexity = 0.0;         ///< 0: neighbors / 3
  int levels = 2;
  int iterations = 1000;           ///< per level
  int exaggeration_iterations = 200;
  double exaggeration = 1.5;       ///< top level only
  double learning_rate = 200.0;
  double theta = 0.5;
  std::size_t exact_threshold = 20000;
  std::uint64_t seed = 1;
  LandmarkOptions landmarks;

  double effective_perplexity() const {
    return perplexity > 0.0 ? perplexity : static_cast<double>(neighbors) / 3.0;
  }
};

struct Embedding {
  int dim = 2;
  std::vector<std::uint32_t> ids; ///< stable point ids, in the order of `points`
  std::vector<double> points;     ///< row-major n x dim
  /// KL checkpoints of the data-level optimization.
  std::vector<Checkpoint> kl_trace;
  /// Index into kl_trace of the first checkpoint taken after early exaggeration.
  std::size_t post_exaggeration_index = 0;
  /// Traces of every level, top level first.
  std::vector<std::vector<Checkpoint>> level_traces;
  std::vector<std::size_t> level_sizes;
  EmbedOptions config;

  std::size_t size() const { return ids.size(); }
  double at(std::size_t i, int d) const { return points[i * static_cast<std::size_t>(dim) + d]; }
};

/// Optimizes every level of `h` top-down and returns the data-level embedding.
/// Top level: keyed uniform init in [-0.01, 0.01]^dim and early exaggeration.
/// Lower levels: each point starts at the influence-weighted mean of its
/// parents' positions; no exaggeration.
inline Embedding embed(const Hierarchy& h, const EmbedOptions& opts) {
  if (opts.dim != 2 && opts.dim != 3) throw DomainError("embedding dimension must be 2 or 3");
  if (opts.iterations < 250) throw DomainError("embedding needs at least 250 iterations per level");
  if (h.levels.empty()) throw DomainError("empty hierarchy");
  const int dim = opts.dim;
  const std::size_t top = h.levels.size() - 1;

  OptimizerOptions base;
  base.iterations = opts.iterations;
  base.learning_rate = opts.learning_rate;
  base.theta = opts.theta;
  base.exact_threshold = opts.exact_threshold;

  Embedding out;
  out.dim = dim;
  out.config = opts;

  // Top level.
  const auto& tl = h.levels[top];
  std::vector<double> y(tl.ids.size() * static_cast<std::size_t>(dim));
  for (std::size_t i = 0; i < tl.ids.size(); ++i) {
    auto rng = detail::keyed_rng(opts.seed, 1000, tl.ids[i]);
    for (int d = 0; d < dim; ++d) y[i * dim + d] = (2.0 * detail::uniform01(rng) - 1.0) * 1e-2;
  }
  OptimizerOptions top_opt = base;
  top_opt.exaggeration_iterations = opts.exaggeration_iterations;
  top_opt.exaggeration = opts.exaggeration;
  out.level_traces.push_back(optimize(tl.affinity, y, dim, top_opt));
  out.level_sizes.push_back(tl.ids.size());

  for (std::size_t lv = top; lv-- > 0;) {
    const auto& lower = h.levels[lv];
    const auto& inf = h.levels[lv + 1].influence;
    std::vector<double> ylow(lower.ids.size() * static_cast<std::size_t>(dim), 0.0);
    for (std::size_t i = 0; i < lower.ids.size(); ++i)
      for (std::size_t e = inf.row_ptr[i]; e < inf.row_ptr[i + 1]; ++e)
        for (int d = 0; d < dim; ++d) ylow[i * dim + d] += inf.val[e] * y[static_cast<std::size_t>(inf.col[e]) * dim + d];
    y = std::move(ylow);
    out.level_traces.push_back(optimize(lower.affinity, y, dim, base));
    out.level_sizes.push_back(lower.ids.size());
  }

  out.ids = h.levels[0].ids;
  out.points = std::move(y);
  out.kl_trace = out.level_traces.back();
  out.post_exaggeration_index = 0;
  if (top == 0) {
    while (out.post_exaggeration_index < out.kl_trace.size() &&
           out.kl_trace[out.post_exaggeration_index].iteration <= opts.exaggeration_iterations)
      ++out.post_exaggeration_index;
  }
  return out;
}

/// Full pipeline on raw rows: kNN, perplexity calibration, hierarchy, embedding.
/// Rows are processed in ascending id order, so permuting rows together with
/// their ids permutes the result and nothing else. The returned embedding
/// lists points in ascending id order.
inline Embedding embed_points(const RowMatrix& data, std::vector<std::uint32_t> ids, const EmbedOptions& opts) {
  const auto n = static_cast<std::size_t>(data.rows());
  if (ids.empty()) {
    ids.resize(n);
    std::iota(ids.begin(), ids.end(), 0u);
  }
  if (ids.size() != n) throw DomainError("embed_points: id count does not match rows");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ids[a] < ids[b]; });
  for (std::size_t i = 1; i < n; ++i)
    if (ids[order[i]] == ids[order[i - 1]]) throw DomainError("embed_points: duplicate point id");

  RowMatrix sorted(data.rows(), data.cols());
  std::vector<std::uint32_t> sorted_ids(n);
  for (std::size_t i = 0; i < n; ++i) {
    sorted.row(static_cast<Eigen::Index>(i)) = data.row(static_cast<Eigen::Index>(order[i]));
    sorted_ids[i] = ids[order[i]];
  }
  const auto graph = knn(sorted, opts.neighbors);
  auto aff = affinities(graph, opts.effective_perplexity());
  const auto h = build_hierarchy(std::move(aff), opts.levels, opts.seed, opts.dim, opts.landmarks, sorted_ids);
  return embed(h, opts);
}

} // namespace mrfviz::hsne

#endif
