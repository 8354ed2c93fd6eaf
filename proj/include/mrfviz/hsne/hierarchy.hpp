#ifndef MRFVIZ_HSNE_HIERARCHY_HPP
#define MRFVIZ_HSNE_HIERARCHY_HPP

// Landmark hierarchy: each level keeps a subset of the level below, chosen by
// random-walk visit counts on the Markov chain of the lower level's affinities.
// Lower-level points are tied to landmarks through "influence" weights, the
// fraction of their random walks absorbed at each landmark.

#include "../errors.hpp"
#include "affinity.hpp"

#include <algorithm>
#include <cstdint>
#include <deque>
#include <random>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace mrfviz::hsne {

struct LandmarkOptions {
  int selection_walks = 10;  ///< walks per node whose end points are counted
  int influence_walks = 100; ///< absorbing walks per node for influence weights
  int walk_length = 50;
  double threshold = 1.5; ///< landmark if end-point hits > threshold * mean hits
};

struct HierarchyLevel {
  /// Stable level-0 id of every member, ascending.
  std::vector<std::uint32_t> ids;
  AffinityMatrix affinity;
  /// Row-stochastic influence of the previous level's members (rows) on this
  /// level's members (columns). Empty for level 0.
  SparseMatrix influence;
};

struct Hierarchy {
  std::vector<HierarchyLevel> levels; ///< levels[0] is the data level
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Generator seeded from (seed, stream, point id), so draws for a point do not
/// depend on which other points exist or in which order they are processed.
inline std::mt19937_64 keyed_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t id) {
  return std::mt19937_64(splitmix64(seed ^ splitmix64(stream ^ splitmix64(id))));
}

inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Row-normalized cumulative transition probabilities of a sparse affinity.
struct TransitionChain {
  const SparseMatrix* p = nullptr;
  std::vector<double> cumulative;

  explicit TransitionChain(const SparseMatrix& m) : p(&m), cumulative(m.nnz()) {
    for (std::size_t i = 0; i < m.n; ++i) {
      double acc = 0.0;
      for (std::size_t e = m.row_ptr[i]; e < m.row_ptr[i + 1]; ++e) {
        acc += m.val[e];
        cumulative[e] = acc;
      }
      for (std::size_t e = m.row_ptr[i]; e < m.row_ptr[i + 1]; ++e) cumulative[e] /= acc;
    }
  }

  /// Next state, or `from` itself when the row is empty.
  std::uint32_t step(std::uint32_t from, std::mt19937_64& rng) const {
    const auto lo = p->row_ptr[from], hi = p->row_ptr[from + 1];
    if (lo == hi) return from;
    const double u = uniform01(rng);
    auto it = std::upper_bound(cumulative.begin() + static_cast<std::ptrdiff_t>(lo),
                               cumulative.begin() + static_cast<std::ptrdiff_t>(hi), u);
    if (it == cumulative.begin() + static_cast<std::ptrdiff_t>(hi)) --it;
    return p->col[static_cast<std::size_t>(it - cumulative.begin())];
  }
};

} // namespace detail

/// End-point counts of `selection_walks` walks of `walk_length` steps started
/// at every node.
inline std::vector<std::uint64_t> walk_visit_counts(const AffinityMatrix& a, const std::vector<std::uint32_t>& ids,
                                                    const LandmarkOptions& opt, std::uint64_t seed,
                                                    std::uint64_t level) {
  const detail::TransitionChain chain(a.p);
  std::vector<std::uint64_t> visits(a.n(), 0);
  for (std::size_t i = 0; i < a.n(); ++i) {
    auto rng = detail::keyed_rng(seed, 2 * level, ids[i]);
    for (int w = 0; w < opt.selection_walks; ++w) {
      auto cur = static_cast<std::uint32_t>(i);
      for (int s = 0; s < opt.walk_length; ++s) cur = chain.step(cur, rng);
      ++visits[cur];
    }
  }
  return visits;
}

/// Builds the next level above `lower`. Throws ConfigError when fewer than
/// `min_landmarks` landmarks survive selection.
inline HierarchyLevel build_level(const HierarchyLevel& lower, const LandmarkOptions& opt, std::uint64_t seed,
                                  std::uint64_t level, std::size_t min_landmarks) {
  const std::size_t n = lower.affinity.n();
  const auto visits = walk_visit_counts(lower.affinity, lower.ids, opt, seed, level);
  double mean = 0.0;
  for (auto v : visits) mean += static_cast<double>(v);
  mean /= static_cast<double>(n);

  std::vector<std::int64_t> landmark_of(n, -1);
  std::vector<std::uint32_t> members;
  for (std::size_t i = 0; i < n; ++i)
    if (static_cast<double>(visits[i]) > opt.threshold * mean) {
      landmark_of[i] = static_cast<std::int64_t>(members.size());
      members.push_back(static_cast<std::uint32_t>(i));
    }
  if (members.size() < min_landmarks)
    throw ConfigError("landmark selection kept " + std::to_string(members.size()) + " of " + std::to_string(n) +
                      " points at level " + std::to_string(level) + "; at least " + std::to_string(min_landmarks) +
                      " are required");
  const std::size_t m = members.size();

  // Influence: absorbing walks from every lower-level point.
  const detail::TransitionChain chain(lower.affinity.p);
  std::vector<std::tuple<std::uint32_t, std::uint32_t, double>> inf;
  std::vector<std::uint32_t> hits(m, 0);
  std::vector<std::uint32_t> touched;
  for (std::size_t i = 0; i < n; ++i) {
    if (landmark_of[i] >= 0) {
      inf.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(landmark_of[i]), 1.0);
      continue;
    }
    auto rng = detail::keyed_rng(seed, 2 * level + 1, lower.ids[i]);
    touched.clear();
    std::uint32_t absorbed = 0;
    for (int w = 0; w < opt.influence_walks; ++w) {
      auto cur = static_cast<std::uint32_t>(i);
      for (int s = 0; s < opt.walk_length; ++s) {
        cur = chain.step(cur, rng);
        if (landmark_of[cur] >= 0) {
          const auto l = static_cast<std::uint32_t>(landmark_of[cur]);
          if (hits[l]++ == 0) touched.push_back(l);
          ++absorbed;
          break;
        }
      }
    }
    if (absorbed == 0) {
      // No walk reached a landmark: attach to the closest landmark in graph hops.
      std::vector<std::int32_t> hop(n, -1);
      std::deque<std::uint32_t> queue{static_cast<std::uint32_t>(i)};
      hop[i] = 0;
      std::int64_t best = -1;
      while (!queue.empty() && best < 0) {
        const auto u = queue.front();
        queue.pop_front();
        for (std::size_t e = lower.affinity.p.row_ptr[u]; e < lower.affinity.p.row_ptr[u + 1]; ++e) {
          const auto v = lower.affinity.p.col[e];
          if (hop[v] >= 0) continue;
          hop[v] = hop[u] + 1;
          if (landmark_of[v] >= 0 && (best < 0 || landmark_of[v] < best)) best = landmark_of[v];
          queue.push_back(v);
        }
      }
      if (best < 0) best = 0; // disconnected component
      inf.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(best), 1.0);
      continue;
    }
    std::sort(touched.begin(), touched.end());
    for (auto l : touched) {
      inf.emplace_back(static_cast<std::uint32_t>(i), l, static_cast<double>(hits[l]) / absorbed);
      hits[l] = 0;
    }
  }

  HierarchyLevel up;
  up.ids.reserve(m);
  for (auto i : members) up.ids.push_back(lower.ids[i]);
  up.influence = SparseMatrix::from_triplets(n, std::move(inf));
  up.influence.n = n;

  // Landmark affinity: P_L = I^T P I without the diagonal, renormalized to 1.
  // Computed row by row of I^T with a dense accumulator over landmarks.
  const auto& p = lower.affinity.p;
  const auto& I = up.influence;
  std::vector<std::vector<std::pair<std::uint32_t, double>>> inf_t(m); // I^T rows
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = I.row_ptr[i]; a < I.row_ptr[i + 1]; ++a)
      inf_t[I.col[a]].emplace_back(static_cast<std::uint32_t>(i), I.val[a]);
  std::vector<double> acc(m, 0.0);
  std::vector<std::uint32_t> used;
  std::vector<std::tuple<std::uint32_t, std::uint32_t, double>> t;
  for (std::size_t la = 0; la < m; ++la) {
    used.clear();
    for (const auto& [i, wi] : inf_t[la])
      for (std::size_t e = p.row_ptr[i]; e < p.row_ptr[i + 1]; ++e) {
        const auto j = p.col[e];
        const double wij = wi * p.val[e];
        for (std::size_t b = I.row_ptr[j]; b < I.row_ptr[j + 1]; ++b) {
          const auto lb = I.col[b];
          if (lb == la) continue;
          if (acc[lb] == 0.0) used.push_back(lb);
          acc[lb] += wij * I.val[b];
        }
      }
    std::sort(used.begin(), used.end());
    for (auto lb : used) {
      t.emplace_back(static_cast<std::uint32_t>(la), lb, acc[lb]);
      acc[lb] = 0.0;
    }
  }
  up.affinity.p = SparseMatrix::from_triplets(m, std::move(t));
  const double total = up.affinity.p.sum();
  if (total > 0.0)
    for (auto& v : up.affinity.p.val) v /= total;
  up.affinity.perplexity = lower.affinity.perplexity;
  return up;
}

/// Hierarchy with `n_levels` levels over the data-level affinity `a`.
/// `ids` are the stable level-0 identifiers used to key random streams.
inline Hierarchy build_hierarchy(AffinityMatrix a, int n_levels, std::uint64_t seed, int dim = 2,
                                 const LandmarkOptions& opt = {}, std::vector<std::uint32_t> ids = {}) {
  if (n_levels < 1 || n_levels > 3) throw ConfigError("hierarchy levels must be 1, 2 or 3");
  Hierarchy h;
  HierarchyLevel base;
  if (ids.empty()) {
    ids.resize(a.n());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<std::uint32_t>(i);
  }
  if (ids.size() != a.n()) throw DomainError("build_hierarchy: id count does not match affinity size");
  base.ids = std::move(ids);
  base.affinity = std::move(a);
  h.levels.push_back(std::move(base));
  for (int l = 1; l < n_levels; ++l)
    h.levels.push_back(build_level(h.levels.back(), opt, seed, static_cast<std::uint64_t>(l),
                                   static_cast<std::size_t>(dim + 2)));
  return h;
}

} // namespace mrfviz::hsne

#endif
