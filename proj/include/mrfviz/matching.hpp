#ifndef MRFVIZ_MATCHING_HPP
#define MRFVIZ_MATCHING_HPP

// Dictionary matching (argmax of normalized inner products), error maps and
// tissue-averaged errors.

#include "dictionary.hpp"
#include "errors.hpp"
#include "parallel.hpp"
#include "phantom.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>
#include <tuple>
#include <vector>

namespace mrfviz {

/// Joint matching over all atoms, or matching restricted to one B1 slice.
struct MatchMode {
  bool fixed_b1 = false;
  double b1 = 1.0;

  static MatchMode joint() { return {}; }
  static MatchMode fixed(double b1) { return {true, b1}; }

  /// "joint" or "fixed-b1=<value>".
  static MatchMode parse(const std::string& s) {
    if (s == "joint") return joint();
    const std::string prefix = "fixed-b1=";
    if (s.rfind(prefix, 0) == 0) {
      const auto v = s.substr(prefix.size());
      try {
        std::size_t used = 0;
        const double b1 = std::stod(v, &used);
        if (used == v.size() && std::isfinite(b1) && b1 > 0.0) return fixed(b1);
      } catch (const std::logic_error&) {
      }
    }
    throw ConfigError("match mode must be 'joint' or 'fixed-b1=<value>', got '" + s + "'");
  }

  std::string to_string() const {
    if (!fixed_b1) return "joint";
    char buf[64];
    std::snprintf(buf, sizeof buf, "fixed-b1=%.17g", b1);
    return buf;
  }
};

struct TissueError {
  int label = 0;
  std::string name;
  std::size_t pixels = 0; ///< matched pixels of this label
  double t1_true_mean = 0.0, t1_mean = 0.0, e1 = 0.0;
  double t2_true_mean = 0.0, t2_mean = 0.0, e2 = 0.0;
};

struct MatchReport {
  std::size_t width = 0, height = 0;
  std::vector<std::int64_t> index;    ///< winning atom, -1 when not matched
  std::vector<std::uint8_t> matched;  ///< 0 for masked-out or all-zero pixels
  std::vector<double> t1, t2, b1;     ///< read off the winning atom (0 when not matched)
  std::vector<double> e1, e2;         ///< percent, filled by error_maps
  std::vector<TissueError> tissues;   ///< filled by tissue_errors
  MatchMode mode;
  double snr = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 0;

  std::size_t pixels() const { return width * height; }
};

namespace detail {

inline constexpr double kTieTolerance = 1e-10;
inline constexpr Eigen::Index kPixelBlock = 64;
inline constexpr Eigen::Index kAtomBlock = 2048;

inline double sequential_dot(const double* a, const double* b, Eigen::Index n) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) s += a[j] * b[j];
  return s;
}

} // namespace detail

/// Per pixel, m = argmax over valid candidate atoms of (unit entry . unit
/// signal), ties to the lowest atom index. Scores come from blocked GEMM;
/// candidates within 1e-10 of the block maximum are re-scored with a plain
/// sequential dot product so the result equals an exhaustive scalar search.
/// Pixels with mask == 0 or an all-zero signal are left unmatched.
inline MatchReport match(const SignalImage& sig, const Dictionary& d, const MatchMode& mode = {},
                         const std::vector<std::uint8_t>& mask = {}) {
  const std::size_t np = sig.width * sig.height;
  if (static_cast<std::size_t>(sig.data.rows()) != np) throw DomainError("signal image size mismatch");
  if (static_cast<std::size_t>(sig.data.cols()) != d.curve_length())
    throw DomainError("signal length " + std::to_string(sig.data.cols()) + " does not match dictionary length " +
                      std::to_string(d.curve_length()));
  if (!mask.empty() && mask.size() != np) throw DomainError("mask size does not match the signal image");

  std::size_t lo = 0, hi = d.n_atoms();
  if (mode.fixed_b1) {
    const auto ib = d.grid.b1_index(mode.b1);
    if (!ib) throw DomainError("fixed b1 value " + std::to_string(mode.b1) + " is not on the dictionary grid");
    std::tie(lo, hi) = d.grid.b1_slice(*ib);
  }

  MatchReport r;
  r.width = sig.width;
  r.height = sig.height;
  r.mode = mode;
  r.index.assign(np, -1);
  r.matched.assign(np, 0);
  r.t1.assign(np, 0.0);
  r.t2.assign(np, 0.0);
  r.b1.assign(np, 0.0);

  // Pixels to match and their unit signals.
  std::vector<std::size_t> todo;
  for (std::size_t k = 0; k < np; ++k) {
    if (!mask.empty() && !mask[k]) continue;
    if (sig.data.row(static_cast<Eigen::Index>(k)).squaredNorm() > 0.0) todo.push_back(k);
  }
  const Eigen::Index n = sig.data.cols();
  RowMatrixD unit(static_cast<Eigen::Index>(todo.size()), n);
  for (std::size_t i = 0; i < todo.size(); ++i) {
    const auto row = sig.data.row(static_cast<Eigen::Index>(todo[i]));
    unit.row(static_cast<Eigen::Index>(i)) = row / row.norm();
  }

  const auto np_todo = static_cast<Eigen::Index>(todo.size());
  const std::size_t blocks = static_cast<std::size_t>((np_todo + detail::kPixelBlock - 1) / detail::kPixelBlock);
  parallel_for(blocks, [&](std::size_t b) {
    const Eigen::Index p0 = static_cast<Eigen::Index>(b) * detail::kPixelBlock;
    const Eigen::Index pn = std::min(detail::kPixelBlock, np_todo - p0);
    std::vector<double> best(static_cast<std::size_t>(pn), -std::numeric_limits<double>::infinity());
    std::vector<std::vector<std::size_t>> cands(static_cast<std::size_t>(pn));
    Eigen::MatrixXd scores;
    for (std::size_t a0 = lo; a0 < hi; a0 += detail::kAtomBlock) {
      const auto an = static_cast<Eigen::Index>(std::min<std::size_t>(detail::kAtomBlock, hi - a0));
      scores.noalias() = d.entries_unit.middleRows(static_cast<Eigen::Index>(a0), an) *
                         unit.middleRows(p0, pn).transpose();
      for (Eigen::Index p = 0; p < pn; ++p) {
        auto& bp = best[static_cast<std::size_t>(p)];
        auto& cp = cands[static_cast<std::size_t>(p)];
        for (Eigen::Index a = 0; a < an; ++a) {
          const std::size_t atom = a0 + static_cast<std::size_t>(a);
          if (!d.valid[atom]) continue;
          const double s = scores(a, p);
          if (s > bp + detail::kTieTolerance) {
            bp = s;
            cp.clear();
            cp.push_back(atom);
          } else if (s >= bp - detail::kTieTolerance) {
            bp = std::max(bp, s);
            cp.push_back(atom);
          }
        }
      }
    }
    for (Eigen::Index p = 0; p < pn; ++p) {
      const auto& cp = cands[static_cast<std::size_t>(p)];
      if (cp.empty()) continue;
      const double* u = unit.row(p0 + p).data();
      std::int64_t win = -1;
      double win_score = -std::numeric_limits<double>::infinity();
      for (auto atom : cp) {
        const double s = detail::sequential_dot(d.entries_unit.row(static_cast<Eigen::Index>(atom)).data(), u, n);
        if (s > win_score) {
          win_score = s;
          win = static_cast<std::int64_t>(atom);
        }
      }
      const std::size_t k = todo[static_cast<std::size_t>(p0 + p)];
      r.index[k] = win;
    }
  });

  for (std::size_t k = 0; k < np; ++k) {
    if (r.index[k] < 0) continue;
    const auto& a = d.grid.atoms()[static_cast<std::size_t>(r.index[k])];
    r.matched[k] = 1;
    r.t1[k] = a.t1;
    r.t2[k] = a.t2;
    r.b1[k] = a.b1;
  }
  return r;
}

/// Matches tissue pixels only (background is excluded from every statistic).
inline std::vector<std::uint8_t> tissue_mask(const Phantom& ph) {
  std::vector<std::uint8_t> m(ph.pixels());
  for (std::size_t k = 0; k < ph.pixels(); ++k) m[k] = ph.is_tissue(k) ? 1 : 0;
  return m;
}

/// E = |T - T_true| / T_true * 100 on matched tissue pixels; 0 elsewhere.
inline MatchReport& error_maps(MatchReport& r, const Phantom& ph) {
  if (r.width != ph.width || r.height != ph.height) throw DomainError("report and phantom sizes differ");
  r.e1.assign(r.pixels(), 0.0);
  r.e2.assign(r.pixels(), 0.0);
  for (std::size_t k = 0; k < r.pixels(); ++k) {
    if (!ph.is_tissue(k) || !r.matched[k]) continue;
    r.e1[k] = std::abs(r.t1[k] - ph.t1_true[k]) / ph.t1_true[k] * 100.0;
    r.e2[k] = std::abs(r.t2[k] - ph.t2_true[k]) / ph.t2_true[k] * 100.0;
  }
  return r;
}

/// Per label present in the phantom: error of the mean over matched pixels,
/// |mean(T) - mean(T_true)| / mean(T_true) * 100.
inline MatchReport& tissue_errors(MatchReport& r, const Phantom& ph) {
  if (r.width != ph.width || r.height != ph.height) throw DomainError("report and phantom sizes differ");
  r.tissues.clear();
  for (const auto& c : ph.table.classes) {
    TissueError e;
    e.label = c.label;
    e.name = c.name;
    bool present = false;
    for (std::size_t k = 0; k < r.pixels(); ++k) {
      if (ph.labels[k] != c.label) continue;
      present = true;
      if (!r.matched[k]) continue;
      ++e.pixels;
      e.t1_mean += r.t1[k];
      e.t2_mean += r.t2[k];
      e.t1_true_mean += ph.t1_true[k];
      e.t2_true_mean += ph.t2_true[k];
    }
    if (!present) continue;
    if (e.pixels == 0) throw DomainError("label '" + c.name + "' has no matched pixels");
    const double m = static_cast<double>(e.pixels);
    e.t1_mean /= m;
    e.t2_mean /= m;
    e.t1_true_mean /= m;
    e.t2_true_mean /= m;
    e.e1 = std::abs(e.t1_mean - e.t1_true_mean) / e.t1_true_mean * 100.0;
    e.e2 = std::abs(e.t2_mean - e.t2_true_mean) / e.t2_true_mean * 100.0;
    r.tissues.push_back(e);
  }
  return r;
}

inline const char* kTissueCsvHeader =
    "label,name,pixels,t1_true_mean,t1_mean,e1_bar,t2_true_mean,t2_mean,e2_bar,snr,seed,mode";

/// One CSV line per tissue of `r` (no header).
inline std::string tissue_csv_rows(const MatchReport& r) {
  std::string out;
  char buf[512];
  for (const auto& e : r.tissues) {
    std::snprintf(buf, sizeof buf, "%d,%s,%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%llu,%s\n", e.label,
                  e.name.c_str(), e.pixels, e.t1_true_mean, e.t1_mean, e.e1, e.t2_true_mean, e.t2_mean, e.e2, r.snr,
                  static_cast<unsigned long long>(r.seed), r.mode.to_string().c_str());
    out += buf;
  }
  return out;
}

/// Pixel-wise report: x, y, label, atom index and parameter / error maps.
inline std::string pixel_csv(const MatchReport& r, const Phantom& ph) {
  std::string out = "x,y,label,index,t1,t2,b1,t1_true,t2_true,e1,e2\n";
  char buf[512];
  for (std::size_t y = 0; y < r.height; ++y)
    for (std::size_t x = 0; x < r.width; ++x) {
      const std::size_t k = y * r.width + x;
      std::snprintf(buf, sizeof buf, "%zu,%zu,%d,%lld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", x, y,
                    ph.labels[k], static_cast<long long>(r.index[k]), r.t1[k], r.t2[k], r.b1[k], ph.t1_true[k],
                    ph.t2_true[k], r.e1.empty() ? 0.0 : r.e1[k], r.e2.empty() ? 0.0 : r.e2[k]);
      out += buf;
    }
  return out;
}

} // namespace mrfviz

#endif
