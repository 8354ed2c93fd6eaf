#ifndef MRFVIZ_PHANTOM_HPP
#define MRFVIZ_PHANTOM_HPP

// Tissue-labeled phantoms and noisy signal synthesis from a dictionary.

#include "config.hpp"
#include "dictionary.hpp"
#include "errors.hpp"
#include "grid.hpp"
#include "hsne/hierarchy.hpp"
#include "image.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace mrfviz {

inline constexpr int kBackground = 0;

struct TissueClass {
  int label = 0;
  std::string name;
  double t1 = 0.0; ///< ms
  double t2 = 0.0; ///< ms
};

struct TissueTable {
  std::vector<TissueClass> classes; ///< sorted by label

  const TissueClass* find(int label) const {
    for (const auto& c : classes)
      if (c.label == label) return &c;
    return nullptr;
  }
};

/// One [name] section per tissue with keys label, t1, t2.
inline TissueTable tissue_table_from_config(const Config& cfg) {
  TissueTable t;
  for (const auto& s : cfg.sections()) {
    cfg.require_keys(s, {"label", "t1", "t2"});
    TissueClass c;
    c.name = s;
    c.label = static_cast<int>(cfg.get_int(s, "label"));
    c.t1 = cfg.get_double(s, "t1");
    c.t2 = cfg.get_double(s, "t2");
    if (c.label <= kBackground || c.label > 255)
      throw ConfigError(cfg.origin() + ": [" + s + "] label must be in 1..255");
    if (!(c.t1 > 0.0) || !(c.t2 > 0.0)) throw ConfigError(cfg.origin() + ": [" + s + "] t1 and t2 must be positive");
    if (t.find(c.label)) throw ConfigError(cfg.origin() + ": duplicate label " + std::to_string(c.label));
    t.classes.push_back(c);
  }
  if (t.classes.empty()) throw ConfigError(cfg.origin() + ": no tissue classes");
  std::sort(t.classes.begin(), t.classes.end(), [](const auto& a, const auto& b) { return a.label < b.label; });
  return t;
}

inline TissueTable load_tissue_table(const std::string& path) { return tissue_table_from_config(Config::load(path)); }

inline std::string default_tissue_table_path() { return std::string(MRFVIZ_DATA_DIR) + "/tissues.ini"; }

inline TissueTable default_tissue_table() { return load_tissue_table(default_tissue_table_path()); }

/// Row-major integer label image, row 0 at the top.
struct LabelMap {
  std::size_t width = 0, height = 0;
  std::vector<int> labels;

  int at(std::size_t x, std::size_t y) const { return labels[y * width + x]; }
  friend bool operator==(const LabelMap&, const LabelMap&) = default;
};

/// Concentric disks on a width x height canvas: CSF core, GM ring, WM ring.
/// Radii are 0.15, 0.30 and 0.45 of the shorter side.
inline LabelMap builtin_labels(std::size_t width, std::size_t height) {
  if (width < 16 || height < 16) throw DomainError("phantom size must be at least 16x16");
  LabelMap m{width, height, std::vector<int>(width * height, kBackground)};
  const double cx = 0.5 * static_cast<double>(width - 1), cy = 0.5 * static_cast<double>(height - 1);
  const double s = static_cast<double>(std::min(width, height));
  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t x = 0; x < width; ++x) {
      const double r = std::hypot(static_cast<double>(x) - cx, static_cast<double>(y) - cy) / s;
      int label = kBackground;
      if (r < 0.15)
        label = 3;
      else if (r < 0.30)
        label = 2;
      else if (r < 0.45)
        label = 1;
      m.labels[y * width + x] = label;
    }
  return m;
}

/// Gray levels are taken as labels; RGB images must have equal channels.
inline LabelMap labels_from_image(const Image& img) {
  LabelMap m{img.width, img.height, std::vector<int>(img.width * img.height)};
  for (std::size_t y = 0; y < img.height; ++y)
    for (std::size_t x = 0; x < img.width; ++x) {
      const auto* p = img.px(x, y);
      for (int c = 1; c < img.channels; ++c)
        if (p[c] != p[0]) throw FormatError("label image must be gray (channels differ)");
      m.labels[y * img.width + x] = p[0];
    }
  return m;
}

inline LabelMap resize_nearest(const LabelMap& src, std::size_t width, std::size_t height) {
  if (src.width == 0 || src.height == 0) throw DomainError("empty label image");
  LabelMap out{width, height, std::vector<int>(width * height)};
  for (std::size_t y = 0; y < height; ++y) {
    const std::size_t sy = std::min(src.height - 1, (2 * y + 1) * src.height / (2 * height));
    for (std::size_t x = 0; x < width; ++x) {
      const std::size_t sx = std::min(src.width - 1, (2 * x + 1) * src.width / (2 * width));
      out.labels[y * width + x] = src.at(sx, sy);
    }
  }
  return out;
}

/// Where a tissue's table values landed on the grid.
struct SnapRecord {
  int label = 0;
  std::string name;
  double t1_table = 0.0, t2_table = 0.0;
  double t1_snapped = 0.0, t2_snapped = 0.0;
  double t1_distance() const { return std::abs(t1_snapped - t1_table); }
  double t2_distance() const { return std::abs(t2_snapped - t2_table); }
};

/// B1 field: a constant, or a per-pixel map (row-major) when `map` is non-empty.
struct B1Field {
  double constant = 1.0;
  std::vector<double> map;
};

struct Phantom {
  std::size_t width = 0, height = 0;
  std::vector<int> labels;
  std::vector<double> t1_true, t2_true, b1_true; ///< background pixels hold 0 for t1 and t2
  TissueTable table;                             ///< snapped values
  std::vector<SnapRecord> snaps;

  std::size_t pixels() const { return width * height; }
  bool is_tissue(std::size_t k) const { return labels[k] != kBackground; }
};

namespace detail {

inline std::size_t nearest_index(const std::vector<double>& axis, double v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < axis.size(); ++i)
    if (std::abs(axis[i] - v) < std::abs(axis[best] - v)) best = i;
  return best;
}

} // namespace detail

/// Snaps every tissue present in `labels` onto the nearest (t1, t2) grid atom.
inline Phantom make_phantom(const LabelMap& labels, const TissueTable& table, const ParameterGrid& grid,
                            const B1Field& b1 = {}) {
  if (labels.width < 16 || labels.height < 16) throw DomainError("phantom size must be at least 16x16");
  if (labels.labels.size() != labels.width * labels.height) throw DomainError("label map size mismatch");
  const std::size_t n = labels.labels.size();
  if (!b1.map.empty() && b1.map.size() != n) throw DomainError("b1 map size does not match the phantom");

  Phantom ph;
  ph.width = labels.width;
  ph.height = labels.height;
  ph.labels = labels.labels;
  ph.t1_true.assign(n, 0.0);
  ph.t2_true.assign(n, 0.0);
  ph.b1_true.assign(n, 0.0);

  std::vector<int> present;
  for (int l : ph.labels)
    if (l != kBackground && std::find(present.begin(), present.end(), l) == present.end()) present.push_back(l);
  std::sort(present.begin(), present.end());

  for (int l : present) {
    const auto* c = table.find(l);
    if (!c) throw DomainError("label " + std::to_string(l) + " has no tissue table entry");
    const std::size_t i1 = detail::nearest_index(grid.t1_values(), c->t1);
    const std::size_t i2 = detail::nearest_index(grid.t2_values(), c->t2);
    SnapRecord s{l, c->name, c->t1, c->t2, grid.t1_values()[i1], grid.t2_values()[i2]};
    if (!(s.t1_snapped > s.t2_snapped))
      throw DomainError("tissue '" + c->name + "' snaps to a grid cell without an atom (t1 <= t2)");
    ph.snaps.push_back(s);
    ph.table.classes.push_back({l, c->name, s.t1_snapped, s.t2_snapped});
  }

  for (std::size_t k = 0; k < n; ++k) {
    const double v = b1.map.empty() ? b1.constant : b1.map[k];
    if (!grid.b1_index(v)) throw DomainError("b1 value " + std::to_string(v) + " is not on the grid");
    ph.b1_true[k] = v;
    if (ph.labels[k] == kBackground) continue;
    const auto* c = ph.table.find(ph.labels[k]);
    ph.t1_true[k] = c->t1;
    ph.t2_true[k] = c->t2;
  }
  return ph;
}

/// Atom index of every pixel on `grid` (-1 for background); throws when a
/// tissue pixel's parameters are not a grid atom.
inline std::vector<std::int64_t> phantom_atoms(const Phantom& ph, const ParameterGrid& grid) {
  std::vector<std::int64_t> atom(ph.pixels(), -1);
  for (std::size_t k = 0; k < ph.pixels(); ++k) {
    if (!ph.is_tissue(k)) continue;
    const auto ib = grid.b1_index(ph.b1_true[k]);
    const auto i1 = grid.t1_index(ph.t1_true[k]);
    const auto i2 = grid.t2_index(ph.t2_true[k]);
    const std::int64_t a = ib && i1 && i2 ? grid.atom_at(*ib, *i1, *i2) : -1;
    if (a < 0) throw DomainError("phantom pixel " + std::to_string(k) + " is not snapped to the dictionary grid");
    atom[k] = a;
  }
  return atom;
}

/// Per-pixel signal curves, one row per pixel (row-major pixel order).
struct SignalImage {
  std::size_t width = 0, height = 0;
  RowMatrixD data;
};

/// Dictionary entry of each tissue pixel plus white Gaussian noise with
/// sigma = |entry| / (snr * sqrt(N)). Background pixels are pure noise with
/// the mean tissue sigma. snr = +inf adds no noise. Pixel k draws from its
/// own keyed stream, so results do not depend on the thread count.
inline SignalImage simulate_signals(const Phantom& ph, const Dictionary& d, double snr, std::uint64_t seed) {
  if (!(snr > 0.0)) throw DomainError("snr must be positive");
  const auto atom = phantom_atoms(ph, d.grid);
  const auto n = static_cast<Eigen::Index>(d.curve_length());
  const bool noisy = std::isfinite(snr);

  std::vector<double> sigma(ph.pixels(), 0.0);
  double sigma_sum = 0.0;
  std::size_t tissue = 0;
  for (std::size_t k = 0; k < ph.pixels(); ++k) {
    if (atom[k] < 0) continue;
    const double norm = d.entries.row(atom[k]).cast<double>().norm();
    sigma[k] = noisy ? norm / (snr * std::sqrt(static_cast<double>(n))) : 0.0;
    sigma_sum += sigma[k];
    ++tissue;
  }
  const double background_sigma = tissue > 0 ? sigma_sum / static_cast<double>(tissue) : 0.0;

  SignalImage out{ph.width, ph.height, RowMatrixD::Zero(static_cast<Eigen::Index>(ph.pixels()), n)};
  parallel_for(ph.pixels(), [&](std::size_t k) {
    auto row = out.data.row(static_cast<Eigen::Index>(k));
    if (atom[k] >= 0) row = d.entries.row(atom[k]).cast<double>();
    const double s = atom[k] >= 0 ? sigma[k] : background_sigma;
    if (!noisy || s == 0.0) return;
    auto rng = hsne::detail::keyed_rng(seed, 0x5349474eULL, k);
    std::normal_distribution<double> gauss(0.0, s);
    for (Eigen::Index j = 0; j < n; ++j) row(j) += gauss(rng);
  });
  return out;
}

} // namespace mrfviz

#endif
