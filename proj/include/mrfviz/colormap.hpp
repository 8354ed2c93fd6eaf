#ifndef MRFVIZ_COLORMAP_HPP
#define MRFVIZ_COLORMAP_HPP

// Embedding coordinates to colors, color-coded dictionary maps and scatter plots.
//
// 3D embeddings: bounding box mapped affinely onto L in [20, 90], a and b in
// [-60, 60]. 2D embeddings: bounding box mapped onto the unit square, colored
// by bilinear interpolation in Lab between four corner anchors of equal
// lightness (blue, red, yellow, green, counter-clockwise from the origin).

#include "color.hpp"
#include "errors.hpp"
#include "grid.hpp"
#include "hsne/embed.hpp"
#include "image.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

namespace mrfviz {

/// One color per embedded atom; `ids[i]` is the atom index of color i.
struct ColorAssignment {
  std::vector<std::uint32_t> ids;
  std::vector<Lab> lab; ///< before gamut clipping
  std::vector<Rgb> rgb;

  std::size_t size() const { return ids.size(); }
};

inline constexpr double kLabLMin = 20.0, kLabLMax = 90.0, kLabABRange = 60.0;

/// Corner anchors of the 2D map at (u, v) = (0,0), (1,0), (1,1), (0,1).
inline constexpr std::array<Lab, 4> kAnchors2d = {Lab{60.0, 10.0, -60.0},  // blue
                                                  Lab{60.0, 60.0, 42.0},   // red
                                                  Lab{60.0, -3.0, 60.0},   // yellow
                                                  Lab{60.0, -55.0, 35.0}}; // green

namespace detail {

/// Per-axis affine map of the bounding box of `frame` onto [0, 1], applied to
/// `e` and clamped; zero-extent axes map to 0.5.
inline std::vector<double> unit_box(const hsne::Embedding& e, const hsne::Embedding& frame) {
  if (e.dim != frame.dim) throw DomainError("color frame dimension differs from the embedding");
  const int dim = e.dim;
  std::vector<double> lo(dim, std::numeric_limits<double>::infinity()), hi(dim, -lo[0]);
  for (std::size_t i = 0; i < frame.size(); ++i)
    for (int d = 0; d < dim; ++d) {
      lo[d] = std::min(lo[d], frame.at(i, d));
      hi[d] = std::max(hi[d], frame.at(i, d));
    }
  const std::size_t n = e.size();
  std::vector<double> u(n * dim);
  for (std::size_t i = 0; i < n; ++i)
    for (int d = 0; d < dim; ++d) {
      const double ext = hi[d] - lo[d];
      u[i * dim + d] = ext > 0.0 ? std::clamp((e.at(i, d) - lo[d]) / ext, 0.0, 1.0) : 0.5;
    }
  return u;
}

inline std::vector<double> unit_box(const hsne::Embedding& e) { return unit_box(e, e); }

inline ColorAssignment finish(const hsne::Embedding& e, std::vector<Lab> lab) {
  ColorAssignment c;
  c.ids = e.ids;
  c.rgb.reserve(lab.size());
  for (const auto& l : lab) c.rgb.push_back(lab_to_srgb(l));
  c.lab = std::move(lab);
  return c;
}

} // namespace detail

inline Lab lab3_color(double u0, double u1, double u2) {
  return {kLabLMin + (kLabLMax - kLabLMin) * u0, -kLabABRange + 2.0 * kLabABRange * u1,
          -kLabABRange + 2.0 * kLabABRange * u2};
}

/// Bilinear blend of the corner anchors at (u, v) in the unit square.
inline Lab map2d_color(double u, double v) {
  const auto& a = kAnchors2d;
  const double w00 = (1 - u) * (1 - v), w10 = u * (1 - v), w11 = u * v, w01 = (1 - u) * v;
  return {w00 * a[0].l + w10 * a[1].l + w11 * a[2].l + w01 * a[3].l,
          w00 * a[0].a + w10 * a[1].a + w11 * a[2].a + w01 * a[3].a,
          w00 * a[0].b + w10 * a[1].b + w11 * a[2].b + w01 * a[3].b};
}

/// `frame` sets the bounding box (defaults to `e` itself).
inline ColorAssignment colors_lab3(const hsne::Embedding& e, const hsne::Embedding* frame = nullptr) {
  if (e.dim != 3) throw DomainError("colors_lab3 needs a 3D embedding");
  const auto u = detail::unit_box(e, frame ? *frame : e);
  std::vector<Lab> lab(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) lab[i] = lab3_color(u[3 * i], u[3 * i + 1], u[3 * i + 2]);
  return detail::finish(e, std::move(lab));
}

inline ColorAssignment colors_2d(const hsne::Embedding& e, const hsne::Embedding* frame = nullptr) {
  if (e.dim != 2) throw DomainError("colors_2d needs a 2D embedding");
  const auto u = detail::unit_box(e, frame ? *frame : e);
  std::vector<Lab> lab(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) lab[i] = map2d_color(u[2 * i], u[2 * i + 1]);
  return detail::finish(e, std::move(lab));
}

/// 3D embeddings use the Lab cube, 2D embeddings the four-corner map. A
/// `frame` (e.g. a registration reference) shares its color scale with every
/// embedding aligned to it; points outside its box are clamped.
inline ColorAssignment colorize(const hsne::Embedding& e, const hsne::Embedding* frame = nullptr) {
  return e.dim == 3 ? colors_lab3(e, frame) : colors_2d(e, frame);
}

/// One pixel per (t1, t2) cell of the slice `b1`: T1 grows left to right, T2
/// bottom to top. Cells without an atom (t1 <= t2) or without a color are white.
inline Image render_dictionary_map(const ParameterGrid& grid, const ColorAssignment& c, double b1) {
  const auto ib = grid.b1_index(b1);
  if (!ib) throw DomainError("b1 value " + std::to_string(b1) + " is not on the grid");
  std::vector<std::int64_t> color_of(grid.size(), -1);
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c.ids[i] >= grid.size()) throw DomainError("color assignment refers to an atom outside the grid");
    color_of[c.ids[i]] = static_cast<std::int64_t>(i);
  }
  const std::size_t w = grid.t1_values().size(), h = grid.t2_values().size();
  Image img(w, h, 3, 255);
  for (std::size_t i1 = 0; i1 < w; ++i1)
    for (std::size_t i2 = 0; i2 < h; ++i2) {
      const auto atom = grid.atom_at(*ib, i1, i2);
      if (atom < 0 || color_of[static_cast<std::size_t>(atom)] < 0) continue;
      img.set(i1, h - 1 - i2, c.rgb[static_cast<std::size_t>(color_of[static_cast<std::size_t>(atom)])]);
    }
  return img;
}

struct ScatterOptions {
  std::size_t size = 512;   ///< square canvas edge, pixels
  std::size_t margin = 16;  ///< pixels kept free around the points
  int marker_radius = 2;    ///< disc radius, pixels
  double azimuth = -60.0;   ///< degrees, rotation about the third axis (3D only)
  double elevation = 30.0;  ///< degrees, tilt towards the viewer (3D only)
};

/// Projects a point of `e` to (screen x, screen y, depth); 3D uses a fixed
/// orthographic view, larger depth is farther from the viewer.
inline std::array<double, 3> project(const hsne::Embedding& e, std::size_t i, const ScatterOptions& o) {
  if (e.dim == 2) return {e.at(i, 0), e.at(i, 1), 0.0};
  const double az = o.azimuth * std::numbers::pi / 180.0, el = o.elevation * std::numbers::pi / 180.0;
  const double x = e.at(i, 0), y = e.at(i, 1), z = e.at(i, 2);
  const double xr = std::cos(az) * x - std::sin(az) * y;
  const double yr = std::sin(az) * x + std::cos(az) * y;
  return {xr, std::cos(el) * z - std::sin(el) * yr, std::cos(el) * yr + std::sin(el) * z};
}

/// Colored scatter plot of an embedding on a white square canvas.
inline Image render_scatter(const hsne::Embedding& e, const ColorAssignment& c, const ScatterOptions& o = {}) {
  if (e.dim != 2 && e.dim != 3) throw DomainError("scatter plots need a 2D or 3D embedding");
  if (c.size() != e.size() || c.ids != e.ids) throw DomainError("color assignment does not match the embedding");
  if (o.size <= 2 * o.margin) throw DomainError("scatter canvas smaller than its margins");
  Image img(o.size, o.size, 3, 255);
  const std::size_t n = e.size();
  if (n == 0) return img;

  std::vector<std::array<double, 3>> p(n);
  double lo[2] = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  double hi[2] = {-lo[0], -lo[1]};
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = project(e, i, o);
    for (int d = 0; d < 2; ++d) {
      lo[d] = std::min(lo[d], p[i][d]);
      hi[d] = std::max(hi[d], p[i][d]);
    }
  }
  const double span = std::max(hi[0] - lo[0], hi[1] - lo[1]);
  const double usable = static_cast<double>(o.size - 2 * o.margin - 1);
  const double scale = span > 0.0 ? usable / span : 0.0;
  const double centre = 0.5 * static_cast<double>(o.size - 1);
  const double mid[2] = {0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])};

  // Far points first so nearer markers cover them; ties keep index order.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a][2] > p[b][2]; });

  const int r = o.marker_radius;
  for (auto i : order) {
    const long cx = std::lround(centre + (p[i][0] - mid[0]) * scale);
    const long cy = std::lround(centre - (p[i][1] - mid[1]) * scale);
    for (int dy = -r; dy <= r; ++dy)
      for (int dx = -r; dx <= r; ++dx) {
        if (dx * dx + dy * dy > r * r) continue;
        const long x = cx + dx, y = cy + dy;
        if (x < 0 || y < 0 || x >= static_cast<long>(o.size) || y >= static_cast<long>(o.size)) continue;
        img.set(static_cast<std::size_t>(x), static_cast<std::size_t>(y), c.rgb[i]);
      }
  }
  return img;
}

/// Scalar field rendered with a black-red-yellow-white ramp over [0, vmax];
/// masked-out pixels (mask == 0) are drawn mid gray.
inline Image render_scalar_map(const std::vector<double>& values, const std::vector<std::uint8_t>& mask,
                               std::size_t width, std::size_t height, double vmax) {
  if (values.size() != width * height || mask.size() != width * height)
    throw DomainError("render_scalar_map: size mismatch");
  if (!(vmax > 0.0)) throw DomainError("render_scalar_map: vmax must be positive");
  Image img(width, height, 3, 128);
  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t x = 0; x < width; ++x) {
      const std::size_t k = y * width + x;
      if (!mask[k]) continue;
      const double t = std::clamp(values[k] / vmax, 0.0, 1.0) * 3.0;
      img.set(x, y, {std::clamp(t, 0.0, 1.0), std::clamp(t - 1.0, 0.0, 1.0), std::clamp(t - 2.0, 0.0, 1.0)});
    }
  return img;
}

} // namespace mrfviz

#endif
