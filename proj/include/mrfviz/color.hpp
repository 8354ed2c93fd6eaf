#ifndef MRFVIZ_COLOR_HPP
#define MRFVIZ_COLOR_HPP

// CIE L*a*b* (D65) <-> sRGB conversions.

#include <Eigen/Core>
#include <Eigen/LU>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>

namespace mrfviz {

struct Lab {
  double l = 0.0, a = 0.0, b = 0.0;
};

/// sRGB with channels in [0, 1] (gamma encoded).
struct Rgb {
  double r = 0.0, g = 0.0, b = 0.0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

inline constexpr double kD65X = 0.95047;
inline constexpr double kD65Y = 1.0;
inline constexpr double kD65Z = 1.08883;

namespace detail {

inline double lab_f_inv(double t) {
  constexpr double d = 6.0 / 29.0;
  return t > d ? t * t * t : 3.0 * d * d * (t - 4.0 / 29.0);
}

inline double lab_f(double t) {
  constexpr double d = 6.0 / 29.0;
  return t > d * d * d ? std::cbrt(t) : t / (3.0 * d * d) + 4.0 / 29.0;
}

inline double srgb_encode(double c) { return c <= 0.0031308 ? 12.92 * c : 1.055 * std::pow(c, 1.0 / 2.4) - 0.055; }

inline double srgb_decode(double c) { return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4); }


/// XYZ (D65) to linear sRGB.
inline const Eigen::Matrix3d& xyz_to_rgb() {
  static const Eigen::Matrix3d m = (Eigen::Matrix3d() << 3.2404542, -1.5371385, -0.4985314, -0.9692660, 1.8760108,
                                    0.0415560, 0.0556434, -0.2040259, 1.0572252)
                                       .finished();
  return m;
}

/// Exact inverse of xyz_to_rgb, so conversions round-trip.
inline const Eigen::Matrix3d& rgb_to_xyz() {
  static const Eigen::Matrix3d m = xyz_to_rgb().inverse();
  return m;
}

} // namespace detail

/// Linear-light sRGB without clipping (may leave [0, 1] for out-of-gamut colors).
inline std::array<double, 3> lab_to_linear_rgb(const Lab& c) {
  const double fy = (c.l + 16.0) / 116.0;
  const Eigen::Vector3d xyz(kD65X * detail::lab_f_inv(fy + c.a / 500.0), kD65Y * detail::lab_f_inv(fy),
                            kD65Z * detail::lab_f_inv(fy - c.b / 200.0));
  const Eigen::Vector3d rgb = detail::xyz_to_rgb() * xyz;
  return {rgb(0), rgb(1), rgb(2)};
}

inline bool in_srgb_gamut(const Lab& c) {
  for (double v : lab_to_linear_rgb(c))
    if (v < 0.0 || v > 1.0) return false;
  return true;
}

/// Gamma-encoded sRGB; out-of-gamut channels are clipped to [0, 1].
inline Rgb lab_to_srgb(const Lab& c) {
  const auto lin = lab_to_linear_rgb(c);
  auto enc = [](double v) { return std::clamp(detail::srgb_encode(std::clamp(v, 0.0, 1.0)), 0.0, 1.0); };
  return {enc(lin[0]), enc(lin[1]), enc(lin[2])};
}

inline Lab srgb_to_lab(const Rgb& c) {
  const Eigen::Vector3d lin(detail::srgb_decode(c.r), detail::srgb_decode(c.g), detail::srgb_decode(c.b));
  const Eigen::Vector3d xyz = detail::rgb_to_xyz() * lin;
  const double x = xyz(0), y = xyz(1), z = xyz(2);
  const double fx = detail::lab_f(x / kD65X), fy = detail::lab_f(y / kD65Y), fz = detail::lab_f(z / kD65Z);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

/// CIE76 color difference.
inline double delta_e(const Lab& p, const Lab& q) {
  return std::sqrt((p.l - q.l) * (p.l - q.l) + (p.a - q.a) * (p.a - q.a) + (p.b - q.b) * (p.b - q.b));
}

inline std::uint8_t to_byte(double channel) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(channel, 0.0, 1.0) * 255.0));
}

} // namespace mrfviz

#endif
