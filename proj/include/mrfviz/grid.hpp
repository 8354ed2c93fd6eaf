#ifndef MRFVIZ_GRID_HPP
#define MRFVIZ_GRID_HPP

#include "errors.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace mrfviz {

/// Inclusive `start:step:stop` axis specification.
struct AxisRange {
  double start = 0.0;
  double step = 1.0;
  double stop = 0.0;

  /// Parses "start:step:stop", a single value, or a comma-separated list.
  /// Lists are returned through `values()` directly.
  static AxisRange parse(const std::string& text);

  std::vector<double> values() const {
    if (!explicit_values.empty()) return explicit_values;
    if (!(step > 0.0) || !(start <= stop) || !std::isfinite(start) || !std::isfinite(stop))
      throw DomainError("malformed axis range (need start <= stop and step > 0)");
    const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
      // Snap to 1e-9 so that decimal steps such as 0.1 yield exact-looking values.
      out[i] = std::round((start + step * static_cast<double>(i)) * 1e9) / 1e9;
    }
    return out;
  }

  std::vector<double> explicit_values;
};

inline AxisRange AxisRange::parse(const std::string& text) {
  auto to_double = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      throw DomainError("cannot parse axis value '" + s + "' in '" + text + "'");
    }
    if (s.find_first_not_of(" \t", used) != std::string::npos)
      throw DomainError("cannot parse axis value '" + s + "' in '" + text + "'");
    return v;
  };
  AxisRange r;
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(item);
    if (parts.size() != 3) throw DomainError("axis range must be start:step:stop, got '" + text + "'");
    r.start = to_double(parts[0]);
    r.step = to_double(parts[1]);
    r.stop = to_double(parts[2]);
    return r;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) r.explicit_values.push_back(to_double(item));
  if (r.explicit_values.empty()) throw DomainError("empty axis specification");
  return r;
}

struct Atom {
  double t1 = 0.0;
  double t2 = 0.0;
  double b1 = 1.0;
  friend bool operator==(const Atom&, const Atom&) = default;
};

/// (T1, T2, B1) sampling grid. Atoms keep only T1 > T2 and are ordered
/// b1-major, then t1, then t2, so every B1 slice is a contiguous block.
class ParameterGrid {
public:
  ParameterGrid() = default;

  ParameterGrid(std::vector<double> t1, std::vector<double> t2, std::vector<double> b1 = {1.0})
      : t1_(std::move(t1)), t2_(std::move(t2)), b1_(std::move(b1)) {
    check_axis(t1_, "t1");
    check_axis(t2_, "t2");
    check_axis(b1_, "b1");
    for (double v : t1_)
      if (!(v > 0)) throw DomainError("t1 axis values must be positive");
    for (double v : t2_)
      if (!(v > 0)) throw DomainError("t2 axis values must be positive");
    for (double v : b1_)
      if (!(v > 0)) throw DomainError("b1 axis values must be positive");

    cell_to_atom_.assign(b1_.size() * t1_.size() * t2_.size(), -1);
    slice_begin_.reserve(b1_.size() + 1);
    for (std::size_t ib = 0; ib < b1_.size(); ++ib) {
      slice_begin_.push_back(atoms_.size());
      for (std::size_t i1 = 0; i1 < t1_.size(); ++i1)
        for (std::size_t i2 = 0; i2 < t2_.size(); ++i2)
          if (t1_[i1] > t2_[i2]) {
            cell_to_atom_[cell(ib, i1, i2)] = static_cast<std::int64_t>(atoms_.size());
            atoms_.push_back({t1_[i1], t2_[i2], b1_[ib]});
          }
    }
    slice_begin_.push_back(atoms_.size());
  }

  const std::vector<double>& t1_values() const { return t1_; }
  const std::vector<double>& t2_values() const { return t2_; }
  const std::vector<double>& b1_values() const { return b1_; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }

  /// Atom index of cell (b1 index, t1 index, t2 index), or -1 when T1 <= T2.
  std::int64_t atom_at(std::size_t ib, std::size_t i1, std::size_t i2) const {
    return cell_to_atom_[cell(ib, i1, i2)];
  }

  std::optional<std::size_t> b1_index(double b1) const { return index_of(b1_, b1); }
  std::optional<std::size_t> t1_index(double t1) const { return index_of(t1_, t1); }
  std::optional<std::size_t> t2_index(double t2) const { return index_of(t2_, t2); }

  /// Half-open atom range [first, second) of one B1 slice.
  std::pair<std::size_t, std::size_t> b1_slice(std::size_t ib) const {
    return {slice_begin_.at(ib), slice_begin_.at(ib + 1)};
  }

  friend bool operator==(const ParameterGrid& a, const ParameterGrid& b) {
    return a.t1_ == b.t1_ && a.t2_ == b.t2_ && a.b1_ == b.b1_;
  }

private:
  static void check_axis(const std::vector<double>& v, const char* name) {
    if (v.empty()) throw DomainError(std::string("empty ") + name + " axis");
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!std::isfinite(v[i])) throw DomainError(std::string(name) + " axis has non-finite values");
      if (i > 0 && !(v[i] > v[i - 1]))
        throw DomainError(std::string(name) + " axis must be strictly increasing");
    }
  }

  static std::optional<std::size_t> index_of(const std::vector<double>& axis, double value) {
    for (std::size_t i = 0; i < axis.size(); ++i)
      if (std::abs(axis[i] - value) <= 1e-9 * std::max(1.0, std::abs(value))) return i;
    return std::nullopt;
  }

  std::size_t cell(std::size_t ib, std::size_t i1, std::size_t i2) const {
    return (ib * t1_.size() + i1) * t2_.size() + i2;
  }

  std::vector<double> t1_, t2_, b1_;
  std::vector<Atom> atoms_;
  std::vector<std::int64_t> cell_to_atom_;
  std::vector<std::size_t> slice_begin_;
};

inline ParameterGrid build_grid(const AxisRange& t1, const AxisRange& t2,
                                const AxisRange& b1 = AxisRange::parse("1.0")) {
  return ParameterGrid(t1.values(), t2.values(), b1.values());
}

} // namespace mrfviz

#endif
