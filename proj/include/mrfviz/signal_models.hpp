#ifndef MRFVIZ_SIGNAL_MODELS_HPP
#define MRFVIZ_SIGNAL_MODELS_HPP

// Closed-form TSE / inversion-recovery signal curves and an extended phase
// graph (EPG) simulator for unbalanced FISP flip-angle trains.
//
// Units: times in ms, flip angles in degrees, signals dimensionless.

#include "errors.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace mrfviz {

struct TissueParams {
  double t1 = 1000.0;
  double t2 = 100.0;
  double m0 = 1.0;

  void validate() const {
    if (!(t1 > 0.0) || !(t2 > 0.0)) {
      std::ostringstream os;
      os << "relaxation times must be positive (t1=" << t1 << ", t2=" << t2 << ")";
      throw DomainError(os.str());
    }
    if (!(m0 > 0.0)) throw DomainError("m0 must be positive");
  }
};

using SignalCurve = std::vector<double>;

/// Uniformly spaced samples over [lo, hi], both ends included.
inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  const double step = (hi - lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) out[i] = lo + step * static_cast<double>(i);
  out[n - 1] = hi;
  return out;
}

/// Timing of a classical (closed-form) sequence. For TSE `te` holds the
/// echo train; for IR `te` is a single readout time and `ti` the inversion times.
struct ClassicalTiming {
  double tr = 0.0;
  std::vector<double> te;
  std::vector<double> ti;
  std::size_t n_samples = 1000;

  static ClassicalTiming tse(double tr, double te_min, double te_max, std::size_t n = 1000) {
    return ClassicalTiming{tr, linspace(te_min, te_max, n), {}, n};
  }
  static ClassicalTiming ir(double tr, double te, double ti_max, std::size_t n = 1000) {
    return ClassicalTiming{tr, {te}, linspace(0.0, ti_max, n), n};
  }
};

namespace detail {

inline void require_increasing(const std::vector<double>& v, const char* what) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] >= 0.0) || !std::isfinite(v[i]))
      throw DomainError(std::string(what) + " values must be finite and non-negative");
    if (i > 0 && !(v[i] > v[i - 1]))
      throw DomainError(std::string(what) + " values must be strictly increasing");
  }
}

} // namespace detail

/// S(TE) = M0 (1 - exp(-TR/T1)) exp(-TE/T2), one sample per echo time.
inline SignalCurve tse_signal(const TissueParams& p, const ClassicalTiming& t) {
  p.validate();
  if (t.te.empty()) throw DomainError("tse_signal: echo-time vector is empty");
  if (!(t.tr >= 0.0)) throw DomainError("tse_signal: negative TR");
  detail::require_increasing(t.te, "TE");
  const double recovery = p.m0 * (1.0 - std::exp(-t.tr / p.t1));
  SignalCurve s(t.te.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = recovery * std::exp(-t.te[i] / p.t2);
  return s;
}

/// S(TI) = M0 (1 - 2 exp(-TI/T1) + exp(-TR/T1)) exp(-TE/T2), one sample per inversion time.
inline SignalCurve ir_signal(const TissueParams& p, const ClassicalTiming& t) {
  p.validate();
  if (t.ti.empty()) throw DomainError("ir_signal: inversion-time vector is empty");
  if (t.te.size() != 1) throw DomainError("ir_signal: expects exactly one echo time");
  if (!(t.tr >= 0.0) || !(t.te[0] >= 0.0)) throw DomainError("ir_signal: negative TR/TE");
  detail::require_increasing(t.ti, "TI");
  const double e_tr = std::exp(-t.tr / p.t1);
  const double decay = p.m0 * std::exp(-t.te[0] / p.t2);
  SignalCurve s(t.ti.size());
  for (std::size_t i = 0; i < s.size(); ++i)
    s[i] = (1.0 - 2.0 * std::exp(-t.ti[i] / p.t1) + e_tr) * decay;
  return s;
}

/// One MRF acquisition: a flip-angle train played at constant TR.
struct SequenceSpec {
  std::vector<double> flip_train; ///< nominal angles, degrees
  double tr = 15.0;
  double te = 7.5; ///< echo sampling offset within TR
  bool inversion = true;
  double b1_scale = 1.0;
  /// The leading 180 degree pulse is subject to b1_scale like every other pulse.
  bool scale_inversion = true;

  void validate() const {
    if (flip_train.empty()) throw DomainError("flip train is empty");
    for (double a : flip_train)
      if (!(a >= 0.0 && a <= 180.0)) throw DomainError("flip angles must lie in [0, 180] degrees");
    if (!(te >= 0.0) || !(tr > te)) throw DomainError("timing requires tr > te >= 0");
    if (!(b1_scale > 0.0 && b1_scale <= 2.0)) throw DomainError("b1_scale must lie in (0, 2]");
  }
};

/// Configuration-state amplitudes for dephasing orders 0..max_order.
/// `f_minus[0]` mirrors conj(f_plus[0]) and is kept in sync by every operator.
struct EpgState {
  std::vector<std::complex<double>> f_plus;
  std::vector<std::complex<double>> f_minus;
  std::vector<std::complex<double>> z;
  std::size_t max_order = 0;

  static EpgState equilibrium(std::size_t max_order, double m0 = 1.0) {
    EpgState s;
    s.max_order = max_order;
    s.f_plus.assign(max_order + 1, 0.0);
    s.f_minus.assign(max_order + 1, 0.0);
    s.z.assign(max_order + 1, 0.0);
    s.z[0] = m0;
    return s;
  }
};

inline double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }

/// Ideal on-resonance RF pulse about the x axis: mixes (F_k, F*_-k, Z_k) for every order.
inline EpgState epg_rf_rotation(EpgState state, double alpha_deg) {
  using namespace std::complex_literals;
  const double a = deg2rad(alpha_deg);
  const double c2 = std::cos(a / 2) * std::cos(a / 2);
  const double s2 = std::sin(a / 2) * std::sin(a / 2);
  const double sa = std::sin(a);
  const double ca = std::cos(a);
  for (std::size_t k = 0; k <= state.max_order; ++k) {
    const auto fp = state.f_plus[k];
    const auto fm = state.f_minus[k];
    const auto zz = state.z[k];
    state.f_plus[k] = c2 * fp + s2 * fm - 1.0i * sa * zz;
    state.f_minus[k] = s2 * fp + c2 * fm + 1.0i * sa * zz;
    state.z[k] = -0.5i * sa * fp + 0.5i * sa * fm + ca * zz;
  }
  state.f_minus[0] = std::conj(state.f_plus[0]);
  return state;
}

/// Relaxation over `tr` followed by one unbalanced-gradient dephasing step.
/// Configurations pushed past max_order are dropped.
inline EpgState epg_relax_shift(EpgState state, double tr, const TissueParams& p) {
  const double e1 = std::exp(-tr / p.t1);
  const double e2 = std::exp(-tr / p.t2);
  const std::size_t n = state.max_order;
  for (std::size_t k = 0; k <= n; ++k) {
    state.f_plus[k] *= e2;
    state.f_minus[k] *= e2;
    state.z[k] *= e1;
  }
  state.z[0] += p.m0 * (1.0 - e1);

  if (n == 0) {
    state.f_plus[0] = 0.0;
    state.f_minus[0] = 0.0;
    return state;
  }
  const auto refocused = std::conj(state.f_minus[1]);
  for (std::size_t k = n; k >= 1; --k) state.f_plus[k] = state.f_plus[k - 1];
  state.f_plus[0] = refocused;
  for (std::size_t k = 1; k < n; ++k) state.f_minus[k] = state.f_minus[k + 1];
  state.f_minus[n] = 0.0;
  state.f_minus[0] = std::conj(state.f_plus[0]);
  return state;
}

/// Truncation bound used by epg_fisp when none is given.
inline std::size_t default_max_order(std::size_t n_pulses) {
  return std::min<std::size_t>(n_pulses + 1, 256);
}

/// FISP signal evolution, one magnitude sample per pulse of the train.
///
/// Sequence of events: optional inversion pulse (scaled by b1 unless
/// `scale_inversion` is false) and one TR of relaxation; then for every
/// pulse: RF rotation by b1*alpha, readout of |F0| decayed to TE, relaxation
/// over TR and a one-order dephasing shift.
///
/// All pulses share RF phase 0, so F states stay purely imaginary and Z
/// states real. The loop below exploits that and runs in real arithmetic;
/// it is equivalent to composing epg_rf_rotation and epg_relax_shift.
inline SignalCurve epg_fisp(const TissueParams& p, const SequenceSpec& s,
                            std::optional<std::size_t> max_order = std::nullopt) {
  p.validate();
  s.validate();
  const std::size_t n_pulses = s.flip_train.size();
  const std::size_t order = max_order.value_or(default_max_order(n_pulses));

  // F+_k = i*u[k], F-_k = i*v[k], Z_k = z[k].
  std::vector<double> u(order + 2, 0.0), v(order + 2, 0.0), z(order + 2, 0.0);
  z[0] = p.m0;
  std::size_t top = 0; // highest order that may be non-zero

  const double e1 = std::exp(-s.tr / p.t1);
  const double e2 = std::exp(-s.tr / p.t2);
  const double echo_decay = std::exp(-s.te / p.t2);
  const double regrowth = p.m0 * (1.0 - e1);

  auto rf = [&](double alpha_deg) {
    const double a = deg2rad(alpha_deg);
    const double c2 = std::cos(a / 2) * std::cos(a / 2);
    const double s2 = std::sin(a / 2) * std::sin(a / 2);
    const double sa = std::sin(a);
    const double ca = std::cos(a);
    for (std::size_t k = 0; k <= top; ++k) {
      const double uu = u[k], vv = v[k], zz = z[k];
      u[k] = c2 * uu + s2 * vv - sa * zz;
      v[k] = s2 * uu + c2 * vv + sa * zz;
      z[k] = 0.5 * sa * (uu - vv) + ca * zz;
    }
  };

  auto relax_shift = [&]() {
    for (std::size_t k = 0; k <= top; ++k) {
      u[k] *= e2;
      v[k] *= e2;
      z[k] *= e1;
    }
    z[0] += regrowth;
    if (order == 0) {
      u[0] = v[0] = 0.0;
      return;
    }
    const std::size_t new_top = std::min(top + 1, order);
    const double refocused = -v[1];
    for (std::size_t k = new_top; k >= 1; --k) u[k] = u[k - 1];
    u[0] = refocused;
    for (std::size_t k = 0; k < new_top; ++k) v[k] = v[k + 1];
    v[new_top] = 0.0;
    v[0] = -u[0];
    top = new_top;
  };

  if (s.inversion) {
    rf(s.scale_inversion ? 180.0 * s.b1_scale : 180.0);
    relax_shift();
  }

  SignalCurve out(n_pulses);
  for (std::size_t n = 0; n < n_pulses; ++n) {
    rf(s.flip_train[n] * s.b1_scale);
    out[n] = std::abs(u[0]) * echo_decay;
    relax_shift();
  }
  return out;
}

/// Reads a flip-angle train: one angle (degrees) per line, `#` starts a comment.
inline std::vector<double> load_flip_train(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open flip-angle file: " + path);
  std::vector<double> angles;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream is(line);
    double a = 0.0;
    if (!(is >> a)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      throw FormatError(path + ":" + std::to_string(lineno) + ": not a number");
    }
    std::string rest;
    if (is >> rest) throw FormatError(path + ":" + std::to_string(lineno) + ": trailing text");
    angles.push_back(a);
  }
  if (angles.empty()) throw FormatError("flip-angle file has no entries: " + path);
  return angles;
}

} // namespace mrfviz

#endif
