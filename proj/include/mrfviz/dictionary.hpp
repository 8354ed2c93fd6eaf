#ifndef MRFVIZ_DICTIONARY_HPP
#define MRFVIZ_DICTIONARY_HPP

#include "errors.hpp"
#include "grid.hpp"
#include "parallel.hpp"
#include "signal_models.hpp"

#include <Eigen/Core>
#include <json.hpp>
#include <zlib.h>

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

namespace mrfviz {

using RowMatrixF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMatrixD = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class SequenceKind { tse, ir, epg_fisp };

inline const char* to_string(SequenceKind k) {
  switch (k) {
    case SequenceKind::tse: return "tse";
    case SequenceKind::ir: return "ir";
    case SequenceKind::epg_fisp: return "epg_fisp";
  }
  return "?";
}

inline SequenceKind sequence_kind_from_string(const std::string& s) {
  if (s == "tse") return SequenceKind::tse;
  if (s == "ir") return SequenceKind::ir;
  if (s == "epg_fisp" || s == "epg" || s == "fisp") return SequenceKind::epg_fisp;
  throw ConfigError("unknown sequence model '" + s + "'");
}

/// Everything needed to regenerate a dictionary's curves.
struct SequenceDescriptor {
  std::string name;
  SequenceKind kind = SequenceKind::epg_fisp;
  ClassicalTiming classical; ///< used by tse / ir
  SequenceSpec mrf;          ///< used by epg_fisp; b1_scale is taken per atom
  std::size_t truncation = 0; ///< 0 when the full curve is kept

  std::size_t full_length() const {
    switch (kind) {
      case SequenceKind::tse: return classical.te.size();
      case SequenceKind::ir: return classical.ti.size();
      case SequenceKind::epg_fisp: return mrf.flip_train.size();
    }
    return 0;
  }

  friend bool operator==(const SequenceDescriptor& a, const SequenceDescriptor& b) {
    return a.name == b.name && a.kind == b.kind && a.classical.tr == b.classical.tr &&
           a.classical.te == b.classical.te && a.classical.ti == b.classical.ti &&
           a.classical.n_samples == b.classical.n_samples && a.mrf.flip_train == b.mrf.flip_train &&
           a.mrf.tr == b.mrf.tr && a.mrf.te == b.mrf.te && a.mrf.inversion == b.mrf.inversion &&
           a.mrf.scale_inversion == b.mrf.scale_inversion && a.truncation == b.truncation;
  }
};

/// Simulated curves for every grid atom. `entries` keeps the raw float32
/// amplitudes; `entries_unit` holds the same rows L2-normalized in double.
/// Rows that are identically zero are marked invalid and never matched.
struct Dictionary {
  ParameterGrid grid;
  SequenceDescriptor meta;
  RowMatrixF entries;
  RowMatrixD entries_unit;
  std::vector<std::uint8_t> valid;

  std::size_t n_atoms() const { return static_cast<std::size_t>(entries.rows()); }
  std::size_t curve_length() const { return static_cast<std::size_t>(entries.cols()); }

  friend bool operator==(const Dictionary& a, const Dictionary& b) {
    return a.grid == b.grid && a.meta == b.meta && a.entries.rows() == b.entries.rows() &&
           a.entries.cols() == b.entries.cols() && a.entries == b.entries &&
           a.entries_unit == b.entries_unit && a.valid == b.valid;
  }
};

/// Recomputes entries_unit and the validity flags from entries.
inline void normalize_rows(Dictionary& d) {
  d.entries_unit.resize(d.entries.rows(), d.entries.cols());
  d.valid.assign(d.n_atoms(), 0);
  for (Eigen::Index i = 0; i < d.entries.rows(); ++i) {
    const Eigen::RowVectorXd row = d.entries.row(i).cast<double>();
    const double norm = row.norm();
    if (norm > 0.0 && std::isfinite(norm)) {
      d.entries_unit.row(i) = row / norm;
      d.valid[static_cast<std::size_t>(i)] = 1;
    } else {
      d.entries_unit.row(i).setZero();
    }
  }
}

/// Curve of a single atom for the given sequence (full length).
inline SignalCurve simulate_atom(const SequenceDescriptor& seq, const Atom& atom) {
  const TissueParams p{atom.t1, atom.t2, 1.0};
  switch (seq.kind) {
    case SequenceKind::tse: return tse_signal(p, seq.classical);
    case SequenceKind::ir: return ir_signal(p, seq.classical);
    case SequenceKind::epg_fisp: {
      SequenceSpec s = seq.mrf;
      s.b1_scale = atom.b1;
      return epg_fisp(p, s);
    }
  }
  throw DomainError("unknown sequence kind");
}

inline Dictionary build_dictionary(const ParameterGrid& grid, SequenceDescriptor seq) {
  const std::size_t full = seq.full_length();
  if (full == 0) throw DomainError("sequence produces empty curves");
  const std::size_t length = seq.truncation == 0 ? full : seq.truncation;
  if (length > full) throw DomainError("truncation exceeds the sequence length");

  Dictionary d;
  d.grid = grid;
  d.meta = std::move(seq);
  d.entries.resize(static_cast<Eigen::Index>(grid.size()), static_cast<Eigen::Index>(length));
  const auto& atoms = grid.atoms();
  parallel_for(atoms.size(), [&](std::size_t i) {
    SignalCurve c;
    try {
      c = simulate_atom(d.meta, atoms[i]);
    } catch (const DomainError& e) {
      std::ostringstream os;
      os << e.what() << " [atom " << i << ": t1=" << atoms[i].t1 << " t2=" << atoms[i].t2
         << " b1=" << atoms[i].b1 << "]";
      throw DomainError(os.str());
    }
    for (std::size_t j = 0; j < length; ++j)
      d.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = static_cast<float>(c[j]);
  });
  normalize_rows(d);
  return d;
}

/// Keeps the first `length` samples of every curve.
inline Dictionary truncate(const Dictionary& d, std::size_t length) {
  if (length < 1 || length > d.curve_length())
    throw DomainError("truncation length " + std::to_string(length) + " outside [1, " +
                      std::to_string(d.curve_length()) + "]");
  Dictionary out;
  out.grid = d.grid;
  out.meta = d.meta;
  out.meta.truncation = length == d.meta.full_length() ? 0 : length;
  out.entries = d.entries.leftCols(static_cast<Eigen::Index>(length));
  normalize_rows(out);
  return out;
}

/// Rows belonging to one B1 value, as a standalone dictionary.
inline Dictionary b1_subdictionary(const Dictionary& d, double b1) {
  const auto ib = d.grid.b1_index(b1);
  if (!ib) throw DomainError("b1 value not present in the dictionary grid");
  const auto [lo, hi] = d.grid.b1_slice(*ib);
  Dictionary out;
  out.grid = ParameterGrid(d.grid.t1_values(), d.grid.t2_values(), {d.grid.b1_values()[*ib]});
  out.meta = d.meta;
  out.entries = d.entries.middleRows(static_cast<Eigen::Index>(lo), static_cast<Eigen::Index>(hi - lo));
  normalize_rows(out);
  return out;
}

// ---------------------------------------------------------------------------
// .mrfd persistence
//
//   "MRFD" | u32 version | u32 meta_len | meta JSON (meta_len bytes)
//   | float32[n_atoms * curve_length] row-major | u32 CRC32 of all previous bytes
//
// All integers and floats little-endian.

inline constexpr std::uint32_t kMrfdVersion = 1;

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

inline std::uint32_t get_u32(const std::string& in, std::size_t pos) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  return v;
}

inline std::uint32_t crc32_of(const char* data, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  while (n > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(data), chunk);
    data += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failure on " + path);
  return bytes;
}

inline void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failure on " + path);
}

} // namespace detail

inline nlohmann::json descriptor_to_json(const SequenceDescriptor& s) {
  nlohmann::json j;
  j["name"] = s.name;
  j["kind"] = to_string(s.kind);
  j["truncation"] = s.truncation;
  if (s.kind == SequenceKind::epg_fisp) {
    j["flip_train"] = s.mrf.flip_train;
    j["tr"] = s.mrf.tr;
    j["te"] = s.mrf.te;
    j["inversion"] = s.mrf.inversion;
    j["scale_inversion"] = s.mrf.scale_inversion;
  } else {
    j["tr"] = s.classical.tr;
    j["te"] = s.classical.te;
    j["ti"] = s.classical.ti;
    j["n_samples"] = s.classical.n_samples;
  }
  return j;
}

inline SequenceDescriptor descriptor_from_json(const nlohmann::json& j) {
  SequenceDescriptor s;
  s.name = j.at("name").get<std::string>();
  s.kind = sequence_kind_from_string(j.at("kind").get<std::string>());
  s.truncation = j.at("truncation").get<std::size_t>();
  if (s.kind == SequenceKind::epg_fisp) {
    s.mrf.flip_train = j.at("flip_train").get<std::vector<double>>();
    s.mrf.tr = j.at("tr").get<double>();
    s.mrf.te = j.at("te").get<double>();
    s.mrf.inversion = j.at("inversion").get<bool>();
    s.mrf.scale_inversion = j.at("scale_inversion").get<bool>();
  } else {
    s.classical.tr = j.at("tr").get<double>();
    s.classical.te = j.at("te").get<std::vector<double>>();
    s.classical.ti = j.at("ti").get<std::vector<double>>();
    s.classical.n_samples = j.at("n_samples").get<std::size_t>();
  }
  return s;
}

inline std::string serialize(const Dictionary& d) {
  nlohmann::json meta;
  meta["n_atoms"] = d.n_atoms();
  meta["curve_length"] = d.curve_length();
  meta["grid"] = {{"t1", d.grid.t1_values()}, {"t2", d.grid.t2_values()}, {"b1", d.grid.b1_values()}};
  meta["sequence"] = descriptor_to_json(d.meta);
  const std::string meta_text = meta.dump();

  std::string out;
  out.reserve(16 + meta_text.size() + 4 * d.entries.size());
  out += "MRFD";
  detail::put_u32(out, kMrfdVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(meta_text.size()));
  out += meta_text;
  for (Eigen::Index i = 0; i < d.entries.rows(); ++i)
    for (Eigen::Index j = 0; j < d.entries.cols(); ++j)
      detail::put_u32(out, std::bit_cast<std::uint32_t>(d.entries(i, j)));
  detail::put_u32(out, detail::crc32_of(out.data(), out.size()));
  return out;
}

inline Dictionary deserialize(const std::string& bytes) {
  if (bytes.size() < 16 || bytes.compare(0, 4, "MRFD") != 0) throw FormatError("not an .mrfd file (bad magic)");
  const std::uint32_t version = detail::get_u32(bytes, 4);
  if (version != kMrfdVersion)
    throw FormatError("unsupported .mrfd version " + std::to_string(version));
  const std::uint32_t stored_crc = detail::get_u32(bytes, bytes.size() - 4);
  if (stored_crc != detail::crc32_of(bytes.data(), bytes.size() - 4))
    throw FormatError(".mrfd checksum mismatch");

  const std::size_t meta_len = detail::get_u32(bytes, 8);
  if (12 + meta_len + 4 > bytes.size()) throw FormatError(".mrfd metadata block truncated");
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(bytes.substr(12, meta_len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string(".mrfd metadata is not valid JSON: ") + e.what());
  }

  Dictionary d;
  std::size_t n_atoms = 0, length = 0;
  try {
    n_atoms = meta.at("n_atoms").get<std::size_t>();
    length = meta.at("curve_length").get<std::size_t>();
    const auto& g = meta.at("grid");
    d.grid = ParameterGrid(g.at("t1").get<std::vector<double>>(), g.at("t2").get<std::vector<double>>(),
                           g.at("b1").get<std::vector<double>>());
    d.meta = descriptor_from_json(meta.at("sequence"));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string(".mrfd metadata incomplete: ") + e.what());
  }
  if (d.grid.size() != n_atoms) throw FormatError(".mrfd header atom count disagrees with grid");
  const std::size_t payload = bytes.size() - 12 - meta_len - 4;
  if (payload != 4 * n_atoms * length) throw FormatError(".mrfd payload size disagrees with header");

  d.entries.resize(static_cast<Eigen::Index>(n_atoms), static_cast<Eigen::Index>(length));
  std::size_t pos = 12 + meta_len;
  for (Eigen::Index i = 0; i < d.entries.rows(); ++i)
    for (Eigen::Index j = 0; j < d.entries.cols(); ++j, pos += 4)
      d.entries(i, j) = std::bit_cast<float>(detail::get_u32(bytes, pos));
  normalize_rows(d);
  return d;
}

inline void save(const Dictionary& d, const std::string& path) { detail::write_file(path, serialize(d)); }

inline Dictionary load(const std::string& path) { return deserialize(detail::read_file(path)); }

/// One row per atom: t1,t2,b1,s0,s1,...
inline void export_csv(const Dictionary& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "t1,t2,b1";
  for (std::size_t j = 0; j < d.curve_length(); ++j) out << ",s" << j;
  out << '\n';
  char buf[32];
  for (std::size_t i = 0; i < d.n_atoms(); ++i) {
    const auto& a = d.grid.atoms()[i];
    std::snprintf(buf, sizeof buf, "%.17g,", a.t1);
    out << buf;
    std::snprintf(buf, sizeof buf, "%.17g,", a.t2);
    out << buf;
    std::snprintf(buf, sizeof buf, "%.17g", a.b1);
    out << buf;
    for (std::size_t j = 0; j < d.curve_length(); ++j) {
      std::snprintf(buf, sizeof buf, ",%.9g",
                    static_cast<double>(d.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))));
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError("write failure on " + path);
}

} // namespace mrfviz

#endif
