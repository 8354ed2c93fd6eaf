#ifndef MRFVIZ_RUN_CONFIG_HPP
#define MRFVIZ_RUN_CONFIG_HPP

// Pipeline configuration: a closed set of sectioned keys with defaults, and its
// canonical text form (every key written out, so a run can be replayed from it).

#include "colormap.hpp"
#include "config.hpp"
#include "dictionary.hpp"
#include "embedding.hpp"
#include "errors.hpp"
#include "grid.hpp"
#include "matching.hpp"
#include "phantom.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace mrfviz {

struct RunConfig {
  std::string name = "run";

  // [sequence]
  SequenceKind model = SequenceKind::epg_fisp;
  std::string flip_train = "jiang1000.txt"; ///< relative names resolve against the data flip directory
  double tr = 15.0;
  double te = 7.5;
  bool inversion = true;
  bool scale_inversion = true;
  double te_min = 10.0, te_max = 1000.0; ///< tse
  double ti_max = 3000.0;                ///< ir
  std::size_t samples = 1000;            ///< tse / ir
  std::size_t length = 0;                ///< 0 keeps full curves

  // [grid]
  std::string t1 = "20:30:5000";
  std::string t2 = "10:10:1000";
  std::string b1 = "1.0";

  // [embed]
  hsne::EmbedOptions embed;
  EmbedInput input = EmbedInput::unit;

  // [register]
  std::string reference; ///< reference embedding CSV, empty for none

  // [render]
  std::size_t render_scale = 4;
  ScatterOptions scatter;

  // [phantom]
  std::string phantom_source = "builtin";
  std::size_t phantom_width = 256, phantom_height = 256;
  std::string tissues; ///< empty: bundled table
  double phantom_b1 = 1.0;
  std::string b1_map; ///< text file of width*height values, row-major; empty: constant

  // [simulate]
  double snr = 1.0;
  std::vector<std::uint64_t> seeds = {1};
  MatchMode mode;

  SequenceDescriptor descriptor() const {
    SequenceDescriptor s;
    s.name = name;
    s.kind = model;
    switch (model) {
      case SequenceKind::tse: s.classical = ClassicalTiming::tse(tr, te_min, te_max, samples); break;
      case SequenceKind::ir: s.classical = ClassicalTiming::ir(tr, te, ti_max, samples); break;
      case SequenceKind::epg_fisp:
        s.mrf.flip_train = load_flip_train(flip_train_path());
        s.mrf.tr = tr;
        s.mrf.te = te;
        s.mrf.inversion = inversion;
        s.mrf.scale_inversion = scale_inversion;
        break;
    }
    return s;
  }

  std::string flip_train_path() const {
    const std::filesystem::path p(flip_train);
    return p.is_absolute() ? flip_train : std::string(MRFVIZ_DATA_DIR) + "/flip/" + flip_train;
  }

  ParameterGrid grid() const {
    return build_grid(AxisRange::parse(t1), AxisRange::parse(t2), AxisRange::parse(b1));
  }

  TissueTable tissue_table() const { return tissues.empty() ? default_tissue_table() : load_tissue_table(tissues); }
};

namespace detail {

inline std::string fmt_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string fmt_bool(bool v) { return v ? "true" : "false"; }

/// "1:10" (inclusive range), "3" or "1,4,9".
inline std::vector<std::uint64_t> parse_seeds(const std::string& s) {
  std::vector<std::uint64_t> out;
  auto num = [&](const std::string& t) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(t, &used);
      if (used != t.size() || t.empty() || t[0] == '-') throw std::invalid_argument(t);
      return static_cast<std::uint64_t>(v);
    } catch (const std::logic_error&) {
      throw ConfigError("malformed seed list '" + s + "'");
    }
  };
  const auto colon = s.find(':');
  if (colon != std::string::npos) {
    const auto a = num(s.substr(0, colon)), b = num(s.substr(colon + 1));
    if (b < a || b - a > 100000) throw ConfigError("malformed seed range '" + s + "'");
    for (auto v = a; v <= b; ++v) out.push_back(v);
    return out;
  }
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(num(item));
  if (out.empty()) throw ConfigError("empty seed list");
  return out;
}

inline std::string format_seeds(const std::vector<std::uint64_t>& seeds) {
  bool contiguous = seeds.size() > 1;
  for (std::size_t i = 1; i < seeds.size(); ++i) contiguous = contiguous && seeds[i] == seeds[i - 1] + 1;
  if (contiguous) return std::to_string(seeds.front()) + ":" + std::to_string(seeds.back());
  std::string out;
  for (auto s : seeds) out += (out.empty() ? "" : ",") + std::to_string(s);
  return out;
}

inline double parse_snr(const Config& c) {
  if (!c.has("simulate", "snr")) return 1.0;
  const auto v = c.get("simulate", "snr");
  if (v == "inf" || v == "infinity") return std::numeric_limits<double>::infinity();
  const double snr = c.get_double("simulate", "snr");
  if (!(snr > 0.0)) throw ConfigError("[simulate] snr must be positive");
  return snr;
}

inline std::size_t get_count(const Config& c, const std::string& s, const std::string& k, std::size_t fallback,
                             std::size_t min = 0) {
  const auto v = c.get_int(s, k, static_cast<std::int64_t>(fallback));
  if (v < static_cast<std::int64_t>(min))
    throw ConfigError(c.origin() + ": [" + s + "] " + k + " must be at least " + std::to_string(min));
  return static_cast<std::size_t>(v);
}

} // namespace detail

/// Validates `c` against the closed key set and fills defaults. Model-dependent
/// defaults: tr/te and embedding dimension/neighborhood follow the sequence model.
inline RunConfig run_config_from(const Config& c) {
  c.require_sections({"run", "sequence", "grid", "embed", "register", "render", "phantom", "simulate"});
  c.require_keys("run", {"name"});
  c.require_keys("grid", {"t1", "t2", "b1"});
  c.require_keys("embed", {"dim", "neighbors", "perplexity", "levels", "iterations", "exaggeration_iterations",
                           "exaggeration", "learning_rate", "theta", "exact_threshold", "seed", "input",
                           "selection_walks", "influence_walks", "walk_length", "landmark_threshold"});
  c.require_keys("register", {"reference"});
  c.require_keys("render", {"scale", "scatter_size", "margin", "marker_radius", "azimuth", "elevation"});
  c.require_keys("phantom", {"source", "width", "height", "tissues", "b1", "b1_map"});
  c.require_keys("simulate", {"snr", "seeds", "mode"});

  RunConfig r;
  r.name = c.get("run", "name", r.name);
  r.model = sequence_kind_from_string(c.get("sequence", "model", "epg_fisp"));
  switch (r.model) {
    case SequenceKind::epg_fisp:
      c.require_keys("sequence", {"model", "flip_train", "tr", "te", "inversion", "scale_inversion", "length"});
      r.flip_train = c.get("sequence", "flip_train", r.flip_train);
      r.tr = c.get_double("sequence", "tr", 15.0);
      r.te = c.get_double("sequence", "te", 7.5);
      r.inversion = c.get_bool("sequence", "inversion", true);
      r.scale_inversion = c.get_bool("sequence", "scale_inversion", true);
      break;
    case SequenceKind::tse:
      c.require_keys("sequence", {"model", "tr", "te_min", "te_max", "samples", "length"});
      r.tr = c.get_double("sequence", "tr", 1500.0);
      r.te_min = c.get_double("sequence", "te_min", 10.0);
      r.te_max = c.get_double("sequence", "te_max", 1000.0);
      r.samples = detail::get_count(c, "sequence", "samples", 1000, 1);
      break;
    case SequenceKind::ir:
      c.require_keys("sequence", {"model", "tr", "te", "ti_max", "samples", "length"});
      r.tr = c.get_double("sequence", "tr", 2500.0);
      r.te = c.get_double("sequence", "te", 2.0);
      r.ti_max = c.get_double("sequence", "ti_max", 3000.0);
      r.samples = detail::get_count(c, "sequence", "samples", 1000, 1);
      break;
  }
  r.length = detail::get_count(c, "sequence", "length", 0);

  r.t1 = c.get("grid", "t1", r.t1);
  r.t2 = c.get("grid", "t2", r.t2);
  r.b1 = c.get("grid", "b1", r.b1);

  const bool mrf = r.model == SequenceKind::epg_fisp;
  auto& e = r.embed;
  e.dim = static_cast<int>(c.get_int("embed", "dim", mrf ? 3 : 2));
  if (e.dim != 2 && e.dim != 3) throw ConfigError("[embed] dim must be 2 or 3");
  e.neighbors = detail::get_count(c, "embed", "neighbors", mrf ? 1000 : 3000, 1);
  e.perplexity = c.get_double("embed", "perplexity", 0.0);
  e.levels = static_cast<int>(c.get_int("embed", "levels", 2));
  if (e.levels < 1 || e.levels > 3) throw ConfigError("[embed] levels must be 1, 2 or 3");
  e.iterations = static_cast<int>(c.get_int("embed", "iterations", 100000));
  if (e.iterations < 250) throw ConfigError("[embed] iterations must be at least 250");
  e.exaggeration_iterations = static_cast<int>(c.get_int("embed", "exaggeration_iterations", 200));
  e.exaggeration = c.get_double("embed", "exaggeration", 1.5);
  e.learning_rate = c.get_double("embed", "learning_rate", 200.0);
  e.theta = c.get_double("embed", "theta", 0.5);
  e.exact_threshold = detail::get_count(c, "embed", "exact_threshold", 20000);
  e.seed = static_cast<std::uint64_t>(c.get_int("embed", "seed", 1));
  e.landmarks.selection_walks = static_cast<int>(c.get_int("embed", "selection_walks", 10));
  e.landmarks.influence_walks = static_cast<int>(c.get_int("embed", "influence_walks", 100));
  e.landmarks.walk_length = static_cast<int>(c.get_int("embed", "walk_length", 50));
  e.landmarks.threshold = c.get_double("embed", "landmark_threshold", 1.5);
  r.input = embed_input_from_string(c.get("embed", "input", "unit"));

  r.reference = c.get("register", "reference", "");

  r.render_scale = detail::get_count(c, "render", "scale", 4, 1);
  r.scatter.size = detail::get_count(c, "render", "scatter_size", 512, 16);
  r.scatter.margin = detail::get_count(c, "render", "margin", 16);
  r.scatter.marker_radius = static_cast<int>(detail::get_count(c, "render", "marker_radius", 2));
  r.scatter.azimuth = c.get_double("render", "azimuth", -60.0);
  r.scatter.elevation = c.get_double("render", "elevation", 30.0);

  r.phantom_source = c.get("phantom", "source", "builtin");
  r.phantom_width = detail::get_count(c, "phantom", "width", 256, 16);
  r.phantom_height = detail::get_count(c, "phantom", "height", 256, 16);
  r.tissues = c.get("phantom", "tissues", "");
  r.phantom_b1 = c.get_double("phantom", "b1", 1.0);
  r.b1_map = c.get("phantom", "b1_map", "");

  r.snr = detail::parse_snr(c);
  r.seeds = detail::parse_seeds(c.get("simulate", "seeds", "1"));
  r.mode = MatchMode::parse(c.get("simulate", "mode", "joint"));
  return r;
}

/// Every key, defaults included; parsing the result gives back `r`.
inline Config to_config(const RunConfig& r) {
  using detail::fmt_bool;
  using detail::fmt_double;
  Config c;
  c.set("run", "name", r.name);
  c.set("sequence", "model", to_string(r.model));
  switch (r.model) {
    case SequenceKind::epg_fisp:
      c.set("sequence", "flip_train", r.flip_train);
      c.set("sequence", "tr", fmt_double(r.tr));
      c.set("sequence", "te", fmt_double(r.te));
      c.set("sequence", "inversion", fmt_bool(r.inversion));
      c.set("sequence", "scale_inversion", fmt_bool(r.scale_inversion));
      break;
    case SequenceKind::tse:
      c.set("sequence", "tr", fmt_double(r.tr));
      c.set("sequence", "te_min", fmt_double(r.te_min));
      c.set("sequence", "te_max", fmt_double(r.te_max));
      c.set("sequence", "samples", std::to_string(r.samples));
      break;
    case SequenceKind::ir:
      c.set("sequence", "tr", fmt_double(r.tr));
      c.set("sequence", "te", fmt_double(r.te));
      c.set("sequence", "ti_max", fmt_double(r.ti_max));
      c.set("sequence", "samples", std::to_string(r.samples));
      break;
  }
  c.set("sequence", "length", std::to_string(r.length));
  c.set("grid", "t1", r.t1);
  c.set("grid", "t2", r.t2);
  c.set("grid", "b1", r.b1);
  const auto& e = r.embed;
  c.set("embed", "dim", std::to_string(e.dim));
  c.set("embed", "neighbors", std::to_string(e.neighbors));
  c.set("embed", "perplexity", fmt_double(e.perplexity));
  c.set("embed", "levels", std::to_string(e.levels));
  c.set("embed", "iterations", std::to_string(e.iterations));
  c.set("embed", "exaggeration_iterations", std::to_string(e.exaggeration_iterations));
  c.set("embed", "exaggeration", fmt_double(e.exaggeration));
  c.set("embed", "learning_rate", fmt_double(e.learning_rate));
  c.set("embed", "theta", fmt_double(e.theta));
  c.set("embed", "exact_threshold", std::to_string(e.exact_threshold));
  c.set("embed", "seed", std::to_string(e.seed));
  c.set("embed", "input", to_string(r.input));
  c.set("embed", "selection_walks", std::to_string(e.landmarks.selection_walks));
  c.set("embed", "influence_walks", std::to_string(e.landmarks.influence_walks));
  c.set("embed", "walk_length", std::to_string(e.landmarks.walk_length));
  c.set("embed", "landmark_threshold", fmt_double(e.landmarks.threshold));
  c.set("register", "reference", r.reference);
  c.set("render", "scale", std::to_string(r.render_scale));
  c.set("render", "scatter_size", std::to_string(r.scatter.size));
  c.set("render", "margin", std::to_string(r.scatter.margin));
  c.set("render", "marker_radius", std::to_string(r.scatter.marker_radius));
  c.set("render", "azimuth", fmt_double(r.scatter.azimuth));
  c.set("render", "elevation", fmt_double(r.scatter.elevation));
  c.set("phantom", "source", r.phantom_source);
  c.set("phantom", "width", std::to_string(r.phantom_width));
  c.set("phantom", "height", std::to_string(r.phantom_height));
  c.set("phantom", "tissues", r.tissues);
  c.set("phantom", "b1", fmt_double(r.phantom_b1));
  c.set("phantom", "b1_map", r.b1_map);
  c.set("simulate", "snr", fmt_double(r.snr));
  c.set("simulate", "seeds", detail::format_seeds(r.seeds));
  c.set("simulate", "mode", r.mode.to_string());
  return c;
}

} // namespace mrfviz

#endif
