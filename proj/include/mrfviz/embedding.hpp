#ifndef MRFVIZ_EMBEDDING_HPP
#define MRFVIZ_EMBEDDING_HPP

// Dictionary embedding and its on-disk form: a CSV with one row per atom
// (id,t1,t2,b1,x,y[,z]) and a JSON sidecar holding the options and KL traces.

#include "dictionary.hpp"
#include "errors.hpp"
#include "hsne/embed.hpp"
#include "registration.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <tuple>
#include <sstream>
#include <string>
#include <vector>

namespace mrfviz {

/// Which dictionary rows are fed to the embedding.
enum class EmbedInput { unit, raw };

inline const char* to_string(EmbedInput in) { return in == EmbedInput::unit ? "unit" : "raw"; }

inline EmbedInput embed_input_from_string(const std::string& s) {
  if (s == "unit") return EmbedInput::unit;
  if (s == "raw") return EmbedInput::raw;
  throw ConfigError("unknown embedding input '" + s + "' (expected unit or raw)");
}

/// Embedding of dictionary atoms; `atoms[i]` belongs to `embedding.ids[i]`.
struct AtomEmbedding {
  hsne::Embedding embedding;
  std::vector<Atom> atoms;
  EmbedInput input = EmbedInput::unit;

  std::size_t size() const { return atoms.size(); }
};

/// Embeds every valid atom of `d`. Point ids are atom indices.
inline AtomEmbedding embed_dictionary(const Dictionary& d, const hsne::EmbedOptions& opts,
                                      EmbedInput input = EmbedInput::unit) {
  std::vector<std::uint32_t> ids;
  for (std::size_t i = 0; i < d.n_atoms(); ++i)
    if (d.valid[i]) ids.push_back(static_cast<std::uint32_t>(i));
  if (ids.size() <= opts.neighbors)
    throw ConfigError("embedding needs more valid atoms (" + std::to_string(ids.size()) + ") than neighbors (" +
                      std::to_string(opts.neighbors) + ")");
  hsne::RowMatrix rows(static_cast<Eigen::Index>(ids.size()), static_cast<Eigen::Index>(d.curve_length()));
  for (std::size_t r = 0; r < ids.size(); ++r) {
    const auto i = static_cast<Eigen::Index>(ids[r]);
    if (input == EmbedInput::unit)
      rows.row(static_cast<Eigen::Index>(r)) = d.entries_unit.row(i);
    else
      rows.row(static_cast<Eigen::Index>(r)) = d.entries.row(i).cast<double>();
  }
  AtomEmbedding out;
  out.embedding = hsne::embed_points(rows, ids, opts);
  out.input = input;
  out.atoms.reserve(ids.size());
  for (auto id : out.embedding.ids) out.atoms.push_back(d.grid.atoms()[id]);
  return out;
}

/// Embeds several dictionaries together (rows stacked in order) and splits the
/// result back into one embedding per dictionary. Curve lengths must agree.
inline std::vector<AtomEmbedding> embed_joint(const std::vector<const Dictionary*>& dicts,
                                              const hsne::EmbedOptions& opts, EmbedInput input = EmbedInput::unit) {
  if (dicts.empty()) throw DomainError("joint embedding needs at least one dictionary");
  const std::size_t len = dicts.front()->curve_length();
  std::vector<std::uint32_t> ids;
  std::vector<std::size_t> offset;
  std::size_t total = 0;
  for (const auto* d : dicts) {
    if (d->curve_length() != len) throw DomainError("joint embedding needs equal curve lengths");
    offset.push_back(total);
    for (std::size_t i = 0; i < d->n_atoms(); ++i)
      if (d->valid[i]) ids.push_back(static_cast<std::uint32_t>(total + i));
    total += d->n_atoms();
  }
  if (total > std::numeric_limits<std::uint32_t>::max()) throw DomainError("too many atoms for joint embedding");
  if (ids.size() <= opts.neighbors)
    throw ConfigError("embedding needs more valid atoms (" + std::to_string(ids.size()) + ") than neighbors (" +
                      std::to_string(opts.neighbors) + ")");
  auto source = [&](std::uint32_t id) {
    std::size_t k = dicts.size() - 1;
    while (offset[k] > id) --k;
    return std::pair<std::size_t, std::size_t>{k, id - offset[k]};
  };
  hsne::RowMatrix rows(static_cast<Eigen::Index>(ids.size()), static_cast<Eigen::Index>(len));
  for (std::size_t r = 0; r < ids.size(); ++r) {
    const auto [k, i] = source(ids[r]);
    const auto row = static_cast<Eigen::Index>(i);
    if (input == EmbedInput::unit)
      rows.row(static_cast<Eigen::Index>(r)) = dicts[k]->entries_unit.row(row);
    else
      rows.row(static_cast<Eigen::Index>(r)) = dicts[k]->entries.row(row).cast<double>();
  }
  const auto all = hsne::embed_points(rows, ids, opts);

  std::vector<AtomEmbedding> out(dicts.size());
  for (auto& ae : out) {
    ae.input = input;
    ae.embedding.dim = all.dim;
    ae.embedding.kl_trace = all.kl_trace;
    ae.embedding.post_exaggeration_index = all.post_exaggeration_index;
    ae.embedding.level_traces = all.level_traces;
    ae.embedding.level_sizes = all.level_sizes;
    ae.embedding.config = all.config;
  }
  for (std::size_t p = 0; p < all.size(); ++p) {
    const auto [k, i] = source(all.ids[p]);
    auto& e = out[k].embedding;
    e.ids.push_back(static_cast<std::uint32_t>(i));
    for (int d = 0; d < all.dim; ++d) e.points.push_back(all.at(p, d));
    out[k].atoms.push_back(dicts[k]->grid.atoms()[i]);
  }
  return out;
}

namespace detail {

inline nlohmann::json trace_to_json(const std::vector<hsne::Checkpoint>& t) {
  auto arr = nlohmann::json::array();
  for (const auto& c : t) arr.push_back({c.iteration, c.kl});
  return arr;
}

inline std::vector<hsne::Checkpoint> trace_from_json(const nlohmann::json& j) {
  std::vector<hsne::Checkpoint> t;
  for (const auto& c : j) t.push_back({c.at(0).get<int>(), c.at(1).get<double>()});
  return t;
}

} // namespace detail

inline nlohmann::json options_to_json(const hsne::EmbedOptions& o) {
  return {{"dim", o.dim},
          {"neighbors", o.neighbors},
          {"perplexity", o.effective_perplexity()},
          {"levels", o.levels},
          {"iterations", o.iterations},
          {"exaggeration_iterations", o.exaggeration_iterations},
          {"exaggeration", o.exaggeration},
          {"learning_rate", o.learning_rate},
          {"theta", o.theta},
          {"exact_threshold", o.exact_threshold},
          {"seed", o.seed},
          {"selection_walks", o.landmarks.selection_walks},
          {"influence_walks", o.landmarks.influence_walks},
          {"walk_length", o.landmarks.walk_length},
          {"landmark_threshold", o.landmarks.threshold}};
}

inline hsne::EmbedOptions options_from_json(const nlohmann::json& j) {
  hsne::EmbedOptions o;
  o.dim = j.at("dim").get<int>();
  o.neighbors = j.at("neighbors").get<std::size_t>();
  o.perplexity = j.at("perplexity").get<double>();
  o.levels = j.at("levels").get<int>();
  o.iterations = j.at("iterations").get<int>();
  o.exaggeration_iterations = j.at("exaggeration_iterations").get<int>();
  o.exaggeration = j.at("exaggeration").get<double>();
  o.learning_rate = j.at("learning_rate").get<double>();
  o.theta = j.at("theta").get<double>();
  o.exact_threshold = j.at("exact_threshold").get<std::size_t>();
  o.seed = j.at("seed").get<std::uint64_t>();
  o.landmarks.selection_walks = j.at("selection_walks").get<int>();
  o.landmarks.influence_walks = j.at("influence_walks").get<int>();
  o.landmarks.walk_length = j.at("walk_length").get<int>();
  o.landmarks.threshold = j.at("landmark_threshold").get<double>();
  return o;
}

inline std::string sidecar_path(const std::string& csv_path) { return csv_path + ".json"; }

/// Writes `csv_path` and its sidecar `csv_path.json`.
inline void save_embedding(const AtomEmbedding& ae, const std::string& csv_path) {
  const auto& e = ae.embedding;
  std::ostringstream out;
  out << "id,t1,t2,b1,x,y" << (e.dim == 3 ? ",z" : "") << '\n';
  char buf[48];
  for (std::size_t i = 0; i < ae.size(); ++i) {
    out << e.ids[i];
    for (double v : {ae.atoms[i].t1, ae.atoms[i].t2, ae.atoms[i].b1}) {
      std::snprintf(buf, sizeof buf, ",%.17g", v);
      out << buf;
    }
    for (int d = 0; d < e.dim; ++d) {
      std::snprintf(buf, sizeof buf, ",%.17g", e.at(i, d));
      out << buf;
    }
    out << '\n';
  }
  detail::write_file(csv_path, out.str());

  nlohmann::json side;
  side["format"] = "mrfviz-embedding";
  side["version"] = 1;
  side["dim"] = e.dim;
  side["points"] = ae.size();
  side["input"] = to_string(ae.input);
  side["options"] = options_to_json(e.config);
  side["kl_trace"] = detail::trace_to_json(e.kl_trace);
  side["post_exaggeration_index"] = e.post_exaggeration_index;
  side["level_sizes"] = e.level_sizes;
  auto levels = nlohmann::json::array();
  for (const auto& t : e.level_traces) levels.push_back(detail::trace_to_json(t));
  side["level_traces"] = levels;
  detail::write_file(sidecar_path(csv_path), side.dump(2) + "\n");
}

/// Reads an embedding CSV and, when present, its sidecar.
inline AtomEmbedding load_embedding(const std::string& csv_path) {
  std::istringstream in(detail::read_file(csv_path));
  std::string line;
  if (!std::getline(in, line)) throw FormatError(csv_path + ": empty embedding file");
  int dim = 0;
  if (line == "id,t1,t2,b1,x,y")
    dim = 2;
  else if (line == "id,t1,t2,b1,x,y,z")
    dim = 3;
  else
    throw FormatError(csv_path + ": unexpected embedding header '" + line + "'");

  AtomEmbedding ae;
  ae.embedding.dim = dim;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    if (cells.size() != static_cast<std::size_t>(4 + dim))
      throw FormatError(csv_path + ":" + std::to_string(lineno) + ": expected " + std::to_string(4 + dim) +
                        " columns");
    try {
      ae.embedding.ids.push_back(static_cast<std::uint32_t>(std::stoul(cells[0])));
      ae.atoms.push_back({std::stod(cells[1]), std::stod(cells[2]), std::stod(cells[3])});
      for (int d = 0; d < dim; ++d) ae.embedding.points.push_back(std::stod(cells[4 + d]));
    } catch (const std::exception&) {
      throw FormatError(csv_path + ":" + std::to_string(lineno) + ": malformed number");
    }
  }

  std::ifstream probe(sidecar_path(csv_path));
  if (probe) {
    nlohmann::json side;
    try {
      side = nlohmann::json::parse(detail::read_file(sidecar_path(csv_path)));
      if (side.at("dim").get<int>() != dim) throw FormatError("sidecar dimension does not match CSV");
      if (side.at("points").get<std::size_t>() != ae.size())
        throw FormatError("sidecar point count does not match CSV");
      ae.input = embed_input_from_string(side.at("input").get<std::string>());
      ae.embedding.config = options_from_json(side.at("options"));
      ae.embedding.kl_trace = detail::trace_from_json(side.at("kl_trace"));
      ae.embedding.post_exaggeration_index = side.at("post_exaggeration_index").get<std::size_t>();
      ae.embedding.level_sizes = side.at("level_sizes").get<std::vector<std::size_t>>();
      for (const auto& t : side.at("level_traces")) ae.embedding.level_traces.push_back(detail::trace_from_json(t));
    } catch (const nlohmann::json::exception& ex) {
      throw FormatError(sidecar_path(csv_path) + ": " + ex.what());
    } catch (const ConfigError& ex) {
      throw FormatError(sidecar_path(csv_path) + ": " + ex.what());
    }
  }
  ae.embedding.config.dim = dim;
  return ae;
}

/// Embedding coordinates as an n x dim point matrix.
inline PointMatrix points_of(const AtomEmbedding& ae) {
  const int dim = ae.embedding.dim;
  PointMatrix p(static_cast<Eigen::Index>(ae.size()), dim);
  for (std::size_t i = 0; i < ae.size(); ++i)
    for (int d = 0; d < dim; ++d) p(static_cast<Eigen::Index>(i), d) = ae.embedding.at(i, d);
  return p;
}

struct EmbeddingRegistration {
  SimilarityTransform transform;
  AtomEmbedding aligned;   ///< source embedding mapped into the reference frame
  std::size_t pairs = 0;   ///< atoms present in both embeddings
  double rms = 0.0;        ///< residual over the pairs
};

/// Aligns `src` onto `ref`, pairing points that share (t1, t2, b1).
inline EmbeddingRegistration register_embedding(const AtomEmbedding& src, const AtomEmbedding& ref) {
  if (src.embedding.dim != ref.embedding.dim) throw DomainError("embeddings differ in dimension");
  std::map<std::tuple<double, double, double>, std::size_t> in_ref;
  for (std::size_t i = 0; i < ref.size(); ++i) in_ref.emplace(std::tuple{ref.atoms[i].t1, ref.atoms[i].t2, ref.atoms[i].b1}, i);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const auto it = in_ref.find({src.atoms[i].t1, src.atoms[i].t2, src.atoms[i].b1});
    if (it != in_ref.end()) pairs.emplace_back(i, it->second);
  }
  const auto ps = points_of(src), pr = points_of(ref);
  const int dim = src.embedding.dim;
  PointMatrix a(static_cast<Eigen::Index>(pairs.size()), dim), b(static_cast<Eigen::Index>(pairs.size()), dim);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    a.row(static_cast<Eigen::Index>(k)) = ps.row(static_cast<Eigen::Index>(pairs[k].first));
    b.row(static_cast<Eigen::Index>(k)) = pr.row(static_cast<Eigen::Index>(pairs[k].second));
  }
  EmbeddingRegistration r;
  r.transform = fit_similarity(a, b);
  r.pairs = pairs.size();
  r.rms = rms_residual(a, b, r.transform);
  r.aligned = src;
  const auto moved = apply(r.transform, ps);
  for (std::size_t i = 0; i < src.size(); ++i)
    for (int d = 0; d < dim; ++d)
      r.aligned.embedding.points[i * static_cast<std::size_t>(dim) + d] = moved(static_cast<Eigen::Index>(i), d);
  return r;
}

} // namespace mrfviz

#endif
