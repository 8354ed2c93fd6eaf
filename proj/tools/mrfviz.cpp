// mrfviz: dictionary generation, embedding, registration, rendering and
// phantom simulation driven by sectioned config files.
//
// Exit codes: 0 ok, 2 configuration error, 3 numerical error, 4 I/O error.

#include <mrfviz/colormap.hpp>
#include <mrfviz/config.hpp>
#include <mrfviz/dictionary.hpp>
#include <mrfviz/embedding.hpp>
#include <mrfviz/errors.hpp>
#include <mrfviz/image.hpp>
#include <mrfviz/matching.hpp>
#include <mrfviz/phantom.hpp>
#include <mrfviz/registration.hpp>
#include <mrfviz/run_config.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace mrfviz;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

/// Options shared by every pipeline subcommand.
struct Common {
  std::string config; ///< config file; defaults to <out>/run.ini when that exists
  std::string out;    ///< run directory
  std::string format = "ppm";
  std::vector<std::pair<std::string, std::string>> overrides; ///< "section.key" -> value
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("-c,--config", c.config, "Config file (defaults to <out>/run.ini when present)");
  sub->add_option("-o,--out", c.out, "Run directory")->required();
  sub->add_option("--set", c.overrides, "Override a config key: --set section.key value")->expected(0, -1);
}

void add_format(CLI::App* sub, Common& c) {
  sub->add_option("--format", c.format, "Image format")->check(CLI::IsMember({"ppm", "png"}));
}

std::string image_path(const Common& c, const fs::path& dir, const std::string& stem, int channels = 3) {
  if (c.format == "png") return (dir / (stem + ".png")).string();
  return (dir / (stem + (channels == 1 ? ".pgm" : ".ppm"))).string();
}

/// Loads the base config, applies overrides, validates, and writes the
/// effective config (all keys) to <out>/run.ini.
RunConfig effective_config(const Common& c, Config* effective = nullptr) {
  fs::create_directories(c.out);
  const fs::path run_ini = fs::path(c.out) / "run.ini";
  Config base;
  if (!c.config.empty())
    base = Config::load(c.config);
  else if (fs::exists(run_ini))
    base = Config::load(run_ini.string());
  for (const auto& [dotted, value] : c.overrides) {
    const auto dot = dotted.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == dotted.size())
      throw ConfigError("--set expects section.key, got '" + dotted + "'");
    base.set(dotted.substr(0, dot), dotted.substr(dot + 1), value);
  }
  const RunConfig rc = run_config_from(base);
  const Config full = to_config(rc);
  detail::write_file(run_ini.string(), full.to_string());
  if (effective) *effective = full;
  return rc;
}

struct Output {
  std::string path;
  std::string role;
};

/// Records one subcommand in <out>/manifest.json (outputs with size and CRC32).
void update_manifest(const Common& c, const std::string& step, const std::vector<Output>& outputs,
                     nlohmann::json extra = nlohmann::json::object()) {
  const fs::path path = fs::path(c.out) / "manifest.json";
  nlohmann::json m = nlohmann::json::object();
  if (fs::exists(path)) {
    try {
      m = nlohmann::json::parse(detail::read_file(path.string()));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(path.string() + ": " + e.what());
    }
  }
  m["format"] = "mrfviz-run";
  m["version"] = 1;
  m["effective_config"] = detail::read_file((fs::path(c.out) / "run.ini").string());
  nlohmann::json files = nlohmann::json::array();
  for (const auto& o : outputs) {
    const auto bytes = detail::read_file(o.path);
    char crc[16];
    std::snprintf(crc, sizeof crc, "%08x", detail::crc32_of(bytes.data(), bytes.size()));
    files.push_back({{"path", fs::relative(o.path, c.out).generic_string()},
                     {"role", o.role},
                     {"bytes", bytes.size()},
                     {"crc32", crc}});
  }
  extra["outputs"] = files;
  m["steps"][step] = extra;
  detail::write_file(path.string(), m.dump(2) + "\n");
}

std::string default_in_run(const Common& c, const std::string& given, const std::string& name) {
  return given.empty() ? (fs::path(c.out) / name).string() : given;
}

std::string fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

// ---------------------------------------------------------------------------

struct GenDictArgs {
  Common common;
  bool no_inversion = false;
  std::string b1;
  std::size_t length = 0;
  std::string name;
};

int cmd_gen_dict(GenDictArgs& a) {
  if (a.no_inversion) a.common.overrides.emplace_back("sequence.inversion", "false");
  if (!a.b1.empty()) a.common.overrides.emplace_back("grid.b1", a.b1);
  if (a.length > 0) a.common.overrides.emplace_back("sequence.length", std::to_string(a.length));
  if (!a.name.empty()) a.common.overrides.emplace_back("run.name", a.name);
  const auto rc = effective_config(a.common);
  auto seq = rc.descriptor();
  seq.truncation = rc.length;
  const auto d = build_dictionary(rc.grid(), seq);
  const auto path = (fs::path(a.common.out) / "dictionary.mrfd").string();
  save(d, path);
  std::size_t valid = 0;
  for (auto v : d.valid) valid += v;
  std::cout << "dictionary " << path << ": " << d.n_atoms() << " atoms (" << valid << " valid), curve length "
            << d.curve_length() << "\n";
  update_manifest(a.common, "gen-dict", {{path, "dictionary"}},
                  {{"atoms", d.n_atoms()}, {"valid_atoms", valid}, {"curve_length", d.curve_length()}});
  return 0;
}

// ---------------------------------------------------------------------------

struct EmbedArgs {
  Common common;
  std::string dict;
  std::optional<std::uint64_t> seed;
  std::optional<int> iters, dim;
  std::optional<std::size_t> neighbors;
  std::string input;
  std::vector<std::string> joint_with;
};

int cmd_embed(EmbedArgs& a) {
  auto& ov = a.common.overrides;
  if (a.seed) ov.emplace_back("embed.seed", std::to_string(*a.seed));
  if (a.iters) ov.emplace_back("embed.iterations", std::to_string(*a.iters));
  if (a.dim) ov.emplace_back("embed.dim", std::to_string(*a.dim));
  if (a.neighbors) ov.emplace_back("embed.neighbors", std::to_string(*a.neighbors));
  if (!a.input.empty()) ov.emplace_back("embed.input", a.input);
  const auto rc = effective_config(a.common);
  const auto dict_path = default_in_run(a.common, a.dict, "dictionary.mrfd");
  const auto d = load(dict_path);

  std::vector<Output> outputs;
  nlohmann::json extra;
  auto report = [&](const AtomEmbedding& ae, const std::string& path, const std::string& role) {
    save_embedding(ae, path);
    outputs.push_back({path, role});
    outputs.push_back({sidecar_path(path), role + "-sidecar"});
    const auto& t = ae.embedding.kl_trace;
    std::cout << "embedding " << path << ": " << ae.size() << " points, dim " << ae.embedding.dim;
    if (!t.empty()) std::cout << ", final KL " << t.back().kl;
    std::cout << "\n";
  };

  if (a.joint_with.empty()) {
    const auto ae = embed_dictionary(d, rc.embed, rc.input);
    report(ae, (fs::path(a.common.out) / "embedding.csv").string(), "embedding");
    extra["mode"] = "separate";
  } else {
    std::vector<Dictionary> others;
    for (const auto& p : a.joint_with) others.push_back(load(p));
    std::vector<const Dictionary*> all = {&d};
    for (const auto& o : others) all.push_back(&o);
    const auto parts = embed_joint(all, rc.embed, rc.input);
    report(parts[0], (fs::path(a.common.out) / "embedding.csv").string(), "embedding");
    for (std::size_t k = 1; k < parts.size(); ++k)
      report(parts[k], (fs::path(a.common.out) / ("embedding_joint" + std::to_string(k) + ".csv")).string(),
             "joint-embedding:" + a.joint_with[k - 1]);
    extra["mode"] = "joint";
    extra["joint_with"] = a.joint_with;
  }
  extra["dictionary"] = dict_path;
  update_manifest(a.common, "embed", outputs, extra);
  return 0;
}

// ---------------------------------------------------------------------------

struct RegisterArgs {
  Common common;
  std::string src, ref;
};

int cmd_register(RegisterArgs& a) {
  if (!a.ref.empty()) a.common.overrides.emplace_back("register.reference", a.ref);
  const auto rc = effective_config(a.common);
  if (rc.reference.empty()) throw ConfigError("register needs a reference embedding (--ref or [register] reference)");
  const auto src_path = default_in_run(a.common, a.src, "embedding.csv");
  const auto src = load_embedding(src_path);
  const auto ref = load_embedding(rc.reference);
  const auto r = register_embedding(src, ref);
  const auto tpath = (fs::path(a.common.out) / "transform.json").string();
  auto j = to_json(r.transform);
  j["pairs"] = r.pairs;
  j["rms_residual"] = r.rms;
  j["source"] = src_path;
  j["reference"] = rc.reference;
  detail::write_file(tpath, j.dump(2) + "\n");
  const auto apath = (fs::path(a.common.out) / "embedding_aligned.csv").string();
  save_embedding(r.aligned, apath);
  char buf[128];
  std::snprintf(buf, sizeof buf, "registered %zu pairs: scale %.9g, rms residual %.6g\n", r.pairs,
                r.transform.scale, r.rms);
  std::cout << buf;
  update_manifest(a.common, "register",
                  {{tpath, "transform"}, {apath, "aligned-embedding"}, {sidecar_path(apath), "aligned-sidecar"}},
                  {{"pairs", r.pairs}, {"rms_residual", r.rms}, {"scale", r.transform.scale}});
  return 0;
}

// ---------------------------------------------------------------------------

struct ColorArgs {
  Common common;
  std::string embedding, frame;
};

ColorAssignment colors_for(const AtomEmbedding& ae, const std::string& frame_path) {
  if (frame_path.empty()) return colorize(ae.embedding);
  const auto frame = load_embedding(frame_path);
  return colorize(ae.embedding, &frame.embedding);
}

int cmd_colorize(ColorArgs& a) {
  effective_config(a.common);
  const auto path = default_in_run(a.common, a.embedding, "embedding.csv");
  const auto ae = load_embedding(path);
  const auto c = colors_for(ae, a.frame);
  std::string out = "id,t1,t2,b1,lab_l,lab_a,lab_b,r,g,b\n";
  char buf[256];
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto& at = ae.atoms[i];
    std::snprintf(buf, sizeof buf, "%u,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%u,%u,%u\n", c.ids[i], at.t1, at.t2, at.b1,
                  c.lab[i].l, c.lab[i].a, c.lab[i].b, to_byte(c.rgb[i].r), to_byte(c.rgb[i].g), to_byte(c.rgb[i].b));
    out += buf;
  }
  const auto cpath = (fs::path(a.common.out) / "colors.csv").string();
  detail::write_file(cpath, out);
  std::cout << "colors " << cpath << ": " << c.size() << " atoms\n";
  update_manifest(a.common, "colorize", {{cpath, "colors"}}, {{"embedding", path}, {"frame", a.frame}});
  return 0;
}

// ---------------------------------------------------------------------------

struct RenderArgs {
  Common common;
  std::string embedding, frame;
};

int cmd_render(RenderArgs& a) {
  const auto rc = effective_config(a.common);
  const auto path = default_in_run(a.common, a.embedding, "embedding.csv");
  const auto ae = load_embedding(path);
  const auto grid = rc.grid();
  for (std::size_t i = 0; i < ae.size(); ++i) {
    const auto id = ae.embedding.ids[i];
    if (id >= grid.size() || !(grid.atoms()[id] == ae.atoms[i]))
      throw DomainError("embedding " + path + " does not match the configured grid (atom id " + std::to_string(id) +
                        ")");
  }
  const auto c = colors_for(ae, a.frame);
  std::vector<Output> outputs;
  for (double b1 : grid.b1_values()) {
    const auto img = upscale(render_dictionary_map(grid, c, b1), rc.render_scale);
    const auto p = image_path(a.common, a.common.out, "map_b1_" + fmt_g(b1));
    write_image(img, p);
    outputs.push_back({p, "dictionary-map"});
  }
  const auto sp = image_path(a.common, a.common.out, "scatter");
  write_image(render_scatter(ae.embedding, c, rc.scatter), sp);
  outputs.push_back({sp, "scatter"});
  for (const auto& o : outputs) std::cout << "wrote " << o.path << "\n";
  update_manifest(a.common, "render", outputs, {{"embedding", path}, {"frame", a.frame}});
  return 0;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  Common common;
  std::string dict;
  std::string snr, seeds, mode;
};

std::vector<double> read_b1_map(const std::string& path, std::size_t n) {
  std::istringstream in(detail::read_file(path));
  std::vector<double> v;
  double x = 0.0;
  while (in >> x) v.push_back(x);
  if (!in.eof()) throw FormatError(path + ": malformed b1 map");
  if (v.size() != n)
    throw FormatError(path + ": b1 map has " + std::to_string(v.size()) + " values, expected " + std::to_string(n));
  return v;
}

Phantom build_phantom(const RunConfig& rc, const ParameterGrid& grid) {
  LabelMap labels;
  if (rc.phantom_source == "builtin")
    labels = builtin_labels(rc.phantom_width, rc.phantom_height);
  else
    labels = resize_nearest(labels_from_image(read_image(rc.phantom_source)), rc.phantom_width, rc.phantom_height);
  B1Field b1{rc.phantom_b1, {}};
  if (!rc.b1_map.empty()) b1.map = read_b1_map(rc.b1_map, rc.phantom_width * rc.phantom_height);
  return make_phantom(labels, rc.tissue_table(), grid, b1);
}

std::string sanitize(std::string s) {
  for (auto& ch : s)
    if (ch == '=' || ch == ',' || ch == '/' || ch == ':') ch = '-';
  return s;
}

/// Sequence identity used to group runs that differ only in curve length.
std::string sequence_id(const RunConfig& rc) {
  std::string id = to_string(rc.model);
  if (rc.model == SequenceKind::epg_fisp) {
    id += ":" + fs::path(rc.flip_train).filename().string();
    if (!rc.inversion) id += ":no-inversion";
  }
  return id;
}

const char* kSummaryHeader = "run,sequence,length,b1_values,mode,snr,seeds,label,name,e1_bar_mean,e2_bar_mean";

int cmd_simulate(SimulateArgs& a) {
  auto& ov = a.common.overrides;
  if (!a.snr.empty()) ov.emplace_back("simulate.snr", a.snr);
  if (!a.seeds.empty()) ov.emplace_back("simulate.seeds", a.seeds);
  if (!a.mode.empty()) ov.emplace_back("simulate.mode", a.mode);
  const auto rc = effective_config(a.common);
  const auto dict_path = default_in_run(a.common, a.dict, "dictionary.mrfd");
  const auto d = load(dict_path);
  const auto ph = build_phantom(rc, d.grid);
  const auto mask = tissue_mask(ph);

  const fs::path dir = fs::path(a.common.out) / ("simulate-" + sanitize(rc.mode.to_string()));
  fs::create_directories(dir);
  std::vector<Output> outputs;

  Image labels(ph.width, ph.height, 1, 0);
  for (std::size_t k = 0; k < ph.pixels(); ++k)
    labels.data[k] = static_cast<std::uint8_t>(std::clamp(ph.labels[k] * 80, 0, 255));
  const auto lp = image_path(a.common, dir, "labels", 1);
  write_image(labels, lp);
  outputs.push_back({lp, "labels"});

  double t1_max = d.grid.t1_values().back(), t2_max = d.grid.t2_values().back();
  std::string per_seed = std::string(kTissueCsvHeader) + "\n";
  std::map<int, std::pair<double, double>> sums;
  std::map<int, std::string> names;
  for (auto seed : rc.seeds) {
    const auto sig = simulate_signals(ph, d, rc.snr, seed);
    auto r = match(sig, d, rc.mode, mask);
    r.snr = rc.snr;
    r.seed = seed;
    error_maps(r, ph);
    tissue_errors(r, ph);
    per_seed += tissue_csv_rows(r);
    for (const auto& e : r.tissues) {
      sums[e.label].first += e.e1;
      sums[e.label].second += e.e2;
      names[e.label] = e.name;
    }
    const fs::path sd = dir / ("seed_" + std::to_string(seed));
    fs::create_directories(sd);
    const auto px = (sd / "pixels.csv").string();
    detail::write_file(px, pixel_csv(r, ph));
    outputs.push_back({px, "pixels"});
    const std::vector<std::tuple<std::string, const std::vector<double>*, double>> maps = {
        {"t1_map", &r.t1, t1_max}, {"t2_map", &r.t2, t2_max}, {"e1_map", &r.e1, 100.0}, {"e2_map", &r.e2, 100.0}};
    for (const auto& [stem, values, vmax] : maps) {
      const auto p = image_path(a.common, sd, stem);
      write_image(render_scalar_map(*values, r.matched, ph.width, ph.height, vmax), p);
      outputs.push_back({p, stem});
    }
  }
  const auto tp = (dir / "tissue_errors.csv").string();
  detail::write_file(tp, per_seed);
  outputs.push_back({tp, "tissue-errors"});

  std::string summary = std::string(kSummaryHeader) + "\n";
  const double n = static_cast<double>(rc.seeds.size());
  char buf[512];
  std::cout << "tissue errors over " << rc.seeds.size() << " seed(s), snr " << detail::fmt_double(rc.snr) << ", mode "
            << rc.mode.to_string() << "\n";
  for (const auto& [label, s] : sums) {
    std::snprintf(buf, sizeof buf, "%s,%s,%zu,%s,%s,%s,%s,%d,%s,%.17g,%.17g\n",
                  rc.name.c_str(), sequence_id(rc).c_str(), d.curve_length(),
                  sanitize(rc.b1).c_str(), rc.mode.to_string().c_str(), detail::fmt_double(rc.snr).c_str(),
                  detail::format_seeds(rc.seeds).c_str(), label, names[label].c_str(), s.first / n, s.second / n);
    summary += buf;
    std::snprintf(buf, sizeof buf, "  %-6s E1 %8.4f %%  E2 %8.4f %%\n", names[label].c_str(), s.first / n,
                  s.second / n);
    std::cout << buf;
  }
  const auto sp = (dir / "tissue_summary.csv").string();
  detail::write_file(sp, summary);
  outputs.push_back({sp, "tissue-summary"});

  nlohmann::json snaps = nlohmann::json::array();
  for (const auto& s : ph.snaps)
    snaps.push_back({{"label", s.label},
                     {"name", s.name},
                     {"t1_table", s.t1_table},
                     {"t2_table", s.t2_table},
                     {"t1_snapped", s.t1_snapped},
                     {"t2_snapped", s.t2_snapped},
                     {"t1_distance", s.t1_distance()},
                     {"t2_distance", s.t2_distance()}});
  for (const auto& s : ph.snaps)
    if (s.t1_distance() > 0.0 || s.t2_distance() > 0.0)
      std::cout << "  snapped " << s.name << ": t1 " << s.t1_table << " -> " << s.t1_snapped << ", t2 " << s.t2_table
                << " -> " << s.t2_snapped << "\n";
  update_manifest(a.common, "simulate-" + sanitize(rc.mode.to_string()), outputs,
                  {{"dictionary", dict_path},
                   {"snr", detail::fmt_double(rc.snr)},
                   {"seeds", rc.seeds},
                   {"mode", rc.mode.to_string()},
                   {"snaps", snaps}});
  return 0;
}

// ---------------------------------------------------------------------------

struct ReportArgs {
  std::string runs;
  std::string out;
};

struct SummaryRow {
  std::vector<std::string> cells; ///< as in the summary header
  std::size_t length = 0;
  double e1 = 0.0, e2 = 0.0;
};

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string c;
  while (std::getline(ss, c, ',')) cells.push_back(c);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

/// Trend of an error column across curve lengths within one group of runs.
std::string trend(std::vector<std::pair<std::size_t, double>> v) {
  std::sort(v.begin(), v.end());
  std::set<std::size_t> lengths;
  for (const auto& p : v) lengths.insert(p.first);
  if (lengths.size() < 2 || lengths.size() != v.size()) return "-";
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i].second < v[i - 1].second)) return "not-decreasing";
  return "decreasing";
}

int cmd_report(ReportArgs& a) {
  if (!fs::is_directory(a.runs)) throw IoError("not a directory: " + a.runs);
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(a.runs))
    if (e.is_regular_file() && e.path().filename() == "tissue_summary.csv") files.push_back(e.path());
  std::sort(files.begin(), files.end());

  std::vector<SummaryRow> rows;
  for (const auto& f : files) {
    std::istringstream in(detail::read_file(f.string()));
    std::string line;
    if (!std::getline(in, line) || line != kSummaryHeader) throw FormatError(f.string() + ": unexpected header");
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      SummaryRow r;
      r.cells = split_csv(line);
      if (r.cells.size() != 11) throw FormatError(f.string() + ":" + std::to_string(lineno) + ": expected 11 columns");
      r.cells[0] = fs::relative(f.parent_path().parent_path(), a.runs).generic_string();
      try {
        r.length = std::stoul(r.cells[2]);
        r.e1 = std::stod(r.cells[9]);
        r.e2 = std::stod(r.cells[10]);
      } catch (const std::logic_error&) {
        throw FormatError(f.string() + ":" + std::to_string(lineno) + ": malformed number");
      }
      rows.push_back(std::move(r));
    }
  }

  // Runs that differ only in curve length form one group per label.
  auto group_key = [](const SummaryRow& r) {
    return r.cells[1] + "|" + r.cells[3] + "|" + r.cells[4] + "|" + r.cells[5] + "|" + r.cells[7];
  };
  std::map<std::string, std::vector<std::pair<std::size_t, double>>> g1, g2;
  for (const auto& r : rows) {
    g1[group_key(r)].emplace_back(r.length, r.e1);
    g2[group_key(r)].emplace_back(r.length, r.e2);
  }

  const std::string header = std::string(kSummaryHeader) + ",e1_trend_vs_length,e2_trend_vs_length";
  std::string csv = header + "\n";
  std::string md = "| " + header + " |\n|";
  for (std::size_t i = 0; i < split_csv(header).size(); ++i) md += "---|";
  md += "\n";
  for (const auto& r : rows) {
    std::vector<std::string> cells = r.cells;
    cells.push_back(trend(g1[group_key(r)]));
    cells.push_back(trend(g2[group_key(r)]));
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) line += (i ? "," : "") + cells[i];
    csv += line + "\n";
    std::string mline = "|";
    for (const auto& c : cells) mline += " " + c + " |";
    md += mline + "\n";
  }
  const std::string prefix = a.out.empty() ? (fs::path(a.runs) / "report").string() : a.out;
  detail::write_file(prefix + ".csv", csv);
  detail::write_file(prefix + ".md", md);
  std::cout << "report " << prefix << ".csv: " << rows.size() << " rows\n";
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"mrfviz: encoding-capability maps and matching simulations for quantitative MRI dictionaries"};
  app.require_subcommand(1);

  GenDictArgs gd;
  auto* s_gen = app.add_subcommand("gen-dict", "Simulate a signal dictionary (.mrfd)");
  add_common(s_gen, gd.common);
  s_gen->add_flag("--no-inversion", gd.no_inversion, "Drop the leading inversion pulse (MRF only)");
  s_gen->add_option("--b1", gd.b1, "B1 axis, e.g. 0.4:0.1:1.3");
  s_gen->add_option("--length", gd.length, "Keep the first N samples of every curve");
  s_gen->add_option("--name", gd.name, "Run / sequence name");

  EmbedArgs em;
  auto* s_embed = app.add_subcommand("embed", "Embed dictionary atoms in 2D or 3D");
  add_common(s_embed, em.common);
  s_embed->add_option("--dict", em.dict, "Dictionary file (default <out>/dictionary.mrfd)");
  s_embed->add_option("--seed", em.seed, "Embedding seed");
  s_embed->add_option("--iters", em.iters, "Iterations per hierarchy level");
  s_embed->add_option("--dim", em.dim, "Embedding dimension (2 or 3)");
  s_embed->add_option("--neighbors", em.neighbors, "kNN neighborhood size");
  s_embed->add_option("--input", em.input, "Rows fed to the embedding")->check(CLI::IsMember({"unit", "raw"}));
  s_embed->add_option("--joint-with", em.joint_with, "Embed together with these dictionaries (joint mode)");

  RegisterArgs rg;
  auto* s_reg = app.add_subcommand("register", "Align an embedding to a reference embedding");
  add_common(s_reg, rg.common);
  s_reg->add_option("--src", rg.src, "Embedding to align (default <out>/embedding.csv)");
  s_reg->add_option("--ref", rg.ref, "Reference embedding CSV");

  ColorArgs co;
  auto* s_col = app.add_subcommand("colorize", "Assign a color to every embedded atom");
  add_common(s_col, co.common);
  s_col->add_option("--embedding", co.embedding, "Embedding CSV (default <out>/embedding.csv)");
  s_col->add_option("--frame", co.frame, "Embedding whose bounding box sets the color scale");

  RenderArgs re;
  auto* s_ren = app.add_subcommand("render", "Color-coded dictionary maps and scatter plot");
  add_common(s_ren, re.common);
  add_format(s_ren, re.common);
  s_ren->add_option("--embedding", re.embedding, "Embedding CSV (default <out>/embedding.csv)");
  s_ren->add_option("--frame", re.frame, "Embedding whose bounding box sets the color scale");

  SimulateArgs si;
  auto* s_sim = app.add_subcommand("simulate", "Phantom simulation, matching and tissue errors");
  add_common(s_sim, si.common);
  add_format(s_sim, si.common);
  s_sim->add_option("--dict", si.dict, "Dictionary file (default <out>/dictionary.mrfd)");
  s_sim->add_option("--snr", si.snr, "Per-curve SNR (inf for noiseless)");
  s_sim->add_option("--seeds", si.seeds, "Noise seeds: 1:10, 3 or 1,4,9");
  s_sim->add_option("--mode", si.mode, "joint or fixed-b1=<value>");

  ReportArgs rp;
  auto* s_rep = app.add_subcommand("report", "Consolidate tissue errors of all runs under a directory");
  s_rep->add_option("runs", rp.runs, "Directory holding run directories")->required();
  s_rep->add_option("-o,--out", rp.out, "Output prefix (default <runs>/report)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (s_gen->parsed()) return cmd_gen_dict(gd);
    if (s_embed->parsed()) return cmd_embed(em);
    if (s_reg->parsed()) return cmd_register(rg);
    if (s_col->parsed()) return cmd_colorize(co);
    if (s_ren->parsed()) return cmd_render(re);
    if (s_sim->parsed()) return cmd_simulate(si);
    if (s_rep->parsed()) return cmd_report(rp);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DomainError& e) {
    std::cerr << "invalid parameters: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
