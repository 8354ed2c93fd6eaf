#include <mrfviz/config.hpp>
#include <mrfviz/matching.hpp>
#include <mrfviz/phantom.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>

using namespace mrfviz;

namespace {

SequenceDescriptor short_mrf(std::size_t n = 60) {
  SequenceDescriptor s;
  s.name = "mrf-test";
  s.kind = SequenceKind::epg_fisp;
  for (std::size_t i = 0; i < n; ++i) s.mrf.flip_train.push_back(10.0 + 50.0 * std::sin(0.05 * i) * std::sin(0.05 * i));
  return s;
}

ParameterGrid small_grid() {
  return ParameterGrid(AxisRange::parse("100:100:2000").values(), AxisRange::parse("20:20:300").values(),
                       {0.8, 0.9, 1.0, 1.1});
}

const Dictionary& small_dict() {
  static const Dictionary d = build_dictionary(small_grid(), short_mrf());
  return d;
}

TissueTable test_table() {
  return {{{1, "wm", 830.0, 80.0}, {2, "gm", 1330.0, 110.0}, {3, "csf", 1980.0, 295.0}}};
}

LabelMap uniform_labels(std::size_t w, std::size_t h, int label) { return {w, h, std::vector<int>(w * h, label)}; }

std::string tmp(const std::string& name) { return (std::filesystem::temp_directory_path() / name).string(); }

/// Exhaustive scalar argmax of the normalized inner product, ties to the lowest index.
std::int64_t oracle_match(const Eigen::RowVectorXd& s, const Dictionary& d, std::size_t lo, std::size_t hi) {
  const double sn = s.norm();
  std::int64_t best = -1;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t a = lo; a < hi; ++a) {
    double dot = 0.0, en = 0.0;
    for (Eigen::Index j = 0; j < s.size(); ++j) {
      const double e = d.entries(static_cast<Eigen::Index>(a), j);
      dot += e * s(j);
      en += e * e;
    }
    if (en == 0.0) continue;
    const double score = dot / (std::sqrt(en) * sn);
    if (score > best_score) {
      best_score = score;
      best = static_cast<std::int64_t>(a);
    }
  }
  return best;
}

} // namespace

// ---------------------------------------------------------------------------
// Config

TEST(Config, ParsesSectionsAndComments) {
  const auto c = Config::parse("# comment\n[a]\nx = 1.5\n; other\ny = text\n[b]\nn = -3\nflag = yes\n");
  EXPECT_EQ(c.sections(), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(c.get_double("a", "x"), 1.5);
  EXPECT_EQ(c.get("a", "y"), "text");
  EXPECT_EQ(c.get_int("b", "n"), -3);
  EXPECT_TRUE(c.get_bool("b", "flag", false));
  EXPECT_EQ(c.get_double("a", "missing", 7.0), 7.0);
}

TEST(Config, RejectsUnknownKeysAndSections) {
  const auto c = Config::parse("[a]\nx = 1\nbogus = 2\n");
  EXPECT_THROW(c.require_keys("a", {"x"}), ConfigError);
  EXPECT_NO_THROW(c.require_keys("a", {"x", "bogus"}));
  EXPECT_THROW(c.require_sections({"b"}), ConfigError);
}

TEST(Config, RejectsMalformedValues) {
  const auto c = Config::parse("[a]\nx = 1.5abc\ny = nan\nz = 2.5\nb = maybe\n");
  EXPECT_THROW(c.get_double("a", "x"), ConfigError);
  EXPECT_THROW(c.get_double("a", "y"), ConfigError);
  EXPECT_THROW(c.get_int("a", "z"), ConfigError);
  EXPECT_THROW(c.get_bool("a", "b", false), ConfigError);
  EXPECT_THROW(c.get("a", "absent"), ConfigError);
  EXPECT_THROW(Config::parse("x = 1\n"), ConfigError);
  EXPECT_THROW(Config::parse("[a]\nnot a pair\n"), ConfigError);
}

TEST(Config, CanonicalTextRoundTrips) {
  auto c = Config::parse("[s]\nb = 2\na = 1\n[t]\nk = v\n");
  c.set("t", "extra", "3");
  const auto again = Config::parse(c.to_string());
  EXPECT_EQ(again.to_string(), c.to_string());
  EXPECT_EQ(again.get("t", "extra"), "3");
}

TEST(Config, MissingFileIsIoError) { EXPECT_THROW(Config::load("/nonexistent/run.ini"), IoError); }

// ---------------------------------------------------------------------------
// Tissue table and label maps

TEST(TissueTable, DefaultTableHasThreeTissues) {
  const auto t = default_tissue_table();
  ASSERT_EQ(t.classes.size(), 3u);
  EXPECT_EQ(t.find(1)->name, "wm");
  EXPECT_EQ(t.find(2)->name, "gm");
  EXPECT_EQ(t.find(3)->name, "csf");
  EXPECT_EQ(t.find(1)->t1, 832.0);
  EXPECT_EQ(t.find(1)->t2, 79.6);
  EXPECT_EQ(t.find(2)->t1, 1331.0);
  EXPECT_EQ(t.find(2)->t2, 110.0);
  EXPECT_EQ(t.find(4), nullptr);
}

TEST(TissueTable, DefaultTableSnapsOntoFullScaleGrid) {
  const ParameterGrid g(AxisRange::parse("20:30:5000").values(), AxisRange::parse("10:10:1000").values());
  const auto ph = make_phantom(builtin_labels(64, 64), default_tissue_table(), g);
  ASSERT_EQ(ph.snaps.size(), 3u);
  EXPECT_EQ(ph.table.find(1)->t1, 830.0);
  EXPECT_EQ(ph.table.find(1)->t2, 80.0);
  EXPECT_EQ(ph.table.find(2)->t1, 1340.0);
  EXPECT_EQ(ph.table.find(2)->t2, 110.0);
  EXPECT_EQ(ph.table.find(3)->t1, 4160.0);
  EXPECT_EQ(ph.table.find(3)->t2, 1000.0);
  EXPECT_NEAR(ph.snaps[0].t2_distance(), 0.4, 1e-12);
  EXPECT_NEAR(ph.snaps[2].t2_distance(), 1000.0, 1e-12);
}

TEST(TissueTable, RejectsBadEntries) {
  EXPECT_THROW(tissue_table_from_config(Config::parse("[wm]\nlabel = 1\nt1 = 800\nt2 = 80\npd = 1\n")), ConfigError);
  EXPECT_THROW(tissue_table_from_config(Config::parse("[a]\nlabel = 1\nt1 = 8\nt2 = 1\n[b]\nlabel = 1\nt1 = 9\nt2 = 1\n")),
               ConfigError);
  EXPECT_THROW(tissue_table_from_config(Config::parse("[a]\nlabel = 0\nt1 = 8\nt2 = 1\n")), ConfigError);
  EXPECT_THROW(tissue_table_from_config(Config::parse("[a]\nlabel = 1\nt1 = -8\nt2 = 1\n")), ConfigError);
  EXPECT_THROW(tissue_table_from_config(Config::parse("[a]\nlabel = 1\nt1 = 8\n")), ConfigError);
}

TEST(Labels, BuiltinConcentricDisks) {
  const auto m = builtin_labels(256, 256);
  ASSERT_EQ(m.labels.size(), 256u * 256u);
  EXPECT_EQ(m.at(128, 128), 3);
  EXPECT_EQ(m.at(128 + 30, 128), 3);  // r = 0.119
  EXPECT_EQ(m.at(128 + 60, 128), 2);  // r = 0.236
  EXPECT_EQ(m.at(128 + 100, 128), 1); // r = 0.393
  EXPECT_EQ(m.at(128 + 120, 128), 0); // r = 0.471
  EXPECT_EQ(m.at(0, 0), 0);
  for (std::size_t y = 0; y < 256; ++y)
    for (std::size_t x = 0; x < 256; ++x) {
      ASSERT_EQ(m.at(x, y), m.at(255 - x, y));
      ASSERT_EQ(m.at(x, y), m.at(y, x));
    }
  std::size_t count[4] = {};
  for (int l : m.labels) ++count[l];
  // Ring areas scale with the squared radii: 0.15^2, 0.30^2 - 0.15^2, 0.45^2 - 0.30^2.
  const double s2 = 256.0 * 256.0 * std::numbers::pi;
  EXPECT_NEAR(count[3] / s2, 0.0225, 0.001);
  EXPECT_NEAR(count[2] / s2, 0.0675, 0.001);
  EXPECT_NEAR(count[1] / s2, 0.1125, 0.001);
  EXPECT_THROW(builtin_labels(15, 64), DomainError);
}

TEST(Labels, NearestNeighbourResize) {
  LabelMap m{2, 2, {1, 2, 3, 0}};
  const auto up = resize_nearest(m, 4, 4);
  EXPECT_EQ(up.labels, (std::vector<int>{1, 1, 2, 2, 1, 1, 2, 2, 3, 3, 0, 0, 3, 3, 0, 0}));
  EXPECT_EQ(resize_nearest(up, 2, 2), m);
  const auto b = builtin_labels(64, 64);
  EXPECT_EQ(resize_nearest(b, 64, 64), b);
  const auto down = resize_nearest(builtin_labels(256, 256), 64, 64);
  EXPECT_EQ(down.at(32, 32), 3);
  EXPECT_EQ(down.at(0, 0), 0);
}

TEST(Labels, FromGrayImageFile) {
  Image img(3, 2, 1, 0);
  img.data = {0, 1, 2, 3, 2, 1};
  const auto path = tmp("mrfviz_labels.pgm");
  write_image(img, path);
  const auto m = labels_from_image(read_image(path));
  EXPECT_EQ(m.width, 3u);
  EXPECT_EQ(m.height, 2u);
  EXPECT_EQ(m.labels, (std::vector<int>{0, 1, 2, 3, 2, 1}));
  Image rgb(1, 1, 3, 0);
  rgb.data = {1, 2, 1};
  EXPECT_THROW(labels_from_image(rgb), FormatError);
}

// ---------------------------------------------------------------------------
// make_phantom

TEST(Phantom, UniformB1AndSnappedTruth) {
  const auto ph = make_phantom(builtin_labels(32, 32), test_table(), small_grid());
  for (std::size_t k = 0; k < ph.pixels(); ++k) {
    EXPECT_EQ(ph.b1_true[k], 1.0);
    if (ph.labels[k] == 0) {
      EXPECT_EQ(ph.t1_true[k], 0.0);
      continue;
    }
    const auto* c = ph.table.find(ph.labels[k]);
    EXPECT_EQ(ph.t1_true[k], c->t1);
    EXPECT_EQ(ph.t2_true[k], c->t2);
  }
  EXPECT_EQ(ph.table.find(1)->t1, 800.0);
  EXPECT_EQ(ph.table.find(1)->t2, 80.0);
  EXPECT_EQ(ph.table.find(3)->t1, 2000.0);
  EXPECT_EQ(ph.table.find(3)->t2, 300.0);
  EXPECT_EQ(ph.snaps[0].t1_distance(), 30.0);
  EXPECT_NO_THROW(phantom_atoms(ph, small_grid()));
}

TEST(Phantom, B1MapIsCopied) {
  const auto labels = builtin_labels(16, 16);
  B1Field f;
  for (std::size_t k = 0; k < 256; ++k) f.map.push_back(k % 2 ? 0.8 : 1.1);
  const auto ph = make_phantom(labels, test_table(), small_grid(), f);
  EXPECT_EQ(ph.b1_true, f.map);
}

TEST(Phantom, Errors) {
  const auto labels = builtin_labels(16, 16);
  EXPECT_THROW(make_phantom(labels, {{{1, "wm", 830.0, 80.0}}}, small_grid()), DomainError);
  EXPECT_THROW(make_phantom(labels, test_table(), small_grid(), {0.75, {}}), DomainError);
  EXPECT_THROW(make_phantom(uniform_labels(8, 8, 1), test_table(), small_grid()), DomainError);
  // Snaps to t1 = 100, t2 = 300: no atom there.
  EXPECT_THROW(make_phantom(uniform_labels(16, 16, 1), {{{1, "odd", 90.0, 290.0}}}, small_grid()), DomainError);
  B1Field wrong_size;
  wrong_size.map.assign(10, 1.0);
  EXPECT_THROW(make_phantom(labels, test_table(), small_grid(), wrong_size), DomainError);
}

// ---------------------------------------------------------------------------
// simulate_signals

TEST(Simulate, InfiniteSnrGivesDictionaryEntries) {
  const auto& d = small_dict();
  const auto ph = make_phantom(builtin_labels(16, 16), test_table(), d.grid);
  const auto atoms = phantom_atoms(ph, d.grid);
  const auto sig = simulate_signals(ph, d, std::numeric_limits<double>::infinity(), 1);
  for (std::size_t k = 0; k < ph.pixels(); ++k) {
    const Eigen::RowVectorXd row = sig.data.row(static_cast<Eigen::Index>(k));
    if (atoms[k] < 0)
      EXPECT_EQ(row.squaredNorm(), 0.0);
    else
      EXPECT_EQ(row, d.entries.row(atoms[k]).cast<double>());
  }
}

TEST(Simulate, EmpiricalSnrMatchesRequest) {
  const auto& d = small_dict();
  const auto ph = make_phantom(uniform_labels(32, 32, 2), test_table(), d.grid);
  const auto atoms = phantom_atoms(ph, d.grid);
  for (double snr : {1.0, 4.0}) {
    const auto sig = simulate_signals(ph, d, snr, 11);
    double noise_power = 0.0;
    const auto clean = d.entries.row(atoms[0]).cast<double>().eval();
    for (std::size_t k = 0; k < ph.pixels(); ++k)
      noise_power += (sig.data.row(static_cast<Eigen::Index>(k)) - clean).squaredNorm();
    const double n = static_cast<double>(d.curve_length());
    const double sigma = std::sqrt(noise_power / (n * static_cast<double>(ph.pixels())));
    const double measured = clean.norm() / (sigma * std::sqrt(n));
    EXPECT_NEAR(measured / snr, 1.0, 0.05) << "snr " << snr;
  }
}

TEST(Simulate, SeededAndReproducible) {
  const auto& d = small_dict();
  const auto ph = make_phantom(builtin_labels(16, 16), test_table(), d.grid);
  const auto a = simulate_signals(ph, d, 1.0, 5);
  const auto b = simulate_signals(ph, d, 1.0, 5);
  const auto c = simulate_signals(ph, d, 1.0, 6);
  EXPECT_EQ(a.data, b.data);
  EXPECT_NE(a.data, c.data);
}

TEST(Simulate, BackgroundIsPureNoise) {
  const auto& d = small_dict();
  const auto ph = make_phantom(builtin_labels(16, 16), test_table(), d.grid);
  const auto sig = simulate_signals(ph, d, 1.0, 2);
  EXPECT_GT(sig.data.row(0).norm(), 0.0);
  EXPECT_EQ(ph.labels[0], 0);
}

TEST(Simulate, Errors) {
  const auto& d = small_dict();
  auto ph = make_phantom(builtin_labels(16, 16), test_table(), d.grid);
  EXPECT_THROW(simulate_signals(ph, d, 0.0, 1), DomainError);
  EXPECT_THROW(simulate_signals(ph, d, -1.0, 1), DomainError);
  ph.t1_true[16 * 8 + 8] = 812.5;
  EXPECT_THROW(simulate_signals(ph, d, 1.0, 1), DomainError);
}

// ---------------------------------------------------------------------------
// match

TEST(Match, NoiselessSelfMatchRecoversEveryAtom) {
  const auto& d = small_dict();
  SignalImage sig{d.n_atoms(), 1, d.entries.cast<double>()};
  const auto r = match(sig, d);
  for (std::size_t a = 0; a < d.n_atoms(); ++a) ASSERT_EQ(r.index[a], static_cast<std::int64_t>(a));
  EXPECT_EQ(r.t1[3], d.grid.atoms()[3].t1);
  EXPECT_EQ(r.b1[3], d.grid.atoms()[3].b1);
}

TEST(Match, EqualsBruteForceOracleJointAndFixed) {
  const auto& d = small_dict();
  B1Field f;
  for (std::size_t k = 0; k < 256; ++k) f.map.push_back(d.grid.b1_values()[k % 4]);
  const auto ph = make_phantom(builtin_labels(16, 16), test_table(), d.grid, f);
  const auto sig = simulate_signals(ph, d, 1.0, 42);
  const auto joint = match(sig, d, MatchMode::joint());
  const auto fixed = match(sig, d, MatchMode::fixed(0.9));
  const auto [lo, hi] = d.grid.b1_slice(*d.grid.b1_index(0.9));
  for (std::size_t k = 0; k < ph.pixels(); ++k) {
    const Eigen::RowVectorXd s = sig.data.row(static_cast<Eigen::Index>(k));
    ASSERT_EQ(joint.index[k], oracle_match(s, d, 0, d.n_atoms())) << "pixel " << k;
    ASSERT_EQ(fixed.index[k], oracle_match(s, d, lo, hi)) << "pixel " << k;
    ASSERT_EQ(fixed.b1[k], 0.9);
  }
}

TEST(Match, InvariantToPositiveScaling) {
  const auto& d = small_dict();
  const auto ph = make_phantom(builtin_labels(16, 16), test_table(), d.grid);
  auto sig = simulate_signals(ph, d, 1.0, 3);
  const auto a = match(sig, d);
  sig.data *= 2.5;
  EXPECT_EQ(match(sig, d).index, a.index);
}

TEST(Match, TiesGoToLowestIndex) {
  Dictionary d = small_dict();
  d.entries.row(7) = d.entries.row(3) * 2.0f;
  d.entries.row(9) = d.entries.row(3);
  normalize_rows(d);
  SignalImage sig{1, 1, d.entries.row(9).cast<double>()};
  EXPECT_EQ(match(sig, d).index[0], 3);
}

TEST(Match, ZeroSignalAndMaskAreUnmatched) {
  const auto& d = small_dict();
  SignalImage sig{3, 1, RowMatrixD::Zero(3, static_cast<Eigen::Index>(d.curve_length()))};
  sig.data.row(1) = d.entries.row(5).cast<double>();
  sig.data.row(2) = d.entries.row(6).cast<double>();
  const auto r = match(sig, d, MatchMode::joint(), {1, 1, 0});
  EXPECT_EQ(r.index, (std::vector<std::int64_t>{-1, 5, -1}));
  EXPECT_EQ(r.matched, (std::vector<std::uint8_t>{0, 1, 0}));
}

TEST(Match, SkipsInvalidAtoms) {
  Dictionary d = small_dict();
  d.entries.row(0).setZero();
  normalize_rows(d);
  SignalImage sig{1, 1, small_dict().entries.row(0).cast<double>()};
  EXPECT_NE(match(sig, d).index[0], 0);
}

TEST(Match, Errors) {
  const auto& d = small_dict();
  SignalImage sig{1, 1, RowMatrixD::Ones(1, 5)};
  EXPECT_THROW(match(sig, d), DomainError);
  SignalImage ok{1, 1, d.entries.row(0).cast<double>()};
  EXPECT_THROW(match(ok, d, MatchMode::fixed(0.75)), DomainError);
  EXPECT_THROW(match(ok, d, MatchMode::joint(), {1, 1}), DomainError);
}

TEST(MatchMode, ParseAndPrint) {
  EXPECT_FALSE(MatchMode::parse("joint").fixed_b1);
  const auto m = MatchMode::parse("fixed-b1=1.0");
  EXPECT_TRUE(m.fixed_b1);
  EXPECT_EQ(m.b1, 1.0);
  EXPECT_EQ(m.to_string(), "fixed-b1=1");
  EXPECT_EQ(MatchMode::parse(m.to_string()).b1, 1.0);
  EXPECT_THROW(MatchMode::parse("fixed"), ConfigError);
  EXPECT_THROW(MatchMode::parse("fixed-b1=abc"), ConfigError);
  EXPECT_THROW(MatchMode::parse("fixed-b1=-1"), ConfigError);
}

// ---------------------------------------------------------------------------
// error_maps and tissue_errors

namespace {

Phantom tiny_phantom() {
  Phantom ph;
  ph.width = 2;
  ph.height = 2;
  ph.labels = {1, 1, 2, 0};
  ph.t1_true = {800.0, 800.0, 1300.0, 0.0};
  ph.t2_true = {80.0, 80.0, 110.0, 0.0};
  ph.b1_true = {1.0, 1.0, 1.0, 1.0};
  ph.table = {{{1, "wm", 800.0, 80.0}, {2, "gm", 1300.0, 110.0}}};
  return ph;
}

MatchReport report_with(const std::vector<double>& t1, const std::vector<double>& t2) {
  MatchReport r;
  r.width = 2;
  r.height = 2;
  r.t1 = t1;
  r.t2 = t2;
  r.b1.assign(4, 1.0);
  r.index = {0, 1, 2, 3};
  r.matched = {1, 1, 1, 1};
  return r;
}

} // namespace

TEST(ErrorMaps, HandComputedTwoByTwo) {
  const auto ph = tiny_phantom();
  auto r = report_with({800.0, 1600.0, 1040.0, 500.0}, {60.0, 80.0, 121.0, 7.0});
  error_maps(r, ph);
  EXPECT_DOUBLE_EQ(r.e1[0], 0.0);
  EXPECT_DOUBLE_EQ(r.e1[1], 100.0);
  EXPECT_DOUBLE_EQ(r.e1[2], 20.0);
  EXPECT_DOUBLE_EQ(r.e2[0], 25.0);
  EXPECT_DOUBLE_EQ(r.e2[1], 0.0);
  EXPECT_DOUBLE_EQ(r.e2[2], 10.0);
  EXPECT_EQ(r.e1[3], 0.0); // background
  for (double e : r.e1) EXPECT_GE(e, 0.0);
}

TEST(TissueErrors, PerfectMapsGiveZero) {
  const auto ph = tiny_phantom();
  auto r = report_with(ph.t1_true, ph.t2_true);
  tissue_errors(r, ph);
  ASSERT_EQ(r.tissues.size(), 2u);
  for (const auto& e : r.tissues) {
    EXPECT_EQ(e.e1, 0.0);
    EXPECT_EQ(e.e2, 0.0);
  }
}

TEST(TissueErrors, UniformBiasGivesBias) {
  const auto ph = tiny_phantom();
  auto r = report_with({880.0, 880.0, 1430.0, 0.0}, {88.0, 88.0, 121.0, 0.0});
  tissue_errors(r, ph);
  for (const auto& e : r.tissues) {
    EXPECT_NEAR(e.e1, 10.0, 1e-12);
    EXPECT_NEAR(e.e2, 10.0, 1e-12);
  }
}

TEST(TissueErrors, CancellingErrorsGiveZeroMeanError) {
  const auto ph = tiny_phantom();
  auto r = report_with({600.0, 1000.0, 1300.0, 0.0}, {40.0, 120.0, 110.0, 0.0});
  error_maps(r, ph);
  tissue_errors(r, ph);
  EXPECT_DOUBLE_EQ(r.e1[0], 25.0);
  EXPECT_DOUBLE_EQ(r.e2[1], 50.0);
  EXPECT_EQ(r.tissues[0].label, 1);
  EXPECT_NEAR(r.tissues[0].e1, 0.0, 1e-12);
  EXPECT_NEAR(r.tissues[0].e2, 0.0, 1e-12);
  EXPECT_EQ(r.tissues[0].pixels, 2u);
}

TEST(TissueErrors, UnmatchedPixelsExcludedAndEmptyLabelRejected) {
  const auto ph = tiny_phantom();
  auto r = report_with({800.0, 5000.0, 1300.0, 0.0}, {80.0, 80.0, 110.0, 0.0});
  r.matched[1] = 0;
  tissue_errors(r, ph);
  EXPECT_EQ(r.tissues[0].pixels, 1u);
  EXPECT_EQ(r.tissues[0].e1, 0.0);
  r.matched[2] = 0;
  EXPECT_THROW(tissue_errors(r, ph), DomainError);
}

TEST(TissueErrors, NoiselessPipelineGivesZeroForEveryLabel) {
  const auto& d = small_dict();
  const auto ph = make_phantom(builtin_labels(32, 32), test_table(), d.grid);
  const auto sig = simulate_signals(ph, d, std::numeric_limits<double>::infinity(), 1);
  auto r = match(sig, d, MatchMode::joint(), tissue_mask(ph));
  error_maps(r, ph);
  tissue_errors(r, ph);
  ASSERT_EQ(r.tissues.size(), 3u);
  for (const auto& e : r.tissues) {
    EXPECT_EQ(e.e1, 0.0);
    EXPECT_EQ(e.e2, 0.0);
  }
  for (std::size_t k = 0; k < ph.pixels(); ++k) EXPECT_EQ(r.matched[k], ph.is_tissue(k) ? 1 : 0);
}

TEST(Report, CsvRows) {
  const auto ph = tiny_phantom();
  auto r = report_with({880.0, 880.0, 1430.0, 0.0}, {88.0, 88.0, 121.0, 0.0});
  r.snr = 1.0;
  r.seed = 9;
  tissue_errors(r, ph);
  const auto rows = tissue_csv_rows(r);
  EXPECT_EQ(rows.substr(0, 9), "1,wm,2,80");
  EXPECT_NE(rows.find(",1,9,joint\n"), std::string::npos);
  EXPECT_EQ(std::count(rows.begin(), rows.end(), '\n'), 2);
  error_maps(r, ph);
  const auto px = pixel_csv(r, ph);
  EXPECT_EQ(std::count(px.begin(), px.end(), '\n'), 5);
}
