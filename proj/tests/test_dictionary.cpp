#include <mrfviz/dictionary.hpp>

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace mrfviz;

namespace {

SequenceDescriptor tse_descriptor() {
  SequenceDescriptor s;
  s.name = "tse";
  s.kind = SequenceKind::tse;
  s.classical = ClassicalTiming::tse(1500.0, 10.0, 1000.0);
  return s;
}

SequenceDescriptor short_mrf(std::size_t n = 60) {
  SequenceDescriptor s;
  s.name = "mrf-test";
  s.kind = SequenceKind::epg_fisp;
  for (std::size_t i = 0; i < n; ++i) s.mrf.flip_train.push_back(10.0 + 50.0 * std::sin(0.05 * i) * std::sin(0.05 * i));
  return s;
}

std::string tmp(const std::string& name) { return (std::filesystem::temp_directory_path() / name).string(); }

} // namespace

TEST(Grid, FullScaleAxisCounts) {
  EXPECT_EQ(AxisRange::parse("20:30:5000").values().size(), 167u);
  EXPECT_EQ(AxisRange::parse("10:10:1000").values().size(), 100u);
  const auto b1 = AxisRange::parse("0.4:0.1:1.3").values();
  ASSERT_EQ(b1.size(), 10u);
  EXPECT_EQ(b1[6], 1.0);
  EXPECT_EQ(b1.back(), 1.3);
}

TEST(Grid, AtomCountMatchesPairEnumeration) {
  const auto t1 = AxisRange::parse("20:30:5000").values();
  const auto t2 = AxisRange::parse("10:10:1000").values();
  std::size_t brute = 0;
  for (double a : t1)
    for (double b : t2)
      if (a > b) ++brute;
  const ParameterGrid g(t1, t2);
  EXPECT_EQ(g.size(), brute);
  for (const auto& atom : g.atoms()) EXPECT_GT(atom.t1, atom.t2);

  const ParameterGrid gb(t1, t2, AxisRange::parse("0.4:0.1:1.3").values());
  EXPECT_EQ(gb.size(), 10 * brute);
}

TEST(Grid, RowMajorOrderAndSlices) {
  const ParameterGrid g({100.0, 200.0}, {50.0, 150.0}, {0.5, 1.0});
  // b1 outer, t1, t2 inner; (100,150) is excluded.
  ASSERT_EQ(g.size(), 6u);
  EXPECT_EQ(g.atoms()[0], (Atom{100.0, 50.0, 0.5}));
  EXPECT_EQ(g.atoms()[1], (Atom{200.0, 50.0, 0.5}));
  EXPECT_EQ(g.atoms()[2], (Atom{200.0, 150.0, 0.5}));
  EXPECT_EQ(g.atoms()[3], (Atom{100.0, 50.0, 1.0}));
  EXPECT_EQ(g.b1_slice(1), (std::pair<std::size_t, std::size_t>{3, 6}));
  EXPECT_EQ(g.atom_at(0, 0, 1), -1);
  EXPECT_EQ(g.atom_at(1, 1, 1), 5);
}

TEST(Grid, RejectsMalformedRanges) {
  EXPECT_THROW(AxisRange::parse("5:1:2").values(), DomainError);
  EXPECT_THROW(AxisRange::parse("1:0:2").values(), DomainError);
  EXPECT_THROW(AxisRange::parse("1:2").values(), DomainError);
  EXPECT_THROW(AxisRange::parse("x").values(), DomainError);
  EXPECT_THROW(ParameterGrid({}, {1.0}), DomainError);
  EXPECT_THROW(ParameterGrid({2.0, 1.0}, {1.0}), DomainError);
}

TEST(Dictionary, SingleAtomDelegatesToModel) {
  const ParameterGrid g({800.0}, {80.0});
  const auto d = build_dictionary(g, tse_descriptor());
  const auto ref = tse_signal({800.0, 80.0}, tse_descriptor().classical);
  ASSERT_EQ(d.curve_length(), ref.size());
  for (std::size_t j = 0; j < ref.size(); ++j) EXPECT_EQ(d.entries(0, static_cast<Eigen::Index>(j)), static_cast<float>(ref[j]));
}

TEST(Dictionary, UnitRowsAndDeterminism) {
  const ParameterGrid g(AxisRange::parse("100:300:2000").values(), AxisRange::parse("20:40:400").values(),
                        {0.7, 1.0});
  const auto a = build_dictionary(g, short_mrf());
  const auto b = build_dictionary(g, short_mrf());
  EXPECT_TRUE(a == b);
  EXPECT_EQ(a.n_atoms(), g.size());
  for (std::size_t i = 0; i < a.n_atoms(); ++i) {
    ASSERT_TRUE(a.valid[i]);
    EXPECT_NEAR(a.entries_unit.row(static_cast<Eigen::Index>(i)).norm(), 1.0, 1e-9);
  }
}

TEST(Dictionary, ZeroCurvesFlaggedInvalid) {
  auto seq = short_mrf(5);
  seq.mrf.flip_train.assign(5, 0.0);
  seq.mrf.inversion = false;
  const auto d = build_dictionary(ParameterGrid({500.0}, {50.0}), seq);
  EXPECT_FALSE(d.valid[0]);
}

TEST(Dictionary, AnnotatesAtomOnModelError) {
  auto seq = short_mrf();
  seq.mrf.flip_train[3] = 270.0;
  try {
    build_dictionary(ParameterGrid({500.0}, {50.0}), seq);
    FAIL() << "expected DomainError";
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("atom 0"), std::string::npos);
  }
}

TEST(Dictionary, Truncation) {
  const ParameterGrid g({300.0, 900.0, 2000.0}, {30.0, 90.0});
  const auto d = build_dictionary(g, short_mrf(100));
  EXPECT_TRUE(truncate(d, 100) == d);
  const auto t40 = truncate(d, 40);
  EXPECT_EQ(t40.curve_length(), 40u);
  EXPECT_EQ(t40.meta.truncation, 40u);
  for (std::size_t i = 0; i < t40.n_atoms(); ++i)
    EXPECT_NEAR(t40.entries_unit.row(static_cast<Eigen::Index>(i)).norm(), 1.0, 1e-9);
  EXPECT_TRUE(truncate(truncate(d, 70), 40) == t40);
  EXPECT_THROW(truncate(d, 0), DomainError);
  EXPECT_THROW(truncate(d, 101), DomainError);
}

TEST(Dictionary, B1Subdictionary) {
  const ParameterGrid g({300.0, 900.0}, {30.0, 90.0}, {0.5, 1.0});
  const auto d = build_dictionary(g, short_mrf(30));
  const auto sub = b1_subdictionary(d, 1.0);
  const auto direct = build_dictionary(ParameterGrid({300.0, 900.0}, {30.0, 90.0}, {1.0}), short_mrf(30));
  EXPECT_TRUE(sub.entries == direct.entries);
  EXPECT_THROW(b1_subdictionary(d, 0.7), DomainError);
}

TEST(DictionaryIo, RoundTripIsBitExact) {
  const ParameterGrid g({300.0, 900.0, 2000.0}, {30.0, 90.0, 1000.0});
  ASSERT_EQ(g.size(), 7u);
  for (const auto& seq : {tse_descriptor(), short_mrf()}) {
    const auto d = build_dictionary(g, seq);
    const auto path = tmp("mrfviz_rt.mrfd");
    save(d, path);
    EXPECT_TRUE(load(path) == d);
  }
  const ParameterGrid three({300.0, 900.0}, {30.0, 600.0});
  ASSERT_EQ(three.size(), 3u);
  const auto d3 = truncate(build_dictionary(three, short_mrf()), 17);
  EXPECT_TRUE(deserialize(serialize(d3)) == d3);
}

TEST(DictionaryIo, HeaderMatchesPayload) {
  const auto d = build_dictionary(ParameterGrid({300.0, 900.0}, {30.0, 600.0}), short_mrf(25));
  const auto bytes = serialize(d);
  const std::uint32_t meta_len = detail::get_u32(bytes, 8);
  const auto meta = nlohmann::json::parse(bytes.substr(12, meta_len));
  EXPECT_EQ(meta["n_atoms"].get<std::size_t>(), 3u);
  EXPECT_EQ(meta["curve_length"].get<std::size_t>(), 25u);
  EXPECT_EQ(bytes.size(), 12 + meta_len + 4 * 3 * 25 + 4);
}

TEST(DictionaryIo, DetectsCorruption) {
  const auto d = build_dictionary(ParameterGrid({300.0, 900.0}, {30.0, 600.0}), short_mrf(25));
  auto bytes = serialize(d);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(deserialize(bad_magic), FormatError);

  auto bad_version = bytes;
  bad_version[4] = 7;
  EXPECT_THROW(deserialize(bad_version), FormatError);

  auto flipped = bytes;
  flipped[bytes.size() - 20] ^= 0x10;
  EXPECT_THROW(deserialize(flipped), FormatError);

  EXPECT_THROW(deserialize(bytes.substr(0, bytes.size() - 9)), FormatError);
  EXPECT_THROW(load(tmp("mrfviz_missing_file.mrfd")), IoError);
}

TEST(DictionaryIo, CsvExport) {
  const auto d = build_dictionary(ParameterGrid({300.0, 900.0}, {30.0, 600.0}), short_mrf(4));
  const auto path = tmp("mrfviz_dict.csv");
  export_csv(d, path);
  std::ifstream in(path);
  std::string header, row;
  std::getline(in, header);
  EXPECT_EQ(header, "t1,t2,b1,s0,s1,s2,s3");
  std::getline(in, row);
  EXPECT_EQ(row.rfind("300,30,1,", 0), 0u);
  std::size_t lines = 1;
  while (std::getline(in, row)) ++lines;
  EXPECT_EQ(lines, 3u);
}
