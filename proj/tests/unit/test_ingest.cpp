#include <gtest/gtest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "ellidyn/errors.hpp"
#include "ellidyn/ingest.hpp"
#include "test_paths.hpp"

using namespace ellidyn;

namespace {

std::vector<CurveRecord> parse_text(const std::string& text, ParseMode mode = ParseMode::lenient) {
  std::istringstream in(text);
  return parse_allcurves(in, mode).records;
}

const std::vector<CurveRecord>& database() {
  static const std::vector<CurveRecord> records = [] {
    std::ifstream in(test_paths::allcurves());
    return parse_allcurves(in, ParseMode::strict).records;
  }();
  return records;
}

}  // namespace

TEST(ParseAllcurves, ReadsEveryField) {
  const auto r = parse_allcurves_line("11 a 1 [0,-1,1,-10,-20] 0 5", 1);
  EXPECT_EQ(r.conductor, 11u);
  EXPECT_EQ(r.isogeny_class, "a");
  EXPECT_EQ(r.class_index, 1u);
  EXPECT_EQ((std::array<BigInt, 5>{0, -1, 1, -10, -20}), r.a_invariants);
  EXPECT_EQ(r.rank, 0u);
  EXPECT_EQ(r.torsion, 5u);
  EXPECT_EQ(r.label, "11a1");
}

TEST(ParseAllcurves, SkipsBlankLines) {
  EXPECT_TRUE(parse_text("").empty());
  EXPECT_EQ(parse_text("\n11 a 1 [0,-1,1,-10,-20] 0 5\n\n").size(), 1u);
}

TEST(ParseAllcurves, ArityViolation) {
  try {
    parse_allcurves_line("11 a 1 [0,-1,1,-10] 0 5", 1);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line_no(), 1u);
    EXPECT_EQ(e.reason(), "expected 5 a-invariants");
  }
}

TEST(ParseAllcurves, ToleratesSpacesInsideBrackets) {
  const auto r = parse_allcurves_line("37  a  1  [0, 0, 1, -1, 0]  1  1", 3);
  EXPECT_EQ(r.label, "37a1");
  EXPECT_EQ(r.rank, 1u);
}

TEST(ParseAllcurves, LenientCollectsStrictThrows) {
  const std::string text =
      "11 a 1 [0,-1,1,-10,-20] 0 5\n"
      "11 a 2 [0,-1,1,-7820,-263580 0 1\n"
      "11 a x [0,-1,1,0,0] 0 5\n"
      "14 a 1 [1,0,1,4,-6] 0 6\n";
  std::istringstream in(text);
  const auto res = parse_allcurves(in, ParseMode::lenient);
  ASSERT_EQ(res.records.size(), 2u);
  EXPECT_EQ(res.records[1].label, "14a1");
  ASSERT_EQ(res.errors.size(), 2u);
  EXPECT_EQ(res.errors[0].line_no(), 2u);
  EXPECT_EQ(res.errors[1].line_no(), 3u);

  std::istringstream again(text);
  EXPECT_THROW(parse_allcurves(again, ParseMode::strict), ParseError);
}

TEST(ParseAllcurves, RejectsSingularModel) {
  EXPECT_THROW(parse_allcurves_line("11 a 1 [0,0,0,0,0] 0 1", 1), ParseError);
}

TEST(ParseAllcurves, RoundTripsTheDatabase) {
  std::ifstream in(test_paths::allcurves());
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ws(line);
    std::string normalized, tok;
    while (ws >> tok) normalized += (normalized.empty() ? "" : " ") + tok;
    ASSERT_EQ(format_allcurves_line(parse_allcurves_line(line, ++n)), normalized);
  }
  EXPECT_EQ(n, database().size());
}

TEST(Labels, RoundTrip) {
  for (const auto& r : database()) {
    const auto parts = split_label(r.label);
    ASSERT_TRUE(parts);
    ASSERT_EQ(parts->conductor, r.conductor);
    ASSERT_EQ(parts->isogeny_class, r.isogeny_class);
    ASSERT_EQ(parts->class_index, r.class_index);
    ASSERT_EQ(make_label(r.conductor, r.isogeny_class, r.class_index), r.label);
  }
  EXPECT_FALSE(split_label("a11"));
  EXPECT_FALSE(split_label("11a"));
}

TEST(Labels, CremonaOrder) {
  const auto z = parse_allcurves_line("960 z 1 [0,1,0,-1,0] 0 1", 1);
  const auto ba = parse_allcurves_line("960 ba 1 [0,1,0,-1,0] 0 1", 1);
  EXPECT_TRUE(cremona_less(z, ba));
  EXPECT_FALSE(cremona_less(ba, z));
}

TEST(CurveCsv, RoundTrip) {
  std::vector<CurveRecord> some(database().begin(), database().begin() + 50);
  std::stringstream ss;
  write_curve_csv(ss, some);
  const auto back = read_curve_csv(ss);
  ASSERT_EQ(back.size(), some.size());
  for (std::size_t i = 0; i < some.size(); ++i) {
    EXPECT_EQ(back[i].label, some[i].label);
    EXPECT_EQ(back[i].a_invariants, some[i].a_invariants);
    EXPECT_EQ(back[i].torsion, some[i].torsion);
  }
}

TEST(Population, FilterRespectsFlags) {
  PopulationFilter f;
  f.max_conductor = 100;
  const auto classes = filter_population(database(), f);
  std::set<std::pair<std::uint64_t, std::string>> seen;
  for (const auto& r : classes) {
    EXPECT_LE(r.conductor, 100u);
    EXPECT_TRUE(is_squarefree(r.conductor));
    EXPECT_EQ(r.class_index, 1u);
    EXPECT_TRUE(seen.emplace(r.conductor, r.isogeny_class).second);
  }
  f.one_per_class = false;
  EXPECT_GT(filter_population(database(), f).size(), classes.size());
}

TEST(DrawSample, WholePopulationWhenSizesMatch) {
  PopulationFilter f;
  f.max_conductor = 60;
  const auto pop = filter_population(database(), f);
  SamplePlan plan{f, pop.size(), 99, std::nullopt};
  const auto s = draw_sample(database(), plan);
  ASSERT_EQ(s.size(), pop.size());
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(s[i].label, pop[i].label);
}

TEST(DrawSample, StrideWithFixedStart) {
  const auto recs = parse_text(
      "17 a 1 [1,-1,1,-1,-14] 0 4\n"
      "11 a 1 [0,-1,1,-10,-20] 0 5\n"
      "15 a 1 [1,1,1,-10,-10] 0 8\n"
      "14 a 1 [1,0,1,4,-6] 0 6\n");
  SamplePlan plan;
  plan.population_filter.max_conductor = 20;
  plan.sample_size = 2;
  plan.stride_offset = 1;
  const auto s = draw_sample(recs, plan);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].label, "14a1");
  EXPECT_EQ(s[1].label, "17a1");
}

TEST(DrawSample, TooFewCurves) {
  SamplePlan plan;
  plan.population_filter.max_conductor = 11;
  plan.sample_size = 2;
  EXPECT_THROW(draw_sample(database(), plan), SampleError);
}

TEST(DrawSample, FrozenSeedSample) {
  const auto s = draw_sample(database(), SamplePlan{});
  const auto golden = read_curve_csv_file(test_paths::golden("sample_20081231.csv"));
  ASSERT_EQ(s.size(), 30u);
  ASSERT_EQ(golden.size(), 30u);
  for (std::size_t i = 0; i < 30; ++i) EXPECT_EQ(s[i].label, golden[i].label);
  for (const auto& r : s) {
    EXPECT_LE(r.conductor, 1000u);
    EXPECT_TRUE(is_semistable(r.curve()));
  }
  EXPECT_EQ(draw_sample(database(), SamplePlan{})[7].label, s[7].label);
}
