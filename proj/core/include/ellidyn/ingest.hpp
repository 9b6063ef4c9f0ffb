#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ellidyn/curve.hpp"
#include "ellidyn/errors.hpp"

namespace ellidyn {

// One row of a Cremona allcurves table.
struct CurveRecord {
  std::uint64_t conductor = 0;
  std::string isogeny_class;
  unsigned class_index = 0;
  std::array<BigInt, 5> a_invariants{};
  unsigned rank = 0;
  unsigned torsion = 0;
  std::string label;

  WeierstrassCurve curve() const;
};

std::string make_label(std::uint64_t conductor, const std::string& isogeny_class,
                       unsigned class_index);

struct LabelParts {
  std::uint64_t conductor;
  std::string isogeny_class;
  unsigned class_index;
};
std::optional<LabelParts> split_label(const std::string& label);

// Cremona order: conductor, then class (shorter first, "z" < "ba"), then index.
bool cremona_less(const CurveRecord& lhs, const CurveRecord& rhs);

enum class ParseMode { lenient, strict };

struct ParseResult {
  std::vector<CurveRecord> records;
  std::vector<ParseError> errors;
};

// Strict mode throws the first ParseError; lenient mode collects them.
ParseResult parse_allcurves(std::istream& in, ParseMode mode = ParseMode::lenient);
CurveRecord parse_allcurves_line(const std::string& line, std::size_t line_no);

// Canonical allcurves line: single spaces, no spaces inside brackets.
std::string format_allcurves_line(const CurveRecord& record);

// Curve database CSV (db.csv / sample.csv).
void write_curve_csv(std::ostream& out, const std::vector<CurveRecord>& records);
std::vector<CurveRecord> read_curve_csv(std::istream& in);
void write_curve_csv_file(const std::string& path, const std::vector<CurveRecord>& records);
std::vector<CurveRecord> read_curve_csv_file(const std::string& path);

struct PopulationFilter {
  std::uint64_t max_conductor = 1000;
  bool semistable_only = true;
  bool one_per_class = true;
};

std::vector<CurveRecord> filter_population(const std::vector<CurveRecord>& records,
                                           const PopulationFilter& filter);

struct SamplePlan {
  PopulationFilter population_filter;
  std::size_t sample_size = 30;
  std::uint64_t rng_seed = 20081231;
  // Fixed start position in [0, stride); drawn from the seeded generator when empty.
  std::optional<std::size_t> stride_offset;
};

// Systematic sample with a seeded random start over the filtered, sorted population.
std::vector<CurveRecord> draw_sample(const std::vector<CurveRecord>& records,
                                     const SamplePlan& plan);

// Uniform integer in [0, bound) by rejection on a 64-bit Mersenne Twister draw.
template <typename Engine>
std::uint64_t uniform_below(Engine& engine, std::uint64_t bound) {
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  for (;;) {
    const std::uint64_t draw = engine();
    if (draw < limit) return draw % bound;
  }
}

}  // namespace ellidyn
