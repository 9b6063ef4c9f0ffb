#include "ellidyn/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <tuple>

namespace ellidyn {

namespace {

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream ss(s);
  std::vector<std::string> out;
  for (std::string tok; ss >> tok;) out.push_back(tok);
  return out;
}

bool is_blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool is_decimal(const std::string& s, bool allow_sign) {
  std::size_t i = 0;
  if (allow_sign && !s.empty() && (s[0] == '-' || s[0] == '+')) i = 1;
  if (i >= s.size()) return false;
  return std::all_of(s.begin() + static_cast<long>(i), s.end(),
                     [](unsigned char c) { return std::isdigit(c); });
}

std::uint64_t parse_unsigned(const std::string& s, std::size_t line_no, const char* what) {
  if (!is_decimal(s, false)) throw ParseError(line_no, std::string("non-integer ") + what);
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    throw ParseError(line_no, std::string("out-of-range ") + what);
  }
}

BigInt parse_bigint(const std::string& s, std::size_t line_no) {
  const std::string t = trim(s);
  if (!is_decimal(t, true)) throw ParseError(line_no, "non-integer a-invariant '" + t + "'");
  if (t[0] == '+') return BigInt(t.substr(1));
  return BigInt(t);
}

bool is_class_name(const std::string& s) {
  return !s.empty() &&
         std::all_of(s.begin(), s.end(), [](unsigned char c) { return c >= 'a' && c <= 'z'; });
}

std::string join_csv_row(const CurveRecord& r) {
  std::ostringstream os;
  os << r.label << ',' << r.conductor << ',' << r.isogeny_class << ',' << r.class_index;
  for (const auto& a : r.a_invariants) os << ',' << a;
  os << ',' << r.rank << ',' << r.torsion;
  return os.str();
}

constexpr const char* kCsvHeader = "label,conductor,class,index,a1,a2,a3,a4,a6,rank,torsion";

}  // namespace

WeierstrassCurve CurveRecord::curve() const {
  WeierstrassCurve c;
  c.a = a_invariants;
  c.label = label;
  c.conductor = conductor;
  return c;
}

std::string make_label(std::uint64_t conductor, const std::string& isogeny_class,
                       unsigned class_index) {
  return std::to_string(conductor) + isogeny_class + std::to_string(class_index);
}

std::optional<LabelParts> split_label(const std::string& label) {
  std::size_t i = 0;
  while (i < label.size() && std::isdigit(static_cast<unsigned char>(label[i]))) ++i;
  std::size_t j = i;
  while (j < label.size() && label[j] >= 'a' && label[j] <= 'z') ++j;
  if (i == 0 || j == i || j == label.size()) return std::nullopt;
  const std::string idx = label.substr(j);
  if (!is_decimal(idx, false)) return std::nullopt;
  return LabelParts{std::stoull(label.substr(0, i)), label.substr(i, j - i),
                    static_cast<unsigned>(std::stoul(idx))};
}

bool cremona_less(const CurveRecord& lhs, const CurveRecord& rhs) {
  return std::forward_as_tuple(lhs.conductor, lhs.isogeny_class.size(), lhs.isogeny_class,
                               lhs.class_index) <
         std::forward_as_tuple(rhs.conductor, rhs.isogeny_class.size(), rhs.isogeny_class,
                               rhs.class_index);
}

CurveRecord parse_allcurves_line(const std::string& line, std::size_t line_no) {
  const auto open = line.find('[');
  const auto close = line.find(']');
  if (open == std::string::npos || close == std::string::npos || close < open ||
      line.find('[', open + 1) != std::string::npos ||
      line.find(']', close + 1) != std::string::npos) {
    throw ParseError(line_no, "unbalanced brackets");
  }
  const auto head = split_ws(line.substr(0, open));
  const auto tail = split_ws(line.substr(close + 1));
  if (head.size() != 3 || tail.size() != 2) {
    throw ParseError(line_no, "expected 6 fields: N class index [a1,a2,a3,a4,a6] rank torsion");
  }

  std::vector<std::string> inner;
  {
    std::string body = line.substr(open + 1, close - open - 1);
    std::size_t start = 0;
    for (;;) {
      const auto comma = body.find(',', start);
      inner.push_back(body.substr(start, comma == std::string::npos ? std::string::npos
                                                                    : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
  if (inner.size() != 5) throw ParseError(line_no, "expected 5 a-invariants");

  CurveRecord r;
  r.conductor = parse_unsigned(head[0], line_no, "conductor");
  if (r.conductor == 0) throw ParseError(line_no, "conductor must be positive");
  if (!is_class_name(head[1])) throw ParseError(line_no, "isogeny class must be lowercase letters");
  r.isogeny_class = head[1];
  r.class_index = static_cast<unsigned>(parse_unsigned(head[2], line_no, "class index"));
  for (std::size_t i = 0; i < 5; ++i) r.a_invariants[i] = parse_bigint(inner[i], line_no);
  r.rank = static_cast<unsigned>(parse_unsigned(tail[0], line_no, "rank"));
  r.torsion = static_cast<unsigned>(parse_unsigned(tail[1], line_no, "torsion"));
  r.label = make_label(r.conductor, r.isogeny_class, r.class_index);
  if (standard_invariants(r.curve()).discriminant == 0) {
    throw ParseError(line_no, "singular model (discriminant 0)");
  }
  return r;
}

ParseResult parse_allcurves(std::istream& in, ParseMode mode) {
  ParseResult result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    try {
      result.records.push_back(parse_allcurves_line(line, line_no));
    } catch (const ParseError& e) {
      if (mode == ParseMode::strict) throw;
      result.errors.push_back(e);
    }
  }
  return result;
}

std::string format_allcurves_line(const CurveRecord& r) {
  std::ostringstream os;
  os << r.conductor << ' ' << r.isogeny_class << ' ' << r.class_index << " [";
  for (std::size_t i = 0; i < 5; ++i) os << (i ? "," : "") << r.a_invariants[i];
  os << "] " << r.rank << ' ' << r.torsion;
  return os.str();
}

void write_curve_csv(std::ostream& out, const std::vector<CurveRecord>& records) {
  out << kCsvHeader << '\n';
  for (const auto& r : records) out << join_csv_row(r) << '\n';
}

std::vector<CurveRecord> read_curve_csv(std::istream& in) {
  std::vector<CurveRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line != kCsvHeader) throw ParseError(1, "unexpected curve CSV header");
      continue;
    }
    if (is_blank(line)) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 11) throw ParseError(line_no, "expected 11 CSV fields");
    CurveRecord r;
    r.label = f[0];
    r.conductor = parse_unsigned(f[1], line_no, "conductor");
    if (!is_class_name(f[2])) throw ParseError(line_no, "isogeny class must be lowercase letters");
    r.isogeny_class = f[2];
    r.class_index = static_cast<unsigned>(parse_unsigned(f[3], line_no, "class index"));
    for (std::size_t i = 0; i < 5; ++i) r.a_invariants[i] = parse_bigint(f[4 + i], line_no);
    r.rank = static_cast<unsigned>(parse_unsigned(f[9], line_no, "rank"));
    r.torsion = static_cast<unsigned>(parse_unsigned(f[10], line_no, "torsion"));
    if (r.label != make_label(r.conductor, r.isogeny_class, r.class_index)) {
      throw ParseError(line_no, "label does not match conductor/class/index");
    }
    out.push_back(std::move(r));
  }
  return out;
}

void write_curve_csv_file(const std::string& path, const std::vector<CurveRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  write_curve_csv(out, records);
}

std::vector<CurveRecord> read_curve_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  return read_curve_csv(in);
}

std::vector<CurveRecord> filter_population(const std::vector<CurveRecord>& records,
                                           const PopulationFilter& filter) {
  std::vector<CurveRecord> kept;
  std::set<std::string> labels;
  for (const auto& r : records) {
    if (r.conductor > filter.max_conductor) continue;
    if (filter.semistable_only && !is_squarefree(r.conductor)) continue;
    if (!labels.insert(r.label).second) continue;
    kept.push_back(r);
  }
  std::sort(kept.begin(), kept.end(), cremona_less);
  if (filter.one_per_class) {
    std::vector<CurveRecord> firsts;
    std::set<std::pair<std::uint64_t, std::string>> seen;
    for (auto& r : kept) {
      if (seen.emplace(r.conductor, r.isogeny_class).second) firsts.push_back(std::move(r));
    }
    kept = std::move(firsts);
  }
  return kept;
}

std::vector<CurveRecord> draw_sample(const std::vector<CurveRecord>& records,
                                     const SamplePlan& plan) {
  if (plan.sample_size == 0) throw SampleError("sample size must be positive");
  const auto population = filter_population(records, plan.population_filter);
  if (population.size() < plan.sample_size) {
    throw SampleError("population of " + std::to_string(population.size()) +
                      " is smaller than sample size " + std::to_string(plan.sample_size));
  }
  const std::size_t stride = population.size() / plan.sample_size;
  std::size_t start = 0;
  if (plan.stride_offset) {
    if (*plan.stride_offset >= stride) throw SampleError("stride offset outside [0, stride)");
    start = *plan.stride_offset;
  } else {
    std::mt19937_64 engine(plan.rng_seed);
    start = static_cast<std::size_t>(uniform_below(engine, stride));
  }
  std::vector<CurveRecord> sample;
  sample.reserve(plan.sample_size);
  for (std::size_t i = 0; i < plan.sample_size; ++i) sample.push_back(population[start + i * stride]);
  return sample;
}

}  // namespace ellidyn
