#include "ellidyn/polydyn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include <boost/multiprecision/cpp_int.hpp>

#include "ellidyn/parallel.hpp"

namespace ellidyn {

namespace {

using Rational = boost::multiprecision::cpp_rational;
using RationalPoly = std::vector<Rational>;  // ascending degree, no trailing zeros

void trim(RationalPoly& p) {
  while (!p.empty() && p.back() == 0) p.pop_back();
}

RationalPoly to_rational(const RealPolynomial& poly) {
  RationalPoly out;
  out.reserve(poly.coeffs.size());
  for (double c : poly.coeffs) out.emplace_back(c);
  trim(out);
  return out;
}

RationalPoly derivative(const RationalPoly& p) {
  RationalPoly out;
  for (std::size_t i = 1; i < p.size(); ++i) out.push_back(p[i] * static_cast<long>(i));
  trim(out);
  return out;
}

RationalPoly monic(RationalPoly p) {
  if (p.empty()) return p;
  const Rational lead = p.back();
  for (auto& c : p) c /= lead;
  return p;
}

RationalPoly remainder(RationalPoly num, const RationalPoly& den) {
  while (num.size() >= den.size() && !num.empty()) {
    const Rational factor = num.back() / den.back();
    const std::size_t shift = num.size() - den.size();
    for (std::size_t i = 0; i < den.size(); ++i) num[shift + i] -= factor * den[i];
    num.pop_back();
    trim(num);
  }
  return num;
}

RationalPoly quotient(RationalPoly num, const RationalPoly& den) {
  if (num.size() < den.size()) return {};
  RationalPoly q(num.size() - den.size() + 1);
  while (num.size() >= den.size() && !num.empty()) {
    const Rational factor = num.back() / den.back();
    const std::size_t shift = num.size() - den.size();
    q[shift] = factor;
    for (std::size_t i = 0; i < den.size(); ++i) num[shift + i] -= factor * den[i];
    num.pop_back();
    trim(num);
  }
  trim(q);
  return q;
}

RationalPoly gcd(RationalPoly a, RationalPoly b) {
  while (!b.empty()) {
    RationalPoly r = remainder(a, b);
    a = std::move(b);
    b = monic(std::move(r));
  }
  return monic(std::move(a));
}

Rational evaluate(const RationalPoly& p, const Rational& x) {
  Rational acc = 0;
  for (std::size_t i = p.size(); i-- > 0;) acc = acc * x + p[i];
  return acc;
}

int sign(const Rational& v) { return v > 0 ? 1 : (v < 0 ? -1 : 0); }

class SturmSequence {
 public:
  explicit SturmSequence(RationalPoly squarefree) {
    chain_.push_back(std::move(squarefree));
    chain_.push_back(derivative(chain_.front()));
    while (!chain_.back().empty() && chain_.back().size() > 1) {
      RationalPoly r = remainder(chain_[chain_.size() - 2], chain_.back());
      if (r.empty()) break;
      for (auto& c : r) c = -c;
      chain_.push_back(std::move(r));
    }
  }

  int variations(double x) const {
    const Rational rx(x);
    int changes = 0;
    int last = 0;
    for (const auto& p : chain_) {
      const int s = sign(evaluate(p, rx));
      if (s == 0) continue;
      if (last != 0 && s != last) ++changes;
      last = s;
    }
    return changes;
  }

  // Roots in (a, b].
  int count(double a, double b) const { return variations(a) - variations(b); }

 private:
  std::vector<RationalPoly> chain_;
};

double refine_root(const SturmSequence& sturm, double lo, double hi) {
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (sturm.count(lo, mid) == 1) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

void isolate(const SturmSequence& sturm, double lo, double hi, int roots, int depth,
             std::vector<double>& out) {
  if (roots == 0) return;
  if (roots == 1 || depth > 200) {
    out.push_back(refine_root(sturm, lo, hi));
    return;
  }
  const double mid = 0.5 * (lo + hi);
  const int left = sturm.count(lo, mid);
  isolate(sturm, lo, mid, left, depth + 1, out);
  isolate(sturm, mid, hi, roots - left, depth + 1, out);
}

std::vector<double> dedupe_sorted(std::vector<double> v, double tol) {
  std::sort(v.begin(), v.end());
  std::vector<double> out;
  for (double x : v) {
    if (out.empty() || x - out.back() > tol) out.push_back(x);
  }
  return out;
}

}  // namespace

double RealPolynomial::operator()(double x) const {
  double acc = 0.0;
  for (std::size_t i = coeffs.size(); i-- > 0;) acc = acc * x + coeffs[i];
  return acc;
}

RealPolynomial RealPolynomial::derivative() const {
  RealPolynomial out;
  for (std::size_t i = 1; i < coeffs.size(); ++i) out.coeffs.push_back(coeffs[i] * static_cast<double>(i));
  return out;
}

int RealPolynomial::degree() const {
  for (std::size_t i = coeffs.size(); i-- > 0;) {
    if (coeffs[i] != 0.0) return static_cast<int>(i);
  }
  return -1;
}

RealPolynomial to_real_polynomial(const FormalPolynomial& poly) {
  RealPolynomial out;
  out.coeffs = {0.0, 0.0, 0.0, 1.0};
  for (const auto& a : poly.A) out.coeffs.push_back(a.convert_to<double>());
  while (out.coeffs.size() > 4 && out.coeffs.back() == 0.0) out.coeffs.pop_back();
  return out;
}

double eval_P(const FormalPolynomial& poly, double x) {
  double inner = 0.0;
  for (std::size_t k = poly.A.size(); k-- > 0;) inner = (inner + poly.A[k].convert_to<double>()) * x;
  return x * x * x * (1.0 + inner);
}

std::vector<double> real_roots(const RealPolynomial& poly) {
  RationalPoly p = to_rational(poly);
  if (p.size() < 2) return {};
  const RationalPoly g = gcd(p, derivative(p));
  const RationalPoly squarefree = monic(g.size() > 1 ? quotient(p, g) : p);
  if (squarefree.size() < 2) return {};

  // Cauchy bound on the monic squarefree part.
  Rational max_ratio = 0;
  for (std::size_t i = 0; i + 1 < squarefree.size(); ++i) {
    max_ratio = std::max<Rational>(max_ratio, abs(squarefree[i]));
  }
  const double bound = std::ceil(static_cast<double>(max_ratio)) + 2.0;

  const SturmSequence sturm(squarefree);
  std::vector<double> roots;
  isolate(sturm, -bound, bound, sturm.count(-bound, bound), 0, roots);
  return dedupe_sorted(std::move(roots), 1e-9);
}

std::vector<double> critical_points(const RealPolynomial& poly) {
  return real_roots(poly.derivative());
}

std::vector<double> critical_points(const FormalPolynomial& poly) {
  return critical_points(to_real_polynomial(poly));
}

std::vector<double> turning_points(const RealPolynomial& poly) {
  const RealPolynomial d = poly.derivative();
  const std::vector<double> crit = real_roots(d);
  std::vector<double> out;
  for (std::size_t i = 0; i < crit.size(); ++i) {
    const double left = i == 0 ? crit[i] - 1.0 : 0.5 * (crit[i - 1] + crit[i]);
    const double right = i + 1 == crit.size() ? crit[i] + 1.0 : 0.5 * (crit[i] + crit[i + 1]);
    const double sl = d(left);
    const double sr = d(right);
    if ((sl < 0 && sr > 0) || (sl > 0 && sr < 0)) out.push_back(crit[i]);
  }
  return out;
}

double trapping_radius(const RealPolynomial& poly) {
  RealPolynomial minus = poly;
  RealPolynomial plus = poly;
  if (minus.coeffs.size() < 2) {
    minus.coeffs.resize(2, 0.0);
    plus.coeffs.resize(2, 0.0);
  }
  minus.coeffs[1] -= 1.0;
  plus.coeffs[1] += 1.0;
  double r = 0.0;
  for (const auto* p : {&minus, &plus}) {
    for (double x : real_roots(*p)) r = std::max(r, std::abs(x));
  }
  return r;
}

double default_escape_bound(const FormalPolynomial& poly) {
  double max_a = 0.0;
  for (const auto& a : poly.A) max_a = std::max(max_a, std::abs(a.convert_to<double>()));
  const double crude = 1.0 + max_a;
  const double trap = trapping_radius(to_real_polynomial(poly));
  return crude >= trap ? crude : trap * (1.0 + 1e-9);
}

Symbol symbol_of(double x, const std::vector<double>& partition, double bound) {
  if (!(std::abs(x) <= bound)) return kEscapeSymbol;
  const auto below = std::lower_bound(partition.begin(), partition.end(), x) - partition.begin();
  return static_cast<Symbol>(below);
}

std::vector<Symbol> itinerary(const RealPolynomial& poly, double x0,
                              const std::vector<double>& partition, double bound, int length) {
  if (length < 1) throw std::invalid_argument("itinerary length must be positive");
  std::vector<Symbol> word(static_cast<std::size_t>(length), kEscapeSymbol);
  double x = x0;
  for (int j = 0; j < length; ++j) {
    const Symbol s = symbol_of(x, partition, bound);
    if (s == kEscapeSymbol) break;
    word[static_cast<std::size_t>(j)] = s;
    x = poly(x);
  }
  return word;
}

std::string format_word(const std::vector<Symbol>& word) {
  std::string out;
  for (std::size_t i = 0; i < word.size(); ++i) {
    if (i) out += ',';
    out += word[i] == kEscapeSymbol ? std::string("E") : std::to_string(word[i]);
  }
  return out;
}

void SymbolicConfig::validate() const {
  if (!(x_lo < x_hi)) throw std::invalid_argument("entropy interval must have x_lo < x_hi");
  if (!(bound > 0)) throw std::invalid_argument("escape bound must be positive");
  if (word_length < 1) throw std::invalid_argument("word length must be positive");
  if (seeds < 2) throw std::invalid_argument("need at least two seeds");
}

const char* to_string(EntropyMethod method) {
  return method == EntropyMethod::word_count ? "wordcount" : "lapcount";
}

namespace {

// Least-squares slope of ln counts[k] over the last half of k = 1..usable, clamped at 0.
void fit_growth_rate(EntropyEstimate& est, int usable) {
  est.fit_lo = usable / 2 + 1;
  est.fit_hi = usable;
  if (est.fit_hi - est.fit_lo < 1) {
    est.h = std::max(est.h_k[static_cast<std::size_t>(est.fit_hi - 1)], 0.0);
    return;
  }
  double mk = 0.0;
  double my = 0.0;
  const int count = est.fit_hi - est.fit_lo + 1;
  for (int k = est.fit_lo; k <= est.fit_hi; ++k) {
    mk += k;
    my += std::log(est.counts[static_cast<std::size_t>(k - 1)]);
  }
  mk /= count;
  my /= count;
  double sxx = 0.0;
  double sxy = 0.0;
  for (int k = est.fit_lo; k <= est.fit_hi; ++k) {
    sxx += (k - mk) * (k - mk);
    sxy += (k - mk) * (std::log(est.counts[static_cast<std::size_t>(k - 1)]) - my);
  }
  est.h = std::max(sxy / sxx, 0.0);
}

}  // namespace

EntropyEstimate entropy_wordcount(const RealPolynomial& poly, const SymbolicConfig& config,
                                  unsigned jobs) {
  config.validate();
  std::vector<double> partition;
  for (double c : critical_points(poly)) {
    if (std::abs(c) <= config.bound) partition.push_back(c);
  }
  if (partition.size() >= kEscapeSymbol) throw std::logic_error("too many partition cells");

  const auto g = static_cast<std::size_t>(config.seeds);
  const auto n = static_cast<std::size_t>(config.word_length);
  std::vector<Symbol> words(g * n);
  const double step = (config.x_hi - config.x_lo) / static_cast<double>(g - 1);
  parallel_for(g, jobs, [&](std::size_t s) {
    const double x0 = s + 1 == g ? config.x_hi : config.x_lo + step * static_cast<double>(s);
    const auto w = itinerary(poly, x0, partition, config.bound, config.word_length);
    std::copy(w.begin(), w.end(), words.begin() + static_cast<long>(s * n));
  });

  std::vector<std::size_t> order(g);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto word_at = [&](std::size_t s) { return words.begin() + static_cast<long>(s * n); };
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::lexicographical_compare(word_at(a), word_at(a) + static_cast<long>(n), word_at(b),
                                        word_at(b) + static_cast<long>(n));
  });
  // A new distinct length-k prefix starts wherever adjacent sorted words share fewer than k symbols.
  std::vector<std::size_t> breaks_at_lcp(n + 1, 0);
  for (std::size_t i = 1; i < g; ++i) {
    const auto a = word_at(order[i - 1]);
    const auto b = word_at(order[i]);
    std::size_t lcp = 0;
    while (lcp < n && a[static_cast<long>(lcp)] == b[static_cast<long>(lcp)]) ++lcp;
    ++breaks_at_lcp[lcp];
  }

  EntropyEstimate est;
  est.method = EntropyMethod::word_count;
  std::size_t distinct = 1;
  for (std::size_t k = 1; k <= n; ++k) {
    distinct += breaks_at_lcp[k - 1];
    est.counts.push_back(static_cast<double>(distinct));
    est.h_k.push_back(std::log(static_cast<double>(distinct)) / static_cast<double>(k));
  }

  const double saturation = static_cast<double>(g) / 10.0;
  int unsaturated = 0;
  while (unsaturated < static_cast<int>(n) && est.counts[static_cast<std::size_t>(unsaturated)] < saturation) {
    ++unsaturated;
  }
  est.saturated = est.counts.back() >= saturation;
  if (unsaturated == 0) throw Saturated("W(1) already reaches seeds/10; increase the seed count");

  fit_growth_rate(est, unsaturated);
  return est;
}

EntropyEstimate entropy_lapcount(const RealPolynomial& poly, double x_lo, double x_hi, int n) {
  if (!(x_lo < x_hi)) throw std::invalid_argument("lap-count interval must have x_lo < x_hi");
  if (n < 1 || n > 20) throw std::invalid_argument("lap-count depth must lie in [1, 20]");
  const std::vector<double> turns = turning_points(poly);

  // Branches are tracked by their image interval; equal images evolve identically.
  std::map<std::pair<double, double>, std::uint64_t> branches{{{x_lo, x_hi}, 1}};
  EntropyEstimate est;
  est.method = EntropyMethod::lap_count;
  double limit = 1.0;
  for (int k = 1; k <= n; ++k) {
    std::map<std::pair<double, double>, std::uint64_t> next;
    for (const auto& [image, count] : branches) {
      std::vector<double> cuts{image.first};
      for (double t : turns) {
        if (t > image.first && t < image.second) cuts.push_back(t);
      }
      cuts.push_back(image.second);
      for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double u = poly(cuts[i]);
        const double v = poly(cuts[i + 1]);
        const double lo = std::max(std::min(u, v), x_lo);
        const double hi = std::min(std::max(u, v), x_hi);
        if (!(lo < hi)) continue;
        auto& slot = next[{lo, hi}];
        if (__builtin_add_overflow(slot, count, &slot)) throw BranchOverflow("lap count overflow");
      }
    }
    branches = std::move(next);
    std::uint64_t total = 0;
    for (const auto& [image, count] : branches) {
      if (__builtin_add_overflow(total, count, &total)) throw BranchOverflow("lap count overflow");
    }
    limit *= 9.0;
    if (static_cast<double>(total) > limit) {
      throw BranchOverflow("lap count " + std::to_string(total) + " exceeds 9^k");
    }
    est.counts.push_back(static_cast<double>(total));
    est.h_k.push_back(total == 0 ? 0.0 : std::log(static_cast<double>(total)) / k);
  }
  // An interval that escapes entirely leaves no branches; treat it as zero entropy.
  int usable = 0;
  while (usable < n && est.counts[static_cast<std::size_t>(usable)] > 0) ++usable;
  if (usable == 0) {
    est.h = 0.0;
    return est;
  }
  fit_growth_rate(est, usable);
  return est;
}

std::string format_entropy_csv(const EntropyEstimate& est) {
  std::string out = "k,W_or_lap,h_k\n";
  char buf[128];
  for (std::size_t k = 0; k < est.counts.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%zu,%.0f,%.17g\n", k + 1, est.counts[k], est.h_k[k]);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "h,%.17g,saturated,%s\n", est.h, est.saturated ? "true" : "false");
  out += buf;
  return out;
}

}  // namespace ellidyn
