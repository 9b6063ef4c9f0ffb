#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ellidyn/curve.hpp"
#include "ellidyn/errors.hpp"

namespace ellidyn {

// Real polynomial with coefficients in ascending degree order.
struct RealPolynomial {
  std::vector<double> coeffs;

  double operator()(double x) const;
  RealPolynomial derivative() const;
  int degree() const;
};

RealPolynomial to_real_polynomial(const FormalPolynomial& poly);

// Horner evaluation of x^3 (1 + A1 x + ... + A6 x^6).
double eval_P(const FormalPolynomial& poly, double x);

// Distinct real roots, isolated with an exact rational Sturm sequence and
// refined by bisection to 1e-12; sorted and deduplicated at 1e-9.
std::vector<double> real_roots(const RealPolynomial& poly);

std::vector<double> critical_points(const RealPolynomial& poly);
std::vector<double> critical_points(const FormalPolynomial& poly);

// Critical points where P' changes sign (the laps' endpoints).
std::vector<double> turning_points(const RealPolynomial& poly);

// Past this radius |P(x)| > |x| and every orbit diverges monotonically: the
// largest |x| solving P(x) = x or P(x) = -x.
double trapping_radius(const RealPolynomial& poly);

// 1 + max |A_k|, widened to the trapping radius when it falls short.
double default_escape_bound(const FormalPolynomial& poly);

using Symbol = std::uint8_t;
inline constexpr Symbol kEscapeSymbol = 0xFF;

// Cell index = number of cut points strictly below x (ties go left); E once |x| > B,
// absorbing from then on.
Symbol symbol_of(double x, const std::vector<double>& partition, double bound);

std::vector<Symbol> itinerary(const RealPolynomial& poly, double x0,
                              const std::vector<double>& partition, double bound, int length);

std::string format_word(const std::vector<Symbol>& word);

struct SymbolicConfig {
  double x_lo = -1.0;
  double x_hi = 1.0;
  double bound = 1.0;
  int word_length = 14;
  int seeds = 100000;

  void validate() const;
};

enum class EntropyMethod { word_count, lap_count };

const char* to_string(EntropyMethod method);

struct EntropyEstimate {
  EntropyMethod method = EntropyMethod::word_count;
  std::vector<double> counts;  // W(k) or lap(P^k), k = 1..n
  std::vector<double> h_k;     // ln(count)/k
  double h = 0.0;
  bool saturated = false;
  int fit_lo = 0;
  int fit_hi = 0;
};

// Distinct itinerary prefixes over equispaced seeds. The fit runs over the last
// half of the unsaturated range (W(k) < seeds/10).
EntropyEstimate entropy_wordcount(const RealPolynomial& poly, const SymbolicConfig& config,
                                  unsigned jobs = 1);

// Monotone branches of P^k on the interval, with orbits leaving it clipped; k = 1..n, n <= 20.
// h_k = ln lap(P^k) / k, and h is the growth slope fitted the same way as the word count.
EntropyEstimate entropy_lapcount(const RealPolynomial& poly, double x_lo, double x_hi, int n);

// `k,W_or_lap,h_k` rows and a closing `h,<value>,saturated,<bool>` line.
std::string format_entropy_csv(const EntropyEstimate& estimate);

}  // namespace ellidyn
