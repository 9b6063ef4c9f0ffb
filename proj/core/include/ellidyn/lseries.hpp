#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "ellidyn/coeffs.hpp"
#include "ellidyn/errors.hpp"
#include "ellidyn/parallel.hpp"

namespace ellidyn {

using Complex = std::complex<double>;

// A rectangle of the complex plane sampled at pixel centres; row 0 sits at im_min.
struct Viewport {
  double re_min = -2.0;
  double re_max = 4.0;
  double im_min = -8.0;
  double im_max = 8.0;
  int width = 300;
  int height = 300;

  void validate() const;

  Complex pixel(int i, int j) const {
    return {re_min + (i + 0.5) * (re_max - re_min) / width,
            im_min + (j + 0.5) * (im_max - im_min) / height};
  }

  std::string describe() const;
};

// Result of one application of an iterated map. `overflow` marks an
// evaluation that left double range; callers treat it as escaped.
struct MapValue {
  Complex z;
  bool overflow = false;
};

// Exponent cap on any Dirichlet term n^{-z}.
inline constexpr double kMaxTermExponent = 700.0;

// z -> sum_{n<=N} a_n n^{-z}, summed in increasing n.
//
// n^{-z} is built multiplicatively from prime powers p^{-z} = exp(-z ln p),
// so each evaluation costs pi(N) complex exponentials plus N multiplications.
// The function object is immutable and safe to share across threads.
class TruncatedLSeries {
 public:
  TruncatedLSeries(const CoefficientTable& table, std::size_t n_terms);

  MapValue operator()(Complex z) const;

  std::size_t n_terms() const { return n_terms_; }
  const std::string& label() const { return label_; }

 private:
  std::string label_;
  std::size_t n_terms_;
  std::vector<double> coeff_;        // a_n for n = 0..N
  std::vector<std::uint32_t> spf_;   // smallest prime factor, 0 for n < 2
  std::vector<double> log_n_;        // ln n for n = 0..N
  double log_max_;
};

MapValue eval_L(const CoefficientTable& table, std::size_t n_terms, Complex z);

// Truncated partial sum at z = 1. The imaginary part is zero by construction.
Complex eval_L1(const CoefficientTable& table, std::size_t n_terms);

// First k in [0, limit] with |z_k| > R (or overflow); limit + 1 when the orbit stays bounded.
template <typename Map>
int first_escape(const Map& map, Complex z0, int limit, double radius) {
  if (!std::isfinite(z0.real()) || !std::isfinite(z0.imag()) || std::abs(z0) > radius) return 0;
  Complex z = z0;
  for (int k = 1; k <= limit; ++k) {
    const MapValue v = map(z);
    if (v.overflow || std::abs(v.z) > radius) return k;
    z = v.z;
  }
  return limit + 1;
}

struct EscapeField {
  Viewport viewport;
  int max_iter = 0;
  double radius = 0.0;
  std::vector<int> times;  // row-major, index j * width + i
  std::string label;
  std::size_t n_terms = 0;

  int at(int i, int j) const { return times[static_cast<std::size_t>(j) * viewport.width + i]; }
};

// Escape times (capped at max_iter) for every pixel of the viewport.
template <typename Map>
EscapeField render_escape_field_with(const Map& map, const Viewport& viewport, int max_iter,
                                     double radius, unsigned jobs = 1) {
  viewport.validate();
  if (max_iter < 1) throw std::invalid_argument("max_iter must be positive");
  if (!(radius > 0)) throw std::invalid_argument("escape radius must be positive");
  EscapeField field;
  field.viewport = viewport;
  field.max_iter = max_iter;
  field.radius = radius;
  field.times.assign(static_cast<std::size_t>(viewport.width) * viewport.height, 0);
  parallel_for(static_cast<std::size_t>(viewport.height), jobs, [&](std::size_t row) {
    const int j = static_cast<int>(row);
    for (int i = 0; i < viewport.width; ++i) {
      const int e = first_escape(map, viewport.pixel(i, j), max_iter, radius);
      field.times[row * viewport.width + i] = std::min(e, max_iter);
    }
  });
  return field;
}

EscapeField render_escape_field(const CoefficientTable& table, std::size_t n_terms,
                                const Viewport& viewport, int max_iter, double radius,
                                unsigned jobs = 1);

// Fraction of pixels per column with escape time below max_iter.
std::vector<double> column_escape_profile(const EscapeField& field);

// Share of 4-adjacent pixel pairs whose escape times differ.
double structure_metric(const EscapeField& field);

enum class Palette { gray, log_gray };

Palette parse_palette(const std::string& name);

// Binary PGM (P5), top row = im_max.
std::string field_to_image(const EscapeField& field, Palette palette);

// `i,j,t` rows; the key=value sidecar is written next to it as <path>.meta.
void write_field_csv(const std::filesystem::path& path, const EscapeField& field);

struct EscapeRateFit {
  Viewport region;
  int grid = 0;
  int max_iter = 0;
  std::vector<long> survivors;  // S_0..S_K
  int k_lo = 0;
  int k_hi = 0;
  double tau = 0.0;
  double fit_r2 = 0.0;
};

// Least-squares fit of ln S_k against k from the decay onset down to min_survivors.
// Throws InsufficientDecay or InsufficientSurvivors when no usable window exists.
EscapeRateFit fit_escape_rate(std::vector<long> survivors, long min_survivors);

// S_k = number of seeds still inside |z| <= R after k applications, k = 0..K.
template <typename Map>
std::vector<long> survivor_counts(const Map& map, const Viewport& seeds, int iterations,
                                  double radius, unsigned jobs = 1) {
  seeds.validate();
  const std::size_t rows = static_cast<std::size_t>(seeds.height);
  std::vector<std::vector<long>> per_row(rows, std::vector<long>(iterations + 2, 0));
  parallel_for(rows, jobs, [&](std::size_t row) {
    for (int i = 0; i < seeds.width; ++i) {
      const int e = first_escape(map, seeds.pixel(i, static_cast<int>(row)), iterations, radius);
      ++per_row[row][static_cast<std::size_t>(e)];
    }
  });
  // escaped_at[e] counts seeds whose first escape is e (e = K + 1 means never).
  std::vector<long> escaped_at(iterations + 2, 0);
  for (const auto& r : per_row) {
    for (std::size_t e = 0; e < r.size(); ++e) escaped_at[e] += r[e];
  }
  std::vector<long> survivors(iterations + 1, 0);
  long alive = 0;
  for (int k = iterations; k >= 0; --k) {
    alive += escaped_at[static_cast<std::size_t>(k) + 1];
    survivors[static_cast<std::size_t>(k)] = alive;
  }
  return survivors;
}

template <typename Map>
EscapeRateFit estimate_escape_rate_with(const Map& map, Viewport region, int grid, int iterations,
                                        double radius, long min_survivors, unsigned jobs = 1) {
  if (grid < 10) throw std::invalid_argument("escape-rate grid must be >= 10");
  if (iterations < 10) throw std::invalid_argument("escape-rate iterations must be >= 10");
  region.width = grid;
  region.height = grid;
  EscapeRateFit fit =
      fit_escape_rate(survivor_counts(map, region, iterations, radius, jobs), min_survivors);
  fit.region = region;
  fit.grid = grid;
  fit.max_iter = iterations;
  return fit;
}

EscapeRateFit estimate_escape_rate(const CoefficientTable& table, std::size_t n_terms,
                                   const Viewport& region, int grid, int iterations, double radius,
                                   long min_survivors, unsigned jobs = 1);

}  // namespace ellidyn
