#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <variant>

#include "ellidyn/coeffs.hpp"
#include "ellidyn/ingest.hpp"
#include "ellidyn/lseries.hpp"
#include "ellidyn/polydyn.hpp"
#include "ellidyn/stats.hpp"
#include "oracles.hpp"
#include "test_paths.hpp"

using namespace ellidyn;

namespace {

const std::vector<CurveRecord>& database() {
  static const std::vector<CurveRecord> records = [] {
    std::ifstream in(test_paths::allcurves());
    return parse_allcurves(in, ParseMode::strict).records;
  }();
  return records;
}

std::vector<CurveRecord> semistable_up_to(std::uint64_t n) {
  PopulationFilter f;
  f.max_conductor = n;
  f.one_per_class = false;
  return filter_population(database(), f);
}

// Residues fit the brute-force oracles' long long inputs whatever the size of a_i.
std::array<long long, 5> residues(const WeierstrassCurve& c, long p) {
  std::array<long long, 5> r{};
  for (int i = 0; i < 5; ++i) r[static_cast<std::size_t>(i)] = mod_residue(c.a[static_cast<std::size_t>(i)], p);
  return r;
}

long short_count(const ShortResidues& s) {
  std::vector<int> squares(static_cast<std::size_t>(s.p), 0);
  for (long y = 0; y < s.p; ++y) ++squares[static_cast<std::size_t>(y * y % s.p)];
  long count = 1;
  for (long x = 0; x < s.p; ++x) {
    const long rhs = ((x * x % s.p * x + s.A * x + s.B) % s.p + s.p) % s.p;
    count += squares[static_cast<std::size_t>(rhs)];
  }
  return count;
}

const std::vector<CurveRecord>& frozen_sample() {
  static const std::vector<CurveRecord> s = draw_sample(database(), SamplePlan{});
  return s;
}

}  // namespace

TEST(CurveProperties, DiscriminantIdentityForEveryCurve) {
  for (const auto& r : database()) {
    const auto inv = standard_invariants(r.curve());
    ASSERT_EQ(inv.c4 * inv.c4 * inv.c4 - inv.c6 * inv.c6, 1728 * inv.discriminant) << r.label;
  }
}

TEST(CurveProperties, FormalGroupResidualVanishes) {
  for (const auto& r : database()) {
    const auto c = r.curve();
    const auto poly = formal_polynomial(c);
    for (const auto& v : formal_group_residual(c, poly)) ASSERT_EQ(v, 0) << r.label;
    ASSERT_EQ(poly.A[0], c.a1()) << r.label;
    ASSERT_EQ(poly.A[1], c.a1() * c.a1() + c.a2()) << r.label;
    const auto w = oracle::formal_series(c.a);
    for (int k = 0; k < 6; ++k) ASSERT_EQ(poly.A[static_cast<std::size_t>(k)], w[static_cast<std::size_t>(k + 4)]) << r.label;
  }
}

TEST(CurveProperties, ShortModelCountsMatchLongModel) {
  std::mt19937_64 rng(7);
  const auto& db = database();
  for (int trial = 0; trial < 100; ++trial) {
    const auto& r = db[std::uniform_int_distribution<std::size_t>(0, db.size() - 1)(rng)];
    const auto c = r.curve();
    const auto disc = standard_invariants(c).discriminant;
    for (long p : primes_up_to(50)) {
      if (p < 5 || disc % p == 0) continue;
      const auto model = reduce_mod_p(c, p);
      ASSERT_TRUE(std::holds_alternative<ShortResidues>(model));
      ASSERT_EQ(short_count(std::get<ShortResidues>(model)), oracle::brute_count(residues(c, p), p))
          << r.label << " p=" << p;
    }
  }
}

TEST(IngestProperties, SamplingIsPureAndRespectsBounds) {
  for (std::uint64_t seed : {1ull, 2ull, 20081231ull, 0xFFFFFFFFFFull}) {
    SamplePlan plan;
    plan.rng_seed = seed;
    const auto a = draw_sample(database(), plan);
    const auto b = draw_sample(database(), plan);
    ASSERT_EQ(a.size(), 30u);
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(a[i].label, b[i].label);
      EXPECT_TRUE(is_semistable(a[i].curve()));
      EXPECT_LE(a[i].conductor, 1000u);
    }
  }
}

TEST(CoefficientProperties, HasseBoundOnSampledCurves) {
  for (const auto& r : frozen_sample()) {
    const auto c = r.curve();
    const auto disc = standard_invariants(c).discriminant;
    for (long p : primes_up_to(1000)) {
      if (disc % p == 0) continue;
      const long ap = p + 1 - count_points(c, p);
      ASSERT_LE(static_cast<double>(ap * ap), 4.0 * static_cast<double>(p)) << r.label << " p=" << p;
    }
  }
}

TEST(CoefficientProperties, Multiplicativity) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> pick(2, 500);
  for (const auto& r : frozen_sample()) {
    const auto t = compute_coefficients(r.curve(), 1000);
    int checked = 0;
    while (checked < 10000) {
      const std::size_t m = pick(rng);
      const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 1000 / m)(rng);
      if (std::gcd(m, n) != 1) continue;
      ASSERT_EQ(t[m * n], t[m] * t[n]) << r.label << " m=" << m << " n=" << n;
      ++checked;
    }
  }
}

TEST(CoefficientProperties, BadPrimeRuleMatchesSmoothEnumeration) {
  std::size_t checked = 0;
  for (const auto& r : semistable_up_to(300)) {
    const auto c = r.curve();
    for (long p : primes_up_to(static_cast<long>(r.conductor))) {
      if (r.conductor % static_cast<std::uint64_t>(p) != 0) continue;
      const int ap = bad_prime_ap(c, p);
      ASSERT_TRUE(ap == 1 || ap == -1);
      ASSERT_EQ(ap, oracle::brute_ap(residues(c, p), p, true)) << r.label << " p=" << p;
      ++checked;
    }
  }
  EXPECT_GT(checked, 500u);
}

TEST(LSeriesProperties, ConjugateSymmetry) {
  const auto t = compute_coefficients(make_curve({0, -1, 1, -10, -20}, "11a1", 11), 1000);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> re(-1.0, 4.0), im(-10.0, 10.0);
  for (int i = 0; i < 200; ++i) {
    const Complex z(re(rng), im(rng));
    const auto a = eval_L(t, 1000, z);
    const auto b = eval_L(t, 1000, std::conj(z));
    const double scale = std::max(1.0, std::abs(a.z));
    EXPECT_LE(std::abs(b.z - std::conj(a.z)), 1e-14 * scale) << z;
    EXPECT_EQ(a.overflow, b.overflow);
  }
}

TEST(LSeriesProperties, L1IsRealForSampledCurves) {
  for (const auto& r : frozen_sample()) {
    EXPECT_EQ(eval_L1(compute_coefficients(r.curve(), 1000), 1000).imag(), 0.0) << r.label;
  }
}

TEST(LSeriesProperties, EscapeTimesMonotoneInRadius) {
  const auto t = compute_coefficients(make_curve({1, 0, 0, -4, -1}, "21a1", 21), 300);
  const Viewport vp{-2, 4, -8, 8, 48, 64};
  const auto small = render_escape_field(t, 300, vp, 40, 10.0);
  const auto mid = render_escape_field(t, 300, vp, 40, 100.0);
  const auto big = render_escape_field(t, 300, vp, 40, 1e4);
  for (std::size_t k = 0; k < small.times.size(); ++k) {
    ASSERT_LE(small.times[k], mid.times[k]);
    ASSERT_LE(mid.times[k], big.times[k]);
  }
}

TEST(LSeriesProperties, TruncatingIterationsIsConsistent) {
  const auto t = compute_coefficients(make_curve({0, -1, 1, -10, -20}, "11a1", 11), 300);
  const Viewport vp{-2, 4, -8, 8, 48, 64};
  const auto full = render_escape_field(t, 300, vp, 60, 100.0, 2);
  for (int cut : {1, 5, 17, 40}) {
    const auto part = render_escape_field(t, 300, vp, cut, 100.0, 3);
    for (std::size_t k = 0; k < full.times.size(); ++k) ASSERT_EQ(part.times[k], std::min(full.times[k], cut));
  }
}

TEST(LSeriesProperties, SyntheticTauRecovered) {
  std::vector<long> s;
  for (int k = 0; k <= 60; ++k) s.push_back(static_cast<long>(std::floor(90000.0 * std::exp(-0.2 * k))));
  EXPECT_NEAR(fit_escape_rate(s, 100).tau, 0.2, 0.004);
}

TEST(PolydynProperties, AlphabetBoundAndAbsorbingEscape) {
  for (const auto& r : frozen_sample()) {
    const auto poly = formal_polynomial(r.curve());
    const auto real = to_real_polynomial(poly);
    const double B = trapping_radius(real);
    const auto cells = critical_points(real).size() + 1;
    const auto est = entropy_wordcount(real, SymbolicConfig{-B, B, B, 10, 5000});
    EXPECT_LE(est.h, std::log(static_cast<double>(cells + 1)) + 0.02) << r.label;
    EXPECT_GE(est.h, 0.0);
    const auto part = critical_points(real);
    for (int s = 0; s < 50; ++s) {
      const auto w = itinerary(real, -1.5 * B + 3.0 * B * s / 49.0, part, B, 10);
      const auto e = std::find(w.begin(), w.end(), kEscapeSymbol);
      ASSERT_TRUE(std::all_of(e, w.end(), [](Symbol c) { return c == kEscapeSymbol; })) << r.label;
      for (Symbol c : w) ASSERT_TRUE(c == kEscapeSymbol || c < cells);
    }
  }
}

TEST(PolydynProperties, MonotoneMapsHaveZeroEntropy) {
  for (const RealPolynomial& p : {RealPolynomial{{0, 0.5}}, RealPolynomial{{0.1, 0.3, 0, 0.2}}}) {
    EXPECT_NEAR(entropy_wordcount(p, SymbolicConfig{-1, 1, 2, 12, 20000}).h, 0.0, 0.02);
    EXPECT_NEAR(entropy_lapcount(p, -1, 1, 12).h, 0.0, 0.02);
  }
}

TEST(StatsProperties, RankInvarianceUnderMonotoneMaps) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x(25), y(25);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = g(rng);
      y[i] = 0.4 * x[i] + g(rng);
    }
    const double base = spearman(x, y);
    const double a = std::uniform_real_distribution<double>(0.1, 3.0)(rng);
    const double b = g(rng);
    std::vector<double> fx(x.size()), fy(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      fx[i] = std::exp(a * x[i]) + b;
      fy[i] = std::atan(y[i]) + a * y[i] * y[i] * y[i];
    }
    EXPECT_NEAR(spearman(fx, y), base, 1e-12);
    EXPECT_NEAR(spearman(x, fy), base, 1e-12);
    EXPECT_NEAR(spearman(y, x), base, 1e-15);
    std::vector<double> neg(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) neg[i] = -y[i];
    EXPECT_NEAR(spearman(x, neg), -base, 1e-15);
  }
}

TEST(StatsProperties, PermutationPValuesReproduceAndConverge) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  std::vector<double> x(30), y(30);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = g(rng);
    y[i] = 0.35 * x[i] + g(rng);
  }
  const auto a = permutation_test(x, y, 100000, 101);
  const auto again = permutation_test(x, y, 100000, 101, 2);
  const auto b = permutation_test(x, y, 100000, 202);
  EXPECT_EQ(a.p_value, again.p_value);
  EXPECT_NEAR(a.p_value, b.p_value, 0.002);
  EXPECT_NEAR(a.p_value, t_approx_p_value(spearman(x, y), x.size()), 0.02);
}

TEST(StatsProperties, CriticalTableFlipsAtTableValue) {
  EXPECT_EQ(critical_table_decision(0.45, 30, 0.001), Decision::fail_to_reject);
  EXPECT_EQ(critical_table_decision(-0.45, 30, 0.001), Decision::fail_to_reject);
  EXPECT_EQ(critical_table_decision(std::nextafter(0.45, 1.0), 30, 0.001), Decision::reject_null);
  EXPECT_EQ(critical_table_decision(-std::nextafter(0.45, 1.0), 30, 0.001), Decision::reject_null);
}
