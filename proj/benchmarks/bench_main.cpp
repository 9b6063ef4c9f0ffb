#include <benchmark/benchmark.h>

#include <map>

#include "ellidyn/coeffs.hpp"
#include "ellidyn/lseries.hpp"
#include "ellidyn/polydyn.hpp"

using namespace ellidyn;

namespace {

const WeierstrassCurve& c11a1() {
  static const WeierstrassCurve c = make_curve({0, -1, 1, -10, -20}, "11a1", 11);
  return c;
}

const CoefficientTable& table(std::size_t n) {
  static const CoefficientTable t = compute_coefficients(c11a1(), 4000);
  static std::map<std::size_t, CoefficientTable> prefixes;
  auto it = prefixes.find(n);
  if (it == prefixes.end()) {
    CoefficientTable p = t;
    p.n_max = n;
    p.a.resize(n + 1);
    it = prefixes.emplace(n, std::move(p)).first;
  }
  return it->second;
}

void BM_CountPoints(benchmark::State& state) {
  const long p = static_cast<long>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(count_points(c11a1(), p));
}
BENCHMARK(BM_CountPoints)->Arg(101)->Arg(997)->Arg(7919);

void BM_ComputeCoefficients(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(compute_coefficients(c11a1(), n));
}
BENCHMARK(BM_ComputeCoefficients)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

void BM_EvalL(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const TruncatedLSeries series(table(n), n);
  Complex z(0.7, 3.1);
  for (auto _ : state) {
    const MapValue v = series(z);
    benchmark::DoNotOptimize(v);
    z = Complex(0.7 + 1e-9 * v.z.real(), 3.1);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_EvalL)->Arg(100)->Arg(1000)->Arg(4000);

void BM_Render(benchmark::State& state) {
  Viewport vp;
  vp.width = vp.height = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(render_escape_field(table(1000), 1000, vp, 30, 100.0));
  state.SetItemsProcessed(state.iterations() * vp.width * vp.height);
}
BENCHMARK(BM_Render)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_WordCount(benchmark::State& state) {
  const auto real = to_real_polynomial(formal_polynomial(c11a1()));
  const double B = trapping_radius(real);
  const SymbolicConfig cfg{-B, B, B, 14, static_cast<int>(state.range(0))};
  for (auto _ : state) benchmark::DoNotOptimize(entropy_wordcount(real, cfg));
}
BENCHMARK(BM_WordCount)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

void BM_LapCount(benchmark::State& state) {
  const auto real = to_real_polynomial(formal_polynomial(c11a1()));
  const double B = trapping_radius(real);
  const int depth = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(entropy_lapcount(real, -B, B, depth));
}
BENCHMARK(BM_LapCount)->Arg(10)->Arg(14)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
