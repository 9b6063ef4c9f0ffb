#include "ellidyn/curve.hpp"

#include <stdexcept>

namespace ellidyn {

namespace {

// Power series truncated mod t^10.
constexpr int kSeriesLength = 10;
using Series = std::array<BigInt, kSeriesLength>;

Series multiply(const Series& x, const Series& y) {
  Series out{};
  for (int i = 0; i < kSeriesLength; ++i) {
    if (x[i] == 0) continue;
    for (int j = 0; i + j < kSeriesLength; ++j) out[i + j] += x[i] * y[j];
  }
  return out;
}

Series shift(const Series& x, int k) {
  Series out{};
  for (int i = 0; i + k < kSeriesLength; ++i) out[i + k] = x[i];
  return out;
}

// t^3 + a1 t w + a2 t^2 w + a3 w^2 + a4 t w^2 + a6 w^3.
Series functional_rhs(const WeierstrassCurve& c, const Series& w) {
  const Series w2 = multiply(w, w);
  const Series w3 = multiply(w2, w);
  const Series tw = shift(w, 1);
  const Series t2w = shift(w, 2);
  const Series tw2 = shift(w2, 1);
  Series out{};
  out[3] = 1;
  for (int i = 0; i < kSeriesLength; ++i) {
    out[i] += c.a1() * tw[i] + c.a2() * t2w[i] + c.a3() * w2[i] + c.a4() * tw2[i] +
              c.a6() * w3[i];
  }
  return out;
}

}  // namespace

WeierstrassCurve make_curve(std::array<long long, 5> a, std::string label,
                            std::uint64_t conductor) {
  WeierstrassCurve c;
  for (std::size_t i = 0; i < 5; ++i) c.a[i] = a[i];
  c.label = std::move(label);
  c.conductor = conductor;
  return c;
}

StandardInvariants standard_invariants(const WeierstrassCurve& curve) {
  const BigInt& a1 = curve.a1();
  const BigInt& a2 = curve.a2();
  const BigInt& a3 = curve.a3();
  const BigInt& a4 = curve.a4();
  const BigInt& a6 = curve.a6();

  StandardInvariants s;
  s.b2 = a1 * a1 + 4 * a2;
  s.b4 = 2 * a4 + a1 * a3;
  s.b6 = a3 * a3 + 4 * a6;
  s.b8 = a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4;
  s.c4 = s.b2 * s.b2 - 24 * s.b4;
  s.c6 = -s.b2 * s.b2 * s.b2 + 36 * s.b2 * s.b4 - 216 * s.b6;
  const BigInt num = s.c4 * s.c4 * s.c4 - s.c6 * s.c6;
  if (num % 1728 != 0) throw std::logic_error("c4^3 - c6^2 not divisible by 1728");
  s.discriminant = num / 1728;
  return s;
}

bool is_squarefree(std::uint64_t n) {
  if (n == 0) return false;
  for (std::uint64_t d = 2; d * d <= n; ++d) {
    if (n % d == 0) {
      n /= d;
      if (n % d == 0) return false;
    }
  }
  return true;
}

bool is_semistable(const WeierstrassCurve& curve) { return is_squarefree(curve.conductor); }

int FormalPolynomial::effective_degree() const {
  for (int k = 5; k >= 0; --k) {
    if (A[k] != 0) return 3 + k + 1;
  }
  return 3;
}

FormalPolynomial formal_polynomial(const WeierstrassCurve& curve) {
  // Each pass of w <- rhs(w) fixes one more coefficient; seven passes cover t^3..t^9.
  Series w{};
  w[3] = 1;
  for (int pass = 0; pass < kSeriesLength; ++pass) {
    Series next = functional_rhs(curve, w);
    if (next == w) break;
    w = std::move(next);
  }
  FormalPolynomial poly;
  for (int k = 0; k < 6; ++k) poly.A[k] = w[4 + k];
  poly.source_label = curve.label;
  return poly;
}

std::array<BigInt, 10> formal_group_residual(const WeierstrassCurve& curve,
                                             const FormalPolynomial& poly) {
  Series w{};
  w[3] = 1;
  for (int k = 0; k < 6; ++k) w[4 + k] = poly.A[k];
  const Series rhs = functional_rhs(curve, w);
  Series out{};
  for (int i = 0; i < kSeriesLength; ++i) out[i] = w[i] - rhs[i];
  return out;
}

long mod_residue(const BigInt& value, long p) {
  BigInt r = value % p;
  if (r < 0) r += p;
  return r.convert_to<long>();
}

LongResidues reduce_long_mod_p(const WeierstrassCurve& curve, long p) {
  LongResidues out;
  out.p = p;
  for (std::size_t i = 0; i < 5; ++i) out.a[i] = mod_residue(curve.a[i], p);
  return out;
}

ReducedModel reduce_mod_p(const WeierstrassCurve& curve, long p) {
  if (p < 2 || !is_prime(static_cast<std::uint64_t>(p))) {
    throw std::invalid_argument("reduce_mod_p: p must be prime");
  }
  if (p == 2 || p == 3) return reduce_long_mod_p(curve, p);
  // Scaling x -> x/36, y -> y/216 turns the long model into
  // y^2 = x^3 - 27 c4 x - 54 c6; it is admissible exactly when p does not divide 6.
  if (p % 2 == 0 || p % 3 == 0) throw std::domain_error("short model needs p >= 5");
  const StandardInvariants inv = standard_invariants(curve);
  ShortResidues out;
  out.p = p;
  out.A = mod_residue(-27 * inv.c4, p);
  out.B = mod_residue(-54 * inv.c6, p);
  return out;
}

bool is_prime(std::uint64_t n) {
  if (n < 2) return false;
  if (n % 2 == 0) return n == 2;
  for (std::uint64_t d = 3; d * d <= n; d += 2) {
    if (n % d == 0) return false;
  }
  return true;
}

}  // namespace ellidyn
