#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <variant>

#include <boost/multiprecision/cpp_int.hpp>

namespace ellidyn {

using BigInt = boost::multiprecision::cpp_int;

// y^2 + a1 xy + a3 y = x^3 + a2 x^2 + a4 x + a6, stored as {a1,a2,a3,a4,a6}.
struct WeierstrassCurve {
  std::array<BigInt, 5> a{};
  std::string label;
  std::uint64_t conductor = 0;

  const BigInt& a1() const { return a[0]; }
  const BigInt& a2() const { return a[1]; }
  const BigInt& a3() const { return a[2]; }
  const BigInt& a4() const { return a[3]; }
  const BigInt& a6() const { return a[4]; }
};

WeierstrassCurve make_curve(std::array<long long, 5> a, std::string label = {},
                            std::uint64_t conductor = 0);

struct StandardInvariants {
  BigInt b2, b4, b6, b8;
  BigInt c4, c6;
  BigInt discriminant;
};

StandardInvariants standard_invariants(const WeierstrassCurve& curve);

bool is_squarefree(std::uint64_t n);

// Semi-stable over Q iff the conductor is squarefree.
bool is_semistable(const WeierstrassCurve& curve);

// x^3 (1 + A1 x + ... + A6 x^6), the truncated formal-group expansion w(t).
struct FormalPolynomial {
  std::array<BigInt, 6> A{};
  std::string source_label;

  // 9 unless trailing A_k vanish.
  int effective_degree() const;
};

FormalPolynomial formal_polynomial(const WeierstrassCurve& curve);

// Coefficients c_0..c_9 of w - (t^3 + a1 t w + a2 t^2 w + a3 w^2 + a4 t w^2 + a6 w^3)
// taken mod t^10, where w = t^3 (1 + sum A_k t^k). All zero for a correct expansion.
std::array<BigInt, 10> formal_group_residual(const WeierstrassCurve& curve,
                                             const FormalPolynomial& poly);

// Residues of the long model, each in [0, p).
struct LongResidues {
  long p = 0;
  std::array<long, 5> a{};
};

// y^2 = x^3 + A x + B over F_p, with A = -27 c4, B = -54 c6 reduced mod p.
struct ShortResidues {
  long p = 0;
  long A = 0;
  long B = 0;
};

using ReducedModel = std::variant<ShortResidues, LongResidues>;

long mod_residue(const BigInt& value, long p);

// Short model for p >= 5, long-model residues for p in {2, 3}.
ReducedModel reduce_mod_p(const WeierstrassCurve& curve, long p);

LongResidues reduce_long_mod_p(const WeierstrassCurve& curve, long p);

bool is_prime(std::uint64_t n);

}  // namespace ellidyn
