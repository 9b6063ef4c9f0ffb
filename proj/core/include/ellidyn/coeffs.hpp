#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "ellidyn/curve.hpp"
#include "ellidyn/errors.hpp"

namespace ellidyn {

struct BadPrime {
  long p = 0;
  bool split = false;

  friend bool operator==(const BadPrime&, const BadPrime&) = default;
};

// Dirichlet coefficients a_1..a_{n_max} of L(E, s).
struct CoefficientTable {
  std::string label;
  std::size_t n_max = 0;
  std::vector<std::int64_t> a;  // a[0] is unused and kept at 0
  std::vector<BadPrime> bad_primes;

  std::int64_t operator[](std::size_t n) const { return a.at(n); }

  CoefficientTable prefix(std::size_t n) const;

  friend bool operator==(const CoefficientTable&, const CoefficientTable&) = default;
};

std::vector<long> primes_up_to(long n);

// #E(F_p) including the point at infinity; requires good reduction at p.
long count_points(const WeierstrassCurve& curve, long p);

// a_p for a prime of multiplicative reduction: +1 split, -1 non-split.
int bad_prime_ap(const WeierstrassCurve& curve, long p);

// Exhaustive counts on the long model over F_p; the ground truth for the fast paths.
long count_points_exhaustive(const LongResidues& model);
// Nonsingular affine points plus the point at infinity.
long count_smooth_points_exhaustive(const LongResidues& model);

// ap[p] must be set for every prime p <= n_max; other slots are ignored.
CoefficientTable extend_coefficients(std::string label, const std::vector<std::int64_t>& ap,
                                     const std::vector<BadPrime>& bad_primes, std::size_t n_max);

CoefficientTable compute_coefficients(const WeierstrassCurve& curve, std::size_t n_max);

// Cache file text, including the trailing crc32 line.
std::string serialize_coefficients(const CoefficientTable& table);
// Throws CacheCorrupt(path) on any header or checksum mismatch.
CoefficientTable parse_coefficients(const std::string& text, const std::string& path);

void write_coefficient_file(const std::filesystem::path& path, const CoefficientTable& table);
CoefficientTable read_coefficient_file(const std::filesystem::path& path);

enum class CacheStatus { hit, prefix_hit, miss, recomputed_short, recomputed_corrupt };

const char* to_string(CacheStatus status);

struct CacheLookup {
  CoefficientTable table;
  CacheStatus status;
};

// Directory of <label>.coeffs files, written via temp file + rename.
class CoefficientCache {
 public:
  explicit CoefficientCache(std::filesystem::path dir);

  CacheLookup get(const WeierstrassCurve& curve, std::size_t n_max) const;

  std::filesystem::path path_for(const std::string& label) const;
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
};

}  // namespace ellidyn
