#include "ellidyn/coeffs.hpp"

#include <atomic>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <boost/crc.hpp>

namespace ellidyn {

namespace {

constexpr const char* kMagic = "ellidyn-coeffs";
constexpr const char* kVersion = "v1";

std::vector<bool> square_table(long p) {
  std::vector<bool> sq(static_cast<std::size_t>(p), false);
  for (long y = 0; y < p; ++y) sq[static_cast<std::size_t>(y * y % p)] = true;
  return sq;
}

std::uint32_t crc32_of(const std::string& bytes) {
  boost::crc_32_type crc;
  crc.process_bytes(bytes.data(), bytes.size());
  return crc.checksum();
}

bool divides(long p, const BigInt& v) { return v % p == 0; }

std::int64_t checked_mul(std::int64_t x, std::int64_t y) {
  std::int64_t out;
  if (__builtin_mul_overflow(x, y, &out)) throw CoefficientOverflow("a_n exceeds int64");
  return out;
}

std::int64_t checked_sub(std::int64_t x, std::int64_t y) {
  std::int64_t out;
  if (__builtin_sub_overflow(x, y, &out)) throw CoefficientOverflow("a_n exceeds int64");
  return out;
}

}  // namespace

CoefficientTable CoefficientTable::prefix(std::size_t n) const {
  if (n > n_max) throw std::out_of_range("prefix longer than table");
  CoefficientTable t;
  t.label = label;
  t.n_max = n;
  t.a.assign(a.begin(), a.begin() + static_cast<long>(n + 1));
  t.bad_primes = bad_primes;
  return t;
}

std::vector<long> primes_up_to(long n) {
  std::vector<long> out;
  if (n < 2) return out;
  std::vector<bool> composite(static_cast<std::size_t>(n + 1), false);
  for (long i = 2; i <= n; ++i) {
    if (composite[static_cast<std::size_t>(i)]) continue;
    out.push_back(i);
    for (long j = i * i; j <= n; j += i) composite[static_cast<std::size_t>(j)] = true;
  }
  return out;
}

long count_points_exhaustive(const LongResidues& m) {
  const long p = m.p;
  const auto& [a1, a2, a3, a4, a6] = m.a;
  long count = 1;
  for (long x = 0; x < p; ++x) {
    for (long y = 0; y < p; ++y) {
      const long lhs = (y * y + a1 * x % p * y + a3 * y) % p;
      const long rhs = ((x * x % p * x) + a2 * x % p * x + a4 * x + a6) % p;
      if (lhs == rhs) ++count;
    }
  }
  return count;
}

long count_smooth_points_exhaustive(const LongResidues& m) {
  const long p = m.p;
  const auto& [a1, a2, a3, a4, a6] = m.a;
  long count = 1;
  for (long x = 0; x < p; ++x) {
    for (long y = 0; y < p; ++y) {
      const long lhs = (y * y + a1 * x % p * y + a3 * y) % p;
      const long rhs = ((x * x % p * x) + a2 * x % p * x + a4 * x + a6) % p;
      if (lhs != rhs) continue;
      // Partial derivatives of y^2 + a1 xy + a3 y - x^3 - a2 x^2 - a4 x - a6.
      const long fy = (2 * y + a1 * x + a3) % p;
      const long fx = ((a1 * y - 3 * x * x - 2 * a2 * x - a4) % p + p * 4) % p;
      if (fy != 0 || fx != 0) ++count;
    }
  }
  return count;
}

long count_points(const WeierstrassCurve& curve, long p) {
  if (divides(p, standard_invariants(curve).discriminant)) throw BadReduction(p);
  const ReducedModel model = reduce_mod_p(curve, p);
  if (const auto* lm = std::get_if<LongResidues>(&model)) return count_points_exhaustive(*lm);

  const auto& sm = std::get<ShortResidues>(model);
  const auto sq = square_table(p);
  long sum = 0;
  for (long x = 0; x < p; ++x) {
    const long v = ((x * x % p * x) + sm.A * x + sm.B) % p;
    if (v == 0) continue;
    sum += sq[static_cast<std::size_t>(v)] ? 1 : -1;
  }
  return p + 1 + sum;
}

int bad_prime_ap(const WeierstrassCurve& curve, long p) {
  const StandardInvariants inv = standard_invariants(curve);
  if (!divides(p, inv.discriminant)) throw GoodReduction(p);
  if (divides(p, inv.c4)) {
    throw NotSemistable("additive reduction at p=" + std::to_string(p) + " for " + curve.label);
  }
  if (p == 2 || p == 3) {
    const long smooth = count_smooth_points_exhaustive(reduce_long_mod_p(curve, p));
    const long ap = p - smooth;
    if (ap != 1 && ap != -1) {
      throw NotSemistable("smooth-point count incompatible with multiplicative reduction");
    }
    return static_cast<int>(ap);
  }
  const long v = mod_residue(-inv.c6, p);
  const auto sq = square_table(p);
  return (v != 0 && sq[static_cast<std::size_t>(v)]) ? 1 : -1;
}

CoefficientTable extend_coefficients(std::string label, const std::vector<std::int64_t>& ap,
                                     const std::vector<BadPrime>& bad_primes, std::size_t n_max) {
  if (n_max == 0) throw std::invalid_argument("n_max must be positive");
  if (ap.size() < n_max + 1) throw std::invalid_argument("ap must cover every prime <= n_max");

  std::vector<bool> bad(n_max + 1, false);
  for (const auto& b : bad_primes) {
    if (b.p >= 0 && static_cast<std::size_t>(b.p) <= n_max) bad[static_cast<std::size_t>(b.p)] = true;
  }

  // Smallest prime factor sieve.
  std::vector<std::uint32_t> spf(n_max + 1, 0);
  for (std::size_t i = 2; i <= n_max; ++i) {
    if (spf[i] != 0) continue;
    for (std::size_t j = i; j <= n_max; j += i) {
      if (spf[j] == 0) spf[j] = static_cast<std::uint32_t>(i);
    }
  }

  CoefficientTable t;
  t.label = std::move(label);
  t.n_max = n_max;
  t.bad_primes = bad_primes;
  t.a.assign(n_max + 1, 0);
  t.a[1] = 1;
  for (std::size_t n = 2; n <= n_max; ++n) {
    const std::size_t p = spf[n];
    std::size_t pk = p;
    while ((n / pk) % p == 0) pk *= p;
    const std::size_t rest = n / pk;
    if (rest != 1) {
      t.a[n] = checked_mul(t.a[pk], t.a[rest]);
      continue;
    }
    if (n == p) {
      t.a[n] = ap[p];
    } else if (bad[p]) {
      t.a[n] = checked_mul(ap[p], t.a[n / p]);
    } else {
      const auto pp = static_cast<std::int64_t>(p);
      t.a[n] = checked_sub(checked_mul(ap[p], t.a[n / p]), checked_mul(pp, t.a[n / p / p]));
    }
  }
  return t;
}

CoefficientTable compute_coefficients(const WeierstrassCurve& curve, std::size_t n_max) {
  const StandardInvariants inv = standard_invariants(curve);
  if (inv.discriminant == 0) throw std::invalid_argument("singular curve " + curve.label);

  std::vector<long> bad_list;
  if (curve.conductor != 0) {
    std::uint64_t n = curve.conductor;
    for (std::uint64_t d = 2; d * d <= n; ++d) {
      if (n % d == 0) {
        bad_list.push_back(static_cast<long>(d));
        while (n % d == 0) n /= d;
      }
    }
    if (n > 1) bad_list.push_back(static_cast<long>(n));
  }

  std::vector<std::int64_t> ap(n_max + 1, 0);
  std::vector<BadPrime> bad;
  for (long p : primes_up_to(static_cast<long>(n_max))) {
    if (inv.discriminant % p == 0) {
      const int sign = bad_prime_ap(curve, p);
      ap[static_cast<std::size_t>(p)] = sign;
      bad.push_back({p, sign == 1});
    } else {
      ap[static_cast<std::size_t>(p)] = p + 1 - count_points(curve, p);
    }
  }
  for (long p : bad_list) {
    if (static_cast<std::size_t>(p) <= n_max) continue;
    bad.push_back({p, bad_prime_ap(curve, p) == 1});
  }
  return extend_coefficients(curve.label, ap, bad, n_max);
}

std::string serialize_coefficients(const CoefficientTable& t) {
  std::string body;
  body.reserve(t.n_max * 10 + 64);
  body += std::string(kMagic) + ' ' + kVersion + ' ' + t.label + ' ' + std::to_string(t.n_max) + '\n';
  body += "bad";
  for (const auto& b : t.bad_primes) body += ' ' + std::to_string(b.p) + (b.split ? ":s" : ":n");
  body += '\n';
  for (std::size_t n = 1; n <= t.n_max; ++n) {
    body += std::to_string(n);
    body += ',';
    body += std::to_string(t.a[n]);
    body += '\n';
  }
  char crc[32];
  std::snprintf(crc, sizeof crc, "crc32 %08x\n", crc32_of(body));
  return body + crc;
}

CoefficientTable parse_coefficients(const std::string& text, const std::string& path) {
  const auto crc_pos = text.rfind("crc32 ");
  if (crc_pos == std::string::npos || (crc_pos != 0 && text[crc_pos - 1] != '\n')) {
    throw CacheCorrupt(path);
  }
  const std::string body = text.substr(0, crc_pos);
  char expected[32];
  std::snprintf(expected, sizeof expected, "crc32 %08x\n", crc32_of(body));
  if (text.substr(crc_pos) != expected) throw CacheCorrupt(path);

  std::istringstream in(body);
  std::string magic, version;
  CoefficientTable t;
  if (!(in >> magic >> version >> t.label >> t.n_max) || magic != kMagic || version != kVersion) {
    throw CacheCorrupt(path);
  }
  std::string line;
  std::getline(in, line);
  if (!std::getline(in, line) || line.rfind("bad", 0) != 0) throw CacheCorrupt(path);
  {
    std::istringstream bl(line.substr(3));
    for (std::string tok; bl >> tok;) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos || colon + 2 != tok.size()) throw CacheCorrupt(path);
      const char kind = tok.back();
      if (kind != 's' && kind != 'n') throw CacheCorrupt(path);
      try {
        t.bad_primes.push_back({std::stol(tok.substr(0, colon)), kind == 's'});
      } catch (const std::exception&) {
        throw CacheCorrupt(path);
      }
    }
  }
  t.a.assign(t.n_max + 1, 0);
  for (std::size_t n = 1; n <= t.n_max; ++n) {
    if (!std::getline(in, line)) throw CacheCorrupt(path);
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.substr(0, comma) != std::to_string(n)) {
      throw CacheCorrupt(path);
    }
    try {
      t.a[n] = std::stoll(line.substr(comma + 1));
    } catch (const std::exception&) {
      throw CacheCorrupt(path);
    }
  }
  if (std::getline(in, line)) throw CacheCorrupt(path);
  return t;
}

void write_coefficient_file(const std::filesystem::path& path, const CoefficientTable& table) {
  static std::atomic<unsigned> counter{0};
  const std::string bytes = serialize_coefficients(table);
  auto tmp = path;
  tmp += ".tmp" + std::to_string(counter++);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

CoefficientTable read_coefficient_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_coefficients(ss.str(), path.string());
}

const char* to_string(CacheStatus status) {
  switch (status) {
    case CacheStatus::hit: return "hit";
    case CacheStatus::prefix_hit: return "prefix-hit";
    case CacheStatus::miss: return "miss";
    case CacheStatus::recomputed_short: return "recomputed-short";
    case CacheStatus::recomputed_corrupt: return "recomputed-corrupt";
  }
  return "?";
}

CoefficientCache::CoefficientCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path CoefficientCache::path_for(const std::string& label) const {
  return dir_ / (label + ".coeffs");
}

CacheLookup CoefficientCache::get(const WeierstrassCurve& curve, std::size_t n_max) const {
  const auto path = path_for(curve.label);
  CacheStatus miss_status = CacheStatus::miss;
  if (std::filesystem::exists(path)) {
    try {
      CoefficientTable cached = read_coefficient_file(path);
      if (cached.label != curve.label) throw CacheCorrupt(path.string());
      if (cached.n_max == n_max) return {std::move(cached), CacheStatus::hit};
      if (cached.n_max > n_max) return {cached.prefix(n_max), CacheStatus::prefix_hit};
      miss_status = CacheStatus::recomputed_short;
    } catch (const CacheCorrupt&) {
      miss_status = CacheStatus::recomputed_corrupt;
    }
  }
  CoefficientTable fresh = compute_coefficients(curve, n_max);
  write_coefficient_file(path, fresh);
  return {std::move(fresh), miss_status};
}

}  // namespace ellidyn
