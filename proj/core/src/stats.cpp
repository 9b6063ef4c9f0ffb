#include "ellidyn/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include <boost/math/distributions/students_t.hpp>

#include "ellidyn/ingest.hpp"
#include "ellidyn/parallel.hpp"
#include "ellidyn/version.hpp"

namespace ellidyn {

namespace {

constexpr std::uint64_t kPermutationBatch = 1000;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_short(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void check_pair(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("spearman: lists differ in length");
  if (x.size() < 3) throw std::invalid_argument("spearman: need at least 3 pairs");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
      throw std::invalid_argument("spearman: non-finite value");
    }
  }
}

std::vector<double> centred(std::vector<double> ranks) {
  const double mean = std::accumulate(ranks.begin(), ranks.end(), 0.0) / static_cast<double>(ranks.size());
  for (auto& r : ranks) r -= mean;
  return ranks;
}

double sum_sq(const std::vector<double>& v) {
  return std::inner_product(v.begin(), v.end(), v.begin(), 0.0);
}

std::uint64_t batch_seed(std::uint64_t seed, std::uint64_t batch) {
  // splitmix64 finaliser over (seed, batch)
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (batch + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

int sign_with_tolerance(double d) {
  constexpr double kTol = 1e-12;
  return d > kTol ? 1 : (d < -kTol ? -1 : 0);
}

}  // namespace

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n, 0.0);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  const auto rx = centred(average_ranks(x));
  const auto ry = centred(average_ranks(y));
  const double sxx = sum_sq(rx);
  const double syy = sum_sq(ry);
  if (sxx == 0.0 || syy == 0.0) throw DegenerateInput("spearman: constant input");
  const double sxy = std::inner_product(rx.begin(), rx.end(), ry.begin(), 0.0);
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

const char* to_string(Decision decision) {
  return decision == Decision::reject_null ? "reject_null" : "fail_to_reject";
}

double t_approx_critical_value(std::size_t n, double alpha) {
  if (n < 5) throw std::invalid_argument("significance needs n >= 5");
  const double dof = static_cast<double>(n - 2);
  const boost::math::students_t_distribution<double> dist(dof);
  const double t = boost::math::quantile(boost::math::complement(dist, alpha / 2.0));
  return t / std::sqrt(t * t + dof);
}

CriticalValue spearman_critical_value(std::size_t n, double alpha) {
  if (n == 30 && std::abs(alpha - 0.001) < 1e-15) return {0.45, true};
  return {t_approx_critical_value(n, alpha), false};
}

double t_approx_p_value(double r_s, std::size_t n) {
  if (n < 5) throw std::invalid_argument("significance needs n >= 5");
  const double dof = static_cast<double>(n - 2);
  const double r = std::min(std::abs(r_s), 1.0);
  if (r >= 1.0) return 0.0;
  const double t = r * std::sqrt(dof / ((1.0 + r) * (1.0 - r)));
  const boost::math::students_t_distribution<double> dist(dof);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, t));
}

Decision critical_table_decision(double r_s, std::size_t n, double alpha) {
  return std::abs(r_s) > spearman_critical_value(n, alpha).value ? Decision::reject_null
                                                                   : Decision::fail_to_reject;
}

PermutationTest permutation_test(std::span<const double> x, std::span<const double> y,
                                 std::uint64_t permutations, std::uint64_t seed, unsigned jobs) {
  const double observed = std::abs(spearman(x, y));
  const auto rx = centred(average_ranks(x));
  const auto ry = centred(average_ranks(y));
  const double denom = std::sqrt(sum_sq(rx) * sum_sq(ry));
  const std::size_t n = rx.size();

  const std::uint64_t batches = (permutations + kPermutationBatch - 1) / kPermutationBatch;
  std::vector<std::uint64_t> hits(batches, 0);
  parallel_for(static_cast<std::size_t>(batches), jobs, [&](std::size_t b) {
    std::mt19937_64 engine(batch_seed(seed, b));
    std::vector<double> perm = ry;
    const std::uint64_t begin = b * kPermutationBatch;
    const std::uint64_t end = std::min(permutations, begin + kPermutationBatch);
    std::uint64_t local = 0;
    for (std::uint64_t t = begin; t < end; ++t) {
      for (std::size_t i = n - 1; i > 0; --i) {
        std::swap(perm[i], perm[uniform_below(engine, i + 1)]);
      }
      const double r = std::inner_product(rx.begin(), rx.end(), perm.begin(), 0.0) / denom;
      if (std::abs(r) >= observed - 1e-12) ++local;
    }
    hits[b] = local;
  });

  PermutationTest out;
  out.permutations = permutations;
  out.seed = seed;
  out.at_least_as_extreme = std::accumulate(hits.begin(), hits.end(), std::uint64_t{0});
  out.p_value = static_cast<double>(out.at_least_as_extreme + 1) / static_cast<double>(permutations + 1);
  return out;
}

CorrelationReport significance(std::span<const double> x, std::span<const double> y,
                               double alpha, std::uint64_t permutations, std::uint64_t seed,
                               unsigned jobs) {
  if (x.size() < 5) throw std::invalid_argument("significance needs n >= 5");
  CorrelationReport rep;
  rep.n_effective = x.size();
  rep.r_s = spearman(x, y);
  rep.alpha = alpha;
  const CriticalValue cv = spearman_critical_value(x.size(), alpha);
  rep.critical_value = cv.value;
  rep.critical_from_table = cv.from_table;
  rep.decision = std::abs(rep.r_s) > cv.value ? Decision::reject_null : Decision::fail_to_reject;
  rep.t_approx_p_value = t_approx_p_value(rep.r_s, x.size());
  rep.permutations = permutations;
  rep.seed = seed;
  if (permutations > 0) {
    const PermutationTest perm = permutation_test(x, y, permutations, seed, jobs);
    rep.p_value = perm.p_value;
    rep.permutation_decision = perm.p_value <= alpha ? Decision::reject_null : Decision::fail_to_reject;
  }
  rep.decisions_agree = rep.decision == rep.permutation_decision;
  return rep;
}

ConsistencyReport conductor_consistency(const std::vector<ConductorGroup>& groups,
                                        const GaugeRule& gauge) {
  if (groups.size() < 2) throw std::invalid_argument("consistency needs at least two conductor groups");
  for (const auto& g : groups) {
    if (g.entropies.empty() || g.entropies.size() != g.labels.size()) {
      throw std::invalid_argument("every conductor group needs labelled entropy values");
    }
  }

  const auto evaluate = [&](std::size_t gauge_group, std::size_t gauge_member) {
    ConsistencyReport rep;
    const auto& gg = groups[gauge_group];
    rep.gauge_label = gg.labels[gauge_member];
    rep.gauge_conductor = gg.conductor;
    rep.gauge_entropy = gg.entropies[gauge_member];
    std::size_t consistent = 0;
    for (std::size_t i = 0; i < groups.size(); ++i) {
      if (groups[i].conductor == gg.conductor) continue;
      GroupConsistency gc;
      gc.conductor = groups[i].conductor;
      for (double h : groups[i].entropies) gc.signs.push_back(sign_with_tolerance(h - rep.gauge_entropy));
      gc.consistent = std::all_of(gc.signs.begin(), gc.signs.end(),
                                  [&](int s) { return s == gc.signs.front(); });
      consistent += gc.consistent ? 1 : 0;
      rep.groups.push_back(std::move(gc));
    }
    rep.fraction_consistent =
        rep.groups.empty() ? 1.0 : static_cast<double>(consistent) / static_cast<double>(rep.groups.size());
    return rep;
  };

  std::size_t gauge_group = 0;
  std::size_t gauge_member = 0;
  if (gauge.label.empty()) {
    for (std::size_t i = 1; i < groups.size(); ++i) {
      if (groups[i].conductor < groups[gauge_group].conductor) gauge_group = i;
    }
  } else {
    bool found = false;
    for (std::size_t i = 0; i < groups.size() && !found; ++i) {
      for (std::size_t j = 0; j < groups[i].labels.size(); ++j) {
        if (groups[i].labels[j] == gauge.label) {
          gauge_group = i;
          gauge_member = j;
          found = true;
          break;
        }
      }
    }
    if (!found) throw std::invalid_argument("gauge curve " + gauge.label + " not in any group");
  }

  ConsistencyReport rep = evaluate(gauge_group, gauge_member);
  double total = 0.0;
  std::size_t gauges = 0;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    for (std::size_t j = 0; j < groups[i].labels.size(); ++j) {
      total += evaluate(i, j).fraction_consistent;
      ++gauges;
    }
  }
  rep.mean_fraction_over_gauges = total / static_cast<double>(gauges);
  return rep;
}

std::string format_report_csv(const std::vector<ExperimentRow>& rows) {
  std::string out = "label,conductor,tau,fit_r2,L1,flags\n";
  const auto opt = [](const std::optional<double>& v) { return v ? fmt(*v) : std::string(); };
  for (const auto& r : rows) {
    out += r.label + ',' + std::to_string(r.conductor) + ',' + opt(r.tau) + ',' + opt(r.fit_r2) + ',' +
           opt(r.l1) + ',' + r.flags + '\n';
  }
  return out;
}

ExperimentOutcome experiment_report(const std::vector<ExperimentRow>& rows, double alpha,
                                    std::uint64_t permutations, std::uint64_t seed,
                                    const std::string& config_echo,
                                    const std::filesystem::path& dir, unsigned jobs) {
  ExperimentOutcome outcome;
  std::vector<double> l1;
  std::vector<double> tau;
  for (const auto& r : rows) {
    if (!r.flags.empty() || !r.tau || !r.l1) {
      outcome.flagged_labels.push_back(r.label);
      continue;
    }
    l1.push_back(*r.l1);
    tau.push_back(*r.tau);
  }
  if (l1.size() < 5) {
    throw Error("only " + std::to_string(l1.size()) + " unflagged pairs remain; need at least 5");
  }
  // Ordered as (L(1), tau); r_s is symmetric, so the sign matches r_s(tau, L(1)).
  outcome.correlation = significance(l1, tau, alpha, permutations, seed, jobs);
  const auto& c = outcome.correlation;

  std::filesystem::create_directories(dir);
  {
    std::ofstream csv(dir / "report.csv", std::ios::binary);
    if (!csv) throw Error("cannot write " + (dir / "report.csv").string());
    csv << format_report_csv(rows);
  }
  std::ofstream sum(dir / "summary.txt", std::ios::binary);
  if (!sum) throw Error("cannot write " + (dir / "summary.txt").string());
  sum << "ellidyn " << kVersion << " correlation report\n"
      << "pairs: (L(1), tau)\n"
      << "n_total = " << rows.size() << '\n'
      << "n_effective = " << c.n_effective << '\n'
      << "flagged =";
  for (const auto& l : outcome.flagged_labels) sum << ' ' << l;
  sum << '\n'
      << "r_s = " << fmt(c.r_s) << " (" << fmt_short(c.r_s) << ")\n"
      << "alpha = " << fmt(c.alpha) << '\n'
      << "critical_value = " << fmt(c.critical_value)
      << (c.critical_from_table ? " (published table)" : " (Student-t approximation)") << '\n'
      << "t_approx_critical_value = " << fmt(t_approx_critical_value(c.n_effective, c.alpha)) << '\n'
      << "decision_critical_table = " << to_string(c.decision) << '\n'
      << "permutations = " << c.permutations << '\n'
      << "permutation_seed = " << c.seed << '\n'
      << "permutation_p_value = " << fmt(c.p_value) << '\n'
      << "decision_permutation = " << to_string(c.permutation_decision) << '\n'
      << "t_approx_p_value = " << fmt(c.t_approx_p_value) << '\n'
      << "decisions_agree = " << (c.decisions_agree ? "true" : "false") << '\n'
      << "sign = " << (c.r_s < 0 ? "negative" : (c.r_s > 0 ? "positive" : "zero")) << '\n'
      << "reference_r_s = -0.76 (reported for a different, unrecoverable 30-curve sample)\n"
      << "\n# effective configuration\n"
      << config_echo;
  return outcome;
}

}  // namespace ellidyn
