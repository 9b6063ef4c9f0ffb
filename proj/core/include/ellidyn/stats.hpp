#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ellidyn/errors.hpp"

namespace ellidyn {

// 1-based ranks; tied values share the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const double> values);

// Pearson correlation of the average-rank vectors.
double spearman(std::span<const double> x, std::span<const double> y);

enum class Decision { reject_null, fail_to_reject };

const char* to_string(Decision decision);

struct CriticalValue {
  double value = 0.0;
  bool from_table = false;  // false: Student-t approximation
};

// Two-sided critical |r_s|. (n = 30, alpha = 0.001) comes from the published
// table value 0.45; anything else uses r = t / sqrt(t^2 + n - 2).
CriticalValue spearman_critical_value(std::size_t n, double alpha);

// Critical value from the Student-t approximation alone.
double t_approx_critical_value(std::size_t n, double alpha);

// Two-sided p-value from the Student-t approximation.
double t_approx_p_value(double r_s, std::size_t n);

Decision critical_table_decision(double r_s, std::size_t n, double alpha);

struct PermutationTest {
  double p_value = 1.0;
  std::uint64_t permutations = 0;
  std::uint64_t seed = 0;
  std::uint64_t at_least_as_extreme = 0;
};

// Two-sided empirical p-value (b + 1) / (P + 1) over seeded shuffles of y.
// Shuffles are grouped in fixed-size batches with per-batch seeds, so the
// result does not depend on `jobs`.
PermutationTest permutation_test(std::span<const double> x, std::span<const double> y,
                                 std::uint64_t permutations, std::uint64_t seed,
                                 unsigned jobs = 1);

struct CorrelationReport {
  std::size_t n_effective = 0;
  double r_s = 0.0;
  double p_value = 1.0;  // permutation
  double t_approx_p_value = 1.0;
  double alpha = 0.001;
  double critical_value = 0.0;
  bool critical_from_table = false;
  Decision decision = Decision::fail_to_reject;          // critical table
  Decision permutation_decision = Decision::fail_to_reject;
  bool decisions_agree = true;
  std::uint64_t permutations = 0;
  std::uint64_t seed = 0;
};

CorrelationReport significance(std::span<const double> x, std::span<const double> y,
                               double alpha, std::uint64_t permutations, std::uint64_t seed,
                               unsigned jobs = 1);

struct ConductorGroup {
  std::uint64_t conductor = 0;
  std::vector<std::string> labels;
  std::vector<double> entropies;
};

struct GaugeRule {
  // Empty label: first curve of the smallest conductor.
  std::string label;
};

struct GroupConsistency {
  std::uint64_t conductor = 0;
  bool consistent = true;
  std::vector<int> signs;  // sign(h_c - h_gauge) per member
};

struct ConsistencyReport {
  std::string gauge_label;
  std::uint64_t gauge_conductor = 0;
  double gauge_entropy = 0.0;
  std::vector<GroupConsistency> groups;  // every group except the gauge's own
  double fraction_consistent = 0.0;
  double mean_fraction_over_gauges = 0.0;
};

ConsistencyReport conductor_consistency(const std::vector<ConductorGroup>& groups,
                                        const GaugeRule& gauge);

struct ExperimentRow {
  std::string label;
  std::uint64_t conductor = 0;
  std::optional<double> tau;
  std::optional<double> fit_r2;
  std::optional<double> l1;
  std::string flags;  // empty when the row is usable
};

struct ExperimentOutcome {
  CorrelationReport correlation;
  std::vector<std::string> flagged_labels;
};

// report.csv + summary.txt under `dir`. Throws Error when fewer than five rows are unflagged.
ExperimentOutcome experiment_report(const std::vector<ExperimentRow>& rows, double alpha,
                                    std::uint64_t permutations, std::uint64_t seed,
                                    const std::string& config_echo,
                                    const std::filesystem::path& dir, unsigned jobs = 1);

std::string format_report_csv(const std::vector<ExperimentRow>& rows);

}  // namespace ellidyn
