#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ellidyn/config.hpp"
#include "ellidyn/ingest.hpp"
#include "ellidyn/polydyn.hpp"
#include "ellidyn/stats.hpp"

namespace ellidyn {

// Exit-code contract shared by the CLI and batch scripts.
enum ExitCode : int { kExitOk = 0, kExitHardFailure = 1, kExitPartial = 2 };

// Parses every file leniently; malformed lines are written to `log`.
std::vector<CurveRecord> load_allcurves(const std::vector<std::string>& paths, std::ostream& log);

const CurveRecord* find_curve(const std::vector<CurveRecord>& records, const std::string& label);

struct TauRow {
  std::string label;
  std::optional<EscapeRateFit> fit;
  std::string flags;
};

std::string format_tau_csv(const std::vector<TauRow>& rows);
// label -> (tau, fit_r2, flags)
struct TauEntry {
  std::optional<double> tau;
  std::optional<double> fit_r2;
  std::string flags;
};
std::vector<std::pair<std::string, TauEntry>> read_tau_csv(std::istream& in);

std::string format_l1_csv(const std::vector<std::pair<std::string, double>>& rows);
std::vector<std::pair<std::string, double>> read_l1_csv(std::istream& in);

// Escape bound used by the entropy study for one polynomial.
double entropy_bound(const FormalPolynomial& poly, BoundRule rule);

struct EntropyComparison {
  std::string label;
  std::uint64_t conductor = 0;
  double bound = 0.0;
  EntropyEstimate word;
  EntropyEstimate lap;
  bool agree = false;
};

EntropyComparison compare_entropy(const CurveRecord& record, const PipelineConfig& cfg);

struct ConsistencyStudy {
  std::vector<EntropyComparison> curves;
  ConsistencyReport by_wordcount;
  ConsistencyReport by_lapcount;
  double agreement_fraction = 0.0;
};

// All semi-stable curves (every isogeny-class member) up to consistency_max_conductor;
// writes consistency.csv and consistency.txt under `dir`.
ConsistencyStudy run_consistency_study(const std::vector<CurveRecord>& records,
                                       const PipelineConfig& cfg, const std::filesystem::path& dir);

struct PipelineResult {
  int exit_code = kExitOk;
  std::optional<CorrelationReport> correlation;
  std::optional<ConsistencyStudy> consistency;
  std::vector<std::string> flagged;
};

// ingest -> sample -> coeffs -> (tau, L(1)) -> correlate [-> consistency], with every
// intermediate artifact written under cfg.out_dir.
PipelineResult run_pipeline(const PipelineConfig& cfg, std::ostream& log);

}  // namespace ellidyn
