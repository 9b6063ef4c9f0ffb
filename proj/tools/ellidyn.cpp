// ellidyn: command-line driver over the ellidyn core library.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ellidyn/coeffs.hpp"
#include "ellidyn/config.hpp"
#include "ellidyn/errors.hpp"
#include "ellidyn/ingest.hpp"
#include "ellidyn/lseries.hpp"
#include "ellidyn/pipeline.hpp"
#include "ellidyn/polydyn.hpp"
#include "ellidyn/stats.hpp"
#include "ellidyn/version.hpp"

namespace fs = std::filesystem;
using namespace ellidyn;

namespace {

struct Globals {
  std::string config_path;
  std::optional<unsigned> jobs;
  std::optional<std::string> cache;
  bool verbose = false;
};

// Flag values are collected first and applied after the config file, so flags win.
struct Overrides {
  std::vector<std::pair<std::string, std::string>> items;
  void set(const std::string& key, const std::string& value) { items.emplace_back(key, value); }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

PipelineConfig effective_config(const Globals& g, const Overrides& o) {
  PipelineConfig cfg;
  if (!g.config_path.empty()) load_config_file(cfg, g.config_path);
  for (const auto& [k, v] : o.items) apply_config_value(cfg, k, v);
  if (g.jobs) cfg.jobs = std::max(1u, *g.jobs);
  if (g.cache) cfg.cache_dir = *g.cache;
  if (g.verbose) std::cerr << "# effective configuration\n" << format_config(cfg);
  return cfg;
}

// Curves come from --db (a db.csv or sample.csv) when given, else from the configured tables.
std::vector<CurveRecord> curve_source(const std::string& db, const PipelineConfig& cfg) {
  if (!db.empty()) return read_curve_csv_file(db);
  return load_allcurves(cfg.allcurves, std::cerr);
}

const CurveRecord& require_curve(const std::vector<CurveRecord>& records, const std::string& label) {
  const CurveRecord* r = find_curve(records, label);
  if (!r) throw Error("unknown curve label '" + label + "'");
  return *r;
}

CoefficientTable coefficients_for(const CurveRecord& rec, const PipelineConfig& cfg, bool verbose) {
  const CoefficientCache cache(cfg.effective_cache_dir());
  CacheLookup lookup = cache.get(rec.curve(), cfg.n_max);
  if (verbose) std::cerr << "coeffs: " << rec.label << " " << to_string(lookup.status) << '\n';
  return std::move(lookup.table);
}

template <typename T>
void add_override(CLI::App* app, Overrides& o, const std::string& flag, const std::string& key,
                  const std::string& help) {
  app->add_option_function<T>(
      flag,
      [&o, key](const T& v) {
        std::ostringstream os;
        os.precision(17);
        os << v;
        o.set(key, os.str());
      },
      help);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamics of truncated elliptic-curve L-series and their formal-group polynomials"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  app.set_version_flag("--version", kVersion);
  // One help screen lists every subcommand together with its flags.
  app.set_help_flag();
  app.set_help_all_flag("--help,-h", "print every subcommand and flag, then exit");

  Globals g;
  Overrides o;
  app.add_option("--config", g.config_path, "key = value configuration file")->check(CLI::ExistingFile);
  app.add_option_function<unsigned>("--jobs", [&](unsigned v) { g.jobs = v; }, "worker threads");
  app.add_option_function<std::string>("--cache", [&](const std::string& v) { g.cache = v; },
                                       "coefficient cache directory");
  add_override<std::string>(&app, o, "--allcurves", "allcurves",
                            "comma-separated allcurves tables used for label lookup and the pipeline");
  app.add_flag("--verbose,-v", g.verbose, "log progress and the effective configuration to stderr");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "parse allcurves tables into a curve CSV");
  std::vector<std::string> ingest_paths;
  std::string ingest_out;
  std::optional<std::uint64_t> ingest_max;
  bool ingest_semistable = false;
  bool ingest_one_per_class = false;
  ingest->add_option("--allcurves", ingest_paths, "allcurves table files")->required();
  ingest->add_option_function<std::uint64_t>("--max-conductor", [&](std::uint64_t v) { ingest_max = v; },
                                             "largest conductor kept");
  ingest->add_flag("--semistable-only", ingest_semistable, "keep squarefree conductors only");
  ingest->add_flag("--one-per-class", ingest_one_per_class, "keep the first curve of each isogeny class");
  ingest->add_option("--out", ingest_out, "output db.csv")->required();

  // sample
  auto* sample = app.add_subcommand("sample", "draw a systematic sample with a seeded start");
  std::string sample_db;
  std::string sample_out;
  sample->add_option("--db", sample_db, "curve CSV from ingest")->required();
  add_override<std::size_t>(sample, o, "--size", "sample_size", "sample size");
  add_override<std::uint64_t>(sample, o, "--seed", "rng_seed", "64-bit seed");
  add_override<std::uint64_t>(sample, o, "--max-conductor", "max_conductor", "largest conductor");
  sample->add_option("--out", sample_out, "output sample.csv")->required();

  // coeffs
  auto* coeffs = app.add_subcommand("coeffs", "compute and cache Dirichlet coefficients");
  std::string coeffs_db;
  std::string coeffs_labels;
  std::string coeffs_sample;
  coeffs->add_option("--db", coeffs_db, "curve CSV used for label lookup");
  auto* labels_opt = coeffs->add_option("--labels", coeffs_labels, "comma-separated curve labels");
  auto* sample_opt = coeffs->add_option("--sample", coeffs_sample, "sample.csv whose curves are computed");
  labels_opt->excludes(sample_opt);
  add_override<std::size_t>(coeffs, o, "--nmax", "n_max", "number of coefficients");

  // render
  auto* render = app.add_subcommand("render", "escape-time image of the iterated truncated L-series");
  std::string render_db;
  std::string render_label;
  std::string render_out;
  std::string render_csv;
  render->add_option("--db", render_db, "curve CSV used for label lookup");
  render->add_option("--label", render_label, "curve label")->required();
  add_override<std::size_t>(render, o, "--nmax", "n_max", "number of series terms");
  add_override<std::string>(render, o, "--viewport", "viewport", "re0,re1,im0,im1");
  add_override<std::string>(render, o, "--size", "image_size", "WxH pixels");
  add_override<int>(render, o, "--max-iter", "max_iter", "iteration cap");
  add_override<double>(render, o, "--radius", "radius", "escape radius");
  add_override<std::string>(render, o, "--palette", "palette", "gray or log-gray");
  render->add_option("--out", render_out, "output .pgm")->required();
  render->add_option("--csv", render_csv, "also dump the field as i,j,t CSV with a .meta sidecar");

  // escape-rate
  auto* escape = app.add_subcommand("escape-rate", "fit the survivor decay rate tau");
  std::string escape_db;
  std::string escape_labels;
  std::string escape_out;
  escape->add_option("--db", escape_db, "curve CSV used for label lookup");
  escape->add_option("--label", escape_labels, "curve label (comma-separated for several)")->required();
  add_override<std::size_t>(escape, o, "--nmax", "n_max", "number of series terms");
  add_override<std::string>(escape, o, "--region", "tau_region", "re0,re1,im0,im1 seed region");
  add_override<int>(escape, o, "--grid", "tau_grid", "seeds per side");
  add_override<int>(escape, o, "--iters", "tau_iters", "iterations K");
  add_override<double>(escape, o, "--radius", "tau_radius", "escape radius");
  add_override<long>(escape, o, "--min-survivors", "min_survivors", "smallest S_k in the fit window");
  escape->add_option("--out", escape_out, "output tau.csv")->required();

  // l1
  auto* l1 = app.add_subcommand("l1", "truncated partial sum of the L-series at 1");
  std::string l1_db;
  std::string l1_labels;
  std::string l1_out;
  l1->add_option("--db", l1_db, "curve CSV used for label lookup");
  l1->add_option("--label", l1_labels, "curve label (comma-separated for several)")->required();
  add_override<std::size_t>(l1, o, "--nmax", "n_max", "number of series terms");
  l1->add_option("--out", l1_out, "write l1.csv instead of printing");

  // entropy
  auto* entropy = app.add_subcommand("entropy", "topological entropy of the formal-group polynomial");
  std::string entropy_db;
  std::string entropy_label;
  std::string entropy_method = "wordcount";
  std::string entropy_interval;
  std::optional<double> entropy_bound_flag;
  std::string entropy_out;
  entropy->add_option("--db", entropy_db, "curve CSV used for label lookup");
  entropy->add_option("--label", entropy_label, "curve label")->required();
  entropy->add_option("--method", entropy_method, "wordcount or lapcount")
      ->check(CLI::IsMember({"wordcount", "lapcount"}));
  entropy->add_option("--interval", entropy_interval, "lo,hi (default [-B, B])");
  entropy->add_option_function<double>("--bound", [&](double v) { entropy_bound_flag = v; },
                                       "escape bound B (default from entropy_bound rule)");
  add_override<int>(entropy, o, "--word-len", "word_length", "itinerary length n");
  add_override<int>(entropy, o, "--seeds", "entropy_seeds", "seed grid size g");
  add_override<int>(entropy, o, "--depth", "lap_depth", "largest iterate for lap counting");
  entropy->add_option("--out", entropy_out, "output entropy.csv (stdout when omitted)");

  // correlate
  auto* correlate = app.add_subcommand("correlate", "Spearman correlation of tau against L(1)");
  std::string corr_sample;
  std::string corr_tau;
  std::string corr_l1;
  std::string corr_out;
  correlate->add_option("--sample", corr_sample, "sample.csv")->required();
  correlate->add_option("--tau", corr_tau, "tau.csv")->required();
  correlate->add_option("--l1", corr_l1, "l1.csv")->required();
  add_override<double>(correlate, o, "--alpha", "alpha", "significance level");
  add_override<std::uint64_t>(correlate, o, "--permutations", "permutations", "permutation count");
  add_override<std::uint64_t>(correlate, o, "--seed", "rng_seed", "permutation seed");
  correlate->add_option("--out", corr_out, "report directory")->required();

  // pipeline
  auto* pipeline = app.add_subcommand("pipeline", "ingest, sample, coefficients, tau, L(1), correlate");
  add_override<std::string>(pipeline, o, "--out", "out_dir", "output directory");
  pipeline->add_flag_function(
      "--no-consistency", [&](std::int64_t) { o.set("consistency", "false"); },
      "skip the conductor-consistency study");
  pipeline->add_flag_function(
      "--images", [&](std::int64_t) { o.set("render_images", "true"); }, "render a PGM per sampled curve");

  CLI11_PARSE(app, argc, argv);

  try {
    const PipelineConfig cfg = effective_config(g, o);

    if (*ingest) {
      const auto records = load_allcurves(ingest_paths, std::cerr);
      PopulationFilter f;
      f.max_conductor = ingest_max.value_or(~std::uint64_t{0});
      f.semistable_only = ingest_semistable;
      f.one_per_class = ingest_one_per_class;
      const auto kept = filter_population(records, f);
      write_curve_csv_file(ingest_out, kept);
      std::cout << "ingest: " << records.size() << " parsed, " << kept.size() << " kept\n";
      return kExitOk;
    }

    if (*sample) {
      SamplePlan plan;
      plan.population_filter.max_conductor = cfg.max_conductor;
      plan.population_filter.semistable_only = true;
      plan.population_filter.one_per_class = cfg.one_per_class;
      plan.sample_size = cfg.sample_size;
      plan.rng_seed = cfg.rng_seed;
      const auto drawn = draw_sample(read_curve_csv_file(sample_db), plan);
      write_curve_csv_file(sample_out, drawn);
      std::cout << "sample: " << drawn.size() << " curves\n";
      return kExitOk;
    }

    if (*coeffs) {
      std::vector<CurveRecord> targets;
      if (!coeffs_sample.empty()) {
        targets = read_curve_csv_file(coeffs_sample);
      } else if (!coeffs_labels.empty()) {
        const auto records = curve_source(coeffs_db, cfg);
        for (const auto& label : split_list(coeffs_labels)) targets.push_back(require_curve(records, label));
      } else {
        throw ConfigError("coeffs: give --labels or --sample");
      }
      const CoefficientCache cache(cfg.effective_cache_dir());
      for (const auto& rec : targets) {
        const CacheLookup lookup = cache.get(rec.curve(), cfg.n_max);
        std::cout << rec.label << ' ' << to_string(lookup.status) << ' ' << cache.path_for(rec.label).string()
                  << '\n';
      }
      return kExitOk;
    }

    if (*render) {
      const auto records = curve_source(render_db, cfg);
      const CoefficientTable table = coefficients_for(require_curve(records, render_label), cfg, g.verbose);
      const EscapeField field =
          render_escape_field(table, cfg.n_max, cfg.viewport, cfg.max_iter, cfg.radius, cfg.jobs);
      write_text(render_out, field_to_image(field, parse_palette(cfg.palette)));
      if (!render_csv.empty()) write_field_csv(render_csv, field);
      std::cout << "render: " << render_out << " structure=" << fmt(structure_metric(field)) << '\n';
      return kExitOk;
    }

    if (*escape) {
      const auto records = curve_source(escape_db, cfg);
      std::vector<TauRow> rows;
      bool flagged = false;
      for (const auto& label : split_list(escape_labels)) {
        const CoefficientTable table = coefficients_for(require_curve(records, label), cfg, g.verbose);
        TauRow row{label, std::nullopt, ""};
        try {
          row.fit = estimate_escape_rate(table, cfg.n_max, cfg.tau_region, cfg.tau_grid, cfg.tau_iters,
                                         cfg.tau_radius, cfg.min_survivors, cfg.jobs);
        } catch (const InsufficientDecay& e) {
          row.flags = "insufficient-decay";
          std::cerr << "escape-rate: " << label << ": " << e.what() << '\n';
        } catch (const InsufficientSurvivors& e) {
          row.flags = "insufficient-survivors";
          std::cerr << "escape-rate: " << label << ": " << e.what() << '\n';
        }
        flagged = flagged || !row.flags.empty();
        rows.push_back(std::move(row));
      }
      write_text(escape_out, format_tau_csv(rows));
      return flagged ? kExitPartial : kExitOk;
    }

    if (*l1) {
      const auto records = curve_source(l1_db, cfg);
      std::vector<std::pair<std::string, double>> rows;
      for (const auto& label : split_list(l1_labels)) {
        const CoefficientTable table = coefficients_for(require_curve(records, label), cfg, g.verbose);
        rows.emplace_back(label, eval_L1(table, cfg.n_max).real());
      }
      if (l1_out.empty()) {
        for (const auto& [label, v] : rows) std::cout << label << ' ' << fmt(v) << '\n';
      } else {
        write_text(l1_out, format_l1_csv(rows));
      }
      return kExitOk;
    }

    if (*entropy) {
      const auto records = curve_source(entropy_db, cfg);
      const FormalPolynomial poly = formal_polynomial(require_curve(records, entropy_label).curve());
      const RealPolynomial real = to_real_polynomial(poly);
      const double bound = entropy_bound_flag.value_or(entropy_bound(poly, cfg.entropy_bound));
      double lo = -bound;
      double hi = bound;
      if (!entropy_interval.empty()) {
        const auto parts = split_list(entropy_interval);
        if (parts.size() != 2) throw ConfigError("--interval: expected lo,hi");
        lo = std::stod(parts[0]);
        hi = std::stod(parts[1]);
      }
      EntropyEstimate est;
      if (entropy_method == "lapcount") {
        est = entropy_lapcount(real, lo, hi, cfg.lap_depth);
      } else {
        SymbolicConfig sc;
        sc.x_lo = lo;
        sc.x_hi = hi;
        sc.bound = bound;
        sc.word_length = cfg.word_length;
        sc.seeds = cfg.entropy_seeds;
        est = entropy_wordcount(real, sc, cfg.jobs);
      }
      const std::string csv = format_entropy_csv(est);
      if (entropy_out.empty()) {
        std::cout << csv;
      } else {
        write_text(entropy_out, csv);
      }
      return kExitOk;
    }

    if (*correlate) {
      const auto curves = read_curve_csv_file(corr_sample);
      std::ifstream tau_in(corr_tau);
      if (!tau_in) throw Error("cannot read " + corr_tau);
      std::ifstream l1_in(corr_l1);
      if (!l1_in) throw Error("cannot read " + corr_l1);
      std::map<std::string, TauEntry> taus;
      for (auto& [label, e] : read_tau_csv(tau_in)) taus[label] = e;
      std::map<std::string, double> l1s;
      for (auto& [label, v] : read_l1_csv(l1_in)) l1s[label] = v;

      std::vector<ExperimentRow> rows;
      for (const auto& c : curves) {
        ExperimentRow row;
        row.label = c.label;
        row.conductor = c.conductor;
        if (const auto it = taus.find(c.label); it != taus.end()) {
          row.tau = it->second.tau;
          row.fit_r2 = it->second.fit_r2;
          row.flags = it->second.flags;
        }
        if (const auto it = l1s.find(c.label); it != l1s.end()) row.l1 = it->second;
        if (row.flags.empty() && !row.tau) row.flags = "missing-tau";
        if (row.flags.empty() && !row.l1) row.flags = "missing-l1";
        rows.push_back(std::move(row));
      }
      const ExperimentOutcome out =
          experiment_report(rows, cfg.alpha, cfg.permutations, cfg.rng_seed, format_config(cfg), corr_out, cfg.jobs);
      std::cout << "r_s = " << fmt(out.correlation.r_s) << "  p = " << fmt(out.correlation.p_value) << "  "
                << to_string(out.correlation.decision) << '\n';
      return out.flagged_labels.empty() ? kExitOk : kExitPartial;
    }

    if (*pipeline) {
      const PipelineResult result = run_pipeline(cfg, std::cerr);
      if (result.correlation) {
        std::cout << "r_s = " << fmt(result.correlation->r_s) << "  p = " << fmt(result.correlation->p_value)
                  << "  " << to_string(result.correlation->decision) << '\n';
      }
      if (result.consistency) {
        std::cout << "estimator agreement = " << fmt(result.consistency->agreement_fraction) << '\n';
      }
      return result.exit_code;
    }
  } catch (const std::exception& e) {
    std::cerr << "ellidyn " << app.get_subcommands().front()->get_name() << ": " << e.what() << '\n';
    return kExitHardFailure;
  }
  return kExitOk;
}
