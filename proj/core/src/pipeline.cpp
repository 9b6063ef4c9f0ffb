#include "ellidyn/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "ellidyn/coeffs.hpp"
#include "ellidyn/version.hpp"

namespace ellidyn {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  for (std::string cell; std::getline(ss, cell, ',');) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string survivors_field(const std::vector<long>& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? ";" : "") + std::to_string(s[i]);
  return out;
}

}  // namespace

std::vector<CurveRecord> load_allcurves(const std::vector<std::string>& paths, std::ostream& log) {
  std::vector<CurveRecord> all;
  for (const auto& path : paths) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read curve table " + path);
    ParseResult parsed = parse_allcurves(in, ParseMode::lenient);
    for (const auto& e : parsed.errors) log << "ingest: " << path << ": " << e.what() << '\n';
    all.insert(all.end(), std::make_move_iterator(parsed.records.begin()),
               std::make_move_iterator(parsed.records.end()));
  }
  return all;
}

const CurveRecord* find_curve(const std::vector<CurveRecord>& records, const std::string& label) {
  for (const auto& r : records) {
    if (r.label == label) return &r;
  }
  return nullptr;
}

std::string format_tau_csv(const std::vector<TauRow>& rows) {
  std::string out = "label,tau,fit_r2,k_lo,k_hi,flags,survivors\n";
  for (const auto& r : rows) {
    out += r.label + ',';
    if (r.fit) {
      out += fmt(r.fit->tau) + ',' + fmt(r.fit->fit_r2) + ',' + std::to_string(r.fit->k_lo) + ',' +
             std::to_string(r.fit->k_hi) + ',' + r.flags + ',' + survivors_field(r.fit->survivors);
    } else {
      out += ",,,," + r.flags + ',';
    }
    out += '\n';
  }
  return out;
}

std::vector<std::pair<std::string, TauEntry>> read_tau_csv(std::istream& in) {
  std::vector<std::pair<std::string, TauEntry>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 || line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 7) throw ParseError(line_no, "tau CSV: expected 7 fields");
    TauEntry e;
    if (!f[1].empty()) e.tau = std::stod(f[1]);
    if (!f[2].empty()) e.fit_r2 = std::stod(f[2]);
    e.flags = f[5];
    out.emplace_back(f[0], e);
  }
  return out;
}

std::string format_l1_csv(const std::vector<std::pair<std::string, double>>& rows) {
  std::string out = "label,L1\n";
  for (const auto& [label, v] : rows) out += label + ',' + fmt(v) + '\n';
  return out;
}

std::vector<std::pair<std::string, double>> read_l1_csv(std::istream& in) {
  std::vector<std::pair<std::string, double>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 || line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 2) throw ParseError(line_no, "L1 CSV: expected 2 fields");
    out.emplace_back(f[0], std::stod(f[1]));
  }
  return out;
}

double entropy_bound(const FormalPolynomial& poly, BoundRule rule) {
  if (rule == BoundRule::crude) return default_escape_bound(poly);
  const double r = trapping_radius(to_real_polynomial(poly));
  // x^3 alone traps exactly [-1, 1]; keep a strictly positive bound for degenerate inputs.
  return r > 0.0 ? r : 1.0;
}

EntropyComparison compare_entropy(const CurveRecord& record, const PipelineConfig& cfg) {
  const FormalPolynomial poly = formal_polynomial(record.curve());
  const RealPolynomial real = to_real_polynomial(poly);
  EntropyComparison cmp;
  cmp.label = record.label;
  cmp.conductor = record.conductor;
  cmp.bound = entropy_bound(poly, cfg.entropy_bound);
  SymbolicConfig sc;
  sc.x_lo = -cmp.bound;
  sc.x_hi = cmp.bound;
  sc.bound = cmp.bound;
  sc.word_length = cfg.word_length;
  sc.seeds = cfg.entropy_seeds;
  cmp.word = entropy_wordcount(real, sc, cfg.jobs);
  cmp.lap = entropy_lapcount(real, -cmp.bound, cmp.bound, cfg.lap_depth);
  cmp.agree = std::abs(cmp.word.h - cmp.lap.h) <= cfg.agreement_tolerance;
  return cmp;
}

namespace {

std::vector<ConductorGroup> group_by_conductor(const std::vector<EntropyComparison>& curves,
                                               bool use_word) {
  std::vector<ConductorGroup> groups;
  for (const auto& c : curves) {
    if (groups.empty() || groups.back().conductor != c.conductor) {
      groups.push_back({c.conductor, {}, {}});
    }
    groups.back().labels.push_back(c.label);
    groups.back().entropies.push_back(use_word ? c.word.h : c.lap.h);
  }
  return groups;
}

std::string describe_consistency(const std::string& name, const ConsistencyReport& r) {
  std::ostringstream os;
  std::size_t consistent = 0;
  for (const auto& g : r.groups) consistent += g.consistent ? 1 : 0;
  os << name << ".gauge = " << r.gauge_label << " (N=" << r.gauge_conductor
     << ", h=" << fmt(r.gauge_entropy) << ")\n"
     << name << ".groups_compared = " << r.groups.size() << '\n'
     << name << ".groups_consistent = " << consistent << '\n'
     << name << ".fraction_consistent = " << fmt(r.fraction_consistent) << '\n'
     << name << ".mean_fraction_over_gauges = " << fmt(r.mean_fraction_over_gauges) << '\n';
  return os.str();
}

}  // namespace

ConsistencyStudy run_consistency_study(const std::vector<CurveRecord>& records,
                                       const PipelineConfig& cfg, const std::filesystem::path& dir) {
  PopulationFilter filter;
  filter.max_conductor = cfg.consistency_max_conductor;
  filter.semistable_only = true;
  filter.one_per_class = false;
  const auto population = filter_population(records, filter);

  ConsistencyStudy study;
  for (const auto& r : population) study.curves.push_back(compare_entropy(r, cfg));
  std::size_t agreeing = 0;
  for (const auto& c : study.curves) agreeing += c.agree ? 1 : 0;
  study.agreement_fraction =
      study.curves.empty() ? 0.0 : static_cast<double>(agreeing) / static_cast<double>(study.curves.size());
  study.by_wordcount = conductor_consistency(group_by_conductor(study.curves, true), GaugeRule{});
  study.by_lapcount = conductor_consistency(group_by_conductor(study.curves, false), GaugeRule{});

  std::filesystem::create_directories(dir);
  std::string csv = "label,conductor,bound,h_wordcount,h_lapcount,saturated,agree\n";
  for (const auto& c : study.curves) {
    csv += c.label + ',' + std::to_string(c.conductor) + ',' + fmt(c.bound) + ',' + fmt(c.word.h) + ',' +
           fmt(c.lap.h) + ',' + (c.word.saturated ? "true" : "false") + ',' +
           (c.agree ? "true" : "false") + '\n';
  }
  write_text(dir / "consistency.csv", csv);

  std::ostringstream txt;
  txt << "ellidyn " << kVersion << " conductor-consistency report\n"
      << "curves = " << study.curves.size() << '\n'
      << "estimator_agreement_tolerance = " << fmt(cfg.agreement_tolerance) << '\n'
      << "estimator_agreement_fraction = " << fmt(study.agreement_fraction) << '\n'
      << describe_consistency("wordcount", study.by_wordcount)
      << describe_consistency("lapcount", study.by_lapcount)
      << "reference_fraction = 0.80 (obtained under an unknown symbolic coding; not comparable)\n"
      << "\n# effective configuration\n"
      << format_config(cfg);
  write_text(dir / "consistency.txt", txt.str());
  return study;
}

PipelineResult run_pipeline(const PipelineConfig& cfg, std::ostream& log) {
  PipelineResult result;
  const std::filesystem::path out(cfg.out_dir);
  std::vector<CurveRecord> records;
  std::vector<CurveRecord> sample;
  try {
    std::filesystem::create_directories(out);
    write_text(out / "config.txt", format_config(cfg));

    records = load_allcurves(cfg.allcurves, log);
    PopulationFilter db_filter;
    db_filter.max_conductor = cfg.max_conductor;
    db_filter.semistable_only = true;
    db_filter.one_per_class = false;
    write_curve_csv_file((out / "db.csv").string(), filter_population(records, db_filter));

    SamplePlan plan;
    plan.population_filter.max_conductor = cfg.max_conductor;
    plan.population_filter.semistable_only = true;
    plan.population_filter.one_per_class = cfg.one_per_class;
    plan.sample_size = cfg.sample_size;
    plan.rng_seed = cfg.rng_seed;
    sample = draw_sample(records, plan);
    write_curve_csv_file((out / "sample.csv").string(), sample);
  } catch (const SampleError& e) {
    log << "sample: " << e.what() << '\n';
    result.exit_code = kExitHardFailure;
    return result;
  } catch (const std::exception& e) {
    log << "ingest: " << e.what() << '\n';
    result.exit_code = kExitHardFailure;
    return result;
  }

  const CoefficientCache cache(cfg.effective_cache_dir());
  std::vector<TauRow> tau_rows;
  std::vector<std::pair<std::string, double>> l1_rows;
  std::vector<ExperimentRow> rows;
  for (const auto& rec : sample) {
    ExperimentRow row;
    row.label = rec.label;
    row.conductor = rec.conductor;
    TauRow tau_row;
    tau_row.label = rec.label;
    try {
      const CacheLookup lookup = cache.get(rec.curve(), cfg.n_max);
      log << "coeffs: " << rec.label << " " << to_string(lookup.status) << '\n';
      const CoefficientTable& table = lookup.table;

      const double l1 = eval_L1(table, cfg.n_max).real();
      row.l1 = l1;
      l1_rows.emplace_back(rec.label, l1);

      try {
        const EscapeRateFit fit =
            estimate_escape_rate(table, cfg.n_max, cfg.tau_region, cfg.tau_grid, cfg.tau_iters,
                                 cfg.tau_radius, cfg.min_survivors, cfg.jobs);
        row.tau = fit.tau;
        row.fit_r2 = fit.fit_r2;
        tau_row.fit = fit;
        log << "escape-rate: " << rec.label << " tau=" << fmt(fit.tau) << '\n';
      } catch (const InsufficientDecay&) {
        row.flags = tau_row.flags = "insufficient-decay";
      } catch (const InsufficientSurvivors&) {
        row.flags = tau_row.flags = "insufficient-survivors";
      }

      if (cfg.render_images) {
        std::filesystem::create_directories(out / "images");
        const EscapeField field =
            render_escape_field(table, cfg.n_max, cfg.viewport, cfg.max_iter, cfg.radius, cfg.jobs);
        write_text(out / "images" / (rec.label + ".pgm"),
                   field_to_image(field, parse_palette(cfg.palette)));
      }
    } catch (const std::exception& e) {
      log << "coeffs: " << rec.label << ": " << e.what() << '\n';
      row.flags = tau_row.flags = "coefficient-error";
    }
    if (!row.flags.empty()) {
      log << "flagged: " << rec.label << " (" << row.flags << ")\n";
      result.flagged.push_back(rec.label);
    }
    rows.push_back(std::move(row));
    tau_rows.push_back(std::move(tau_row));
  }
  write_text(out / "tau.csv", format_tau_csv(tau_rows));
  write_text(out / "l1.csv", format_l1_csv(l1_rows));

  try {
    const ExperimentOutcome outcome = experiment_report(rows, cfg.alpha, cfg.permutations, cfg.rng_seed,
                                                        format_config(cfg), out / "report", cfg.jobs);
    result.correlation = outcome.correlation;
    log << "correlate: r_s=" << fmt(outcome.correlation.r_s)
        << " p=" << fmt(outcome.correlation.p_value) << '\n';
  } catch (const std::exception& e) {
    log << "correlate: " << e.what() << '\n';
    result.exit_code = kExitHardFailure;
    return result;
  }

  if (cfg.consistency) {
    try {
      result.consistency = run_consistency_study(records, cfg, out / "consistency");
      log << "consistency: agreement=" << fmt(result.consistency->agreement_fraction) << '\n';
    } catch (const std::exception& e) {
      log << "consistency: " << e.what() << '\n';
      result.exit_code = kExitHardFailure;
      return result;
    }
  }

  result.exit_code = result.flagged.empty() ? kExitOk : kExitPartial;
  return result;
}

}  // namespace ellidyn
