#include "ellidyn/lseries.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace ellidyn {

namespace {

// Plain complex product; avoids the NaN/Inf recovery path of operator*.
inline Complex mul(Complex x, Complex y) {
  return {x.real() * y.real() - x.imag() * y.imag(), x.real() * y.imag() + x.imag() * y.real()};
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void Viewport::validate() const {
  if (!(re_min < re_max) || !(im_min < im_max)) throw std::invalid_argument("empty viewport");
  if (width < 1 || height < 1) throw std::invalid_argument("viewport needs positive pixel size");
}

std::string Viewport::describe() const {
  return format_double(re_min) + "," + format_double(re_max) + "," + format_double(im_min) + "," +
         format_double(im_max);
}

TruncatedLSeries::TruncatedLSeries(const CoefficientTable& table, std::size_t n_terms)
    : label_(table.label), n_terms_(n_terms) {
  if (n_terms < 1 || n_terms > table.n_max) {
    throw std::invalid_argument("number of terms must lie in [1, n_max]");
  }
  coeff_.assign(n_terms + 1, 0.0);
  log_n_.assign(n_terms + 1, 0.0);
  spf_.assign(n_terms + 1, 0);
  for (std::size_t n = 1; n <= n_terms; ++n) {
    coeff_[n] = static_cast<double>(table.a[n]);
    log_n_[n] = std::log(static_cast<double>(n));
  }
  for (std::size_t i = 2; i <= n_terms; ++i) {
    if (spf_[i] != 0) continue;
    for (std::size_t j = i; j <= n_terms; j += i) {
      if (spf_[j] == 0) spf_[j] = static_cast<std::uint32_t>(i);
    }
  }
  log_max_ = log_n_[n_terms];
}

MapValue TruncatedLSeries::operator()(Complex z) const {
  const double x = z.real();
  const double y = z.imag();
  // Re(-z ln n) is largest at n = N when Re z < 0.
  if (-x * log_max_ > kMaxTermExponent) return {Complex(0.0, 0.0), true};

  thread_local std::vector<Complex> power;
  power.resize(n_terms_ + 1);
  power[1] = Complex(1.0, 0.0);
  Complex sum = coeff_[1] * power[1];
  for (std::size_t n = 2; n <= n_terms_; ++n) {
    const std::uint32_t p = spf_[n];
    if (p == n) {
      const double mag = std::exp(-x * log_n_[n]);
      const double phase = -y * log_n_[n];
      power[n] = Complex(mag * std::cos(phase), mag * std::sin(phase));
    } else {
      power[n] = mul(power[p], power[n / p]);
    }
    if (coeff_[n] != 0.0) sum += coeff_[n] * power[n];
  }
  if (!std::isfinite(sum.real()) || !std::isfinite(sum.imag())) return {sum, true};
  return {sum, false};
}

MapValue eval_L(const CoefficientTable& table, std::size_t n_terms, Complex z) {
  return TruncatedLSeries(table, n_terms)(z);
}

Complex eval_L1(const CoefficientTable& table, std::size_t n_terms) {
  const MapValue v = eval_L(table, n_terms, Complex(1.0, 0.0));
  if (v.overflow || v.z.imag() != 0.0) throw std::logic_error("L(1) partial sum must be real");
  return v.z;
}

EscapeField render_escape_field(const CoefficientTable& table, std::size_t n_terms,
                                const Viewport& viewport, int max_iter, double radius,
                                unsigned jobs) {
  const TruncatedLSeries series(table, n_terms);
  EscapeField field = render_escape_field_with(series, viewport, max_iter, radius, jobs);
  field.label = table.label;
  field.n_terms = n_terms;
  return field;
}

std::vector<double> column_escape_profile(const EscapeField& field) {
  const auto& vp = field.viewport;
  std::vector<double> profile(static_cast<std::size_t>(vp.width), 0.0);
  for (int i = 0; i < vp.width; ++i) {
    int escaped = 0;
    for (int j = 0; j < vp.height; ++j) escaped += field.at(i, j) < field.max_iter ? 1 : 0;
    profile[static_cast<std::size_t>(i)] = static_cast<double>(escaped) / vp.height;
  }
  return profile;
}

double structure_metric(const EscapeField& field) {
  const int w = field.viewport.width;
  const int h = field.viewport.height;
  long pairs = 0;
  long differing = 0;
  for (int j = 0; j < h; ++j) {
    for (int i = 0; i < w; ++i) {
      if (i + 1 < w) {
        ++pairs;
        differing += field.at(i, j) != field.at(i + 1, j);
      }
      if (j + 1 < h) {
        ++pairs;
        differing += field.at(i, j) != field.at(i, j + 1);
      }
    }
  }
  return pairs == 0 ? 0.0 : static_cast<double>(differing) / static_cast<double>(pairs);
}

Palette parse_palette(const std::string& name) {
  if (name == "gray") return Palette::gray;
  if (name == "log-gray") return Palette::log_gray;
  throw std::invalid_argument("unknown palette '" + name + "' (expected gray or log-gray)");
}

std::string field_to_image(const EscapeField& field, Palette palette) {
  const auto& vp = field.viewport;
  std::ostringstream header;
  header << "P5\n# label=" << field.label << " N=" << field.n_terms
         << " viewport=" << vp.describe() << " max_iter=" << field.max_iter
         << " R=" << format_double(field.radius) << '\n'
         << vp.width << ' ' << vp.height << "\n255\n";
  std::string out = header.str();
  const double log_den = std::log1p(static_cast<double>(field.max_iter));
  for (int j = vp.height - 1; j >= 0; --j) {
    for (int i = 0; i < vp.width; ++i) {
      const int t = field.at(i, j);
      int value = 0;
      if (t < field.max_iter) {
        const double scaled = palette == Palette::gray
                                  ? 255.0 * t / field.max_iter
                                  : 255.0 * std::log1p(static_cast<double>(t)) / log_den;
        value = static_cast<int>(std::floor(scaled + 0.5));
      }
      out.push_back(static_cast<char>(static_cast<unsigned char>(value)));
    }
  }
  return out;
}

void write_field_csv(const std::filesystem::path& path, const EscapeField& field) {
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << "i,j,t\n";
    for (int j = 0; j < field.viewport.height; ++j) {
      for (int i = 0; i < field.viewport.width; ++i) out << i << ',' << j << ',' << field.at(i, j) << '\n';
    }
  }
  auto meta_path = path;
  meta_path += ".meta";
  std::ofstream meta(meta_path, std::ios::binary);
  if (!meta) throw Error("cannot write " + meta_path.string());
  const auto& vp = field.viewport;
  meta << "label = " << field.label << '\n'
       << "N = " << field.n_terms << '\n'
       << "viewport = " << vp.describe() << '\n'
       << "size = " << vp.width << 'x' << vp.height << '\n'
       << "max_iter = " << field.max_iter << '\n'
       << "R = " << format_double(field.radius) << '\n';
}

EscapeRateFit fit_escape_rate(std::vector<long> survivors, long min_survivors) {
  if (survivors.empty()) throw InsufficientDecay("no survivor counts");
  if (min_survivors < 1) throw std::invalid_argument("min_survivors must be positive");
  const double onset = 0.9 * static_cast<double>(survivors.front());
  int k_lo = -1;
  for (std::size_t k = 0; k < survivors.size(); ++k) {
    if (static_cast<double>(survivors[k]) < onset) {
      k_lo = static_cast<int>(k);
      break;
    }
  }
  if (k_lo < 0) throw InsufficientDecay("survivors never fall below 90% of S_0");
  if (survivors[static_cast<std::size_t>(k_lo)] < min_survivors) {
    throw InsufficientSurvivors("S at decay onset k=" + std::to_string(k_lo) + " is below " +
                                std::to_string(min_survivors));
  }
  int k_hi = k_lo;
  for (std::size_t k = survivors.size(); k-- > 0;) {
    if (survivors[k] >= min_survivors) {
      k_hi = static_cast<int>(k);
      break;
    }
  }
  if (k_hi <= k_lo) {
    throw InsufficientSurvivors("fit window [" + std::to_string(k_lo) + "," + std::to_string(k_hi) +
                                "] has fewer than two points");
  }

  const int count = k_hi - k_lo + 1;
  double mean_k = 0.0;
  double mean_y = 0.0;
  for (int k = k_lo; k <= k_hi; ++k) {
    mean_k += k;
    mean_y += std::log(static_cast<double>(survivors[static_cast<std::size_t>(k)]));
  }
  mean_k /= count;
  mean_y /= count;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (int k = k_lo; k <= k_hi; ++k) {
    const double dk = k - mean_k;
    const double dy = std::log(static_cast<double>(survivors[static_cast<std::size_t>(k)])) - mean_y;
    sxx += dk * dk;
    sxy += dk * dy;
    syy += dy * dy;
  }
  const double slope = sxy / sxx;
  EscapeRateFit fit;
  fit.survivors = std::move(survivors);
  fit.k_lo = k_lo;
  fit.k_hi = k_hi;
  fit.tau = std::max(-slope, 0.0);
  fit.fit_r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return fit;
}

EscapeRateFit estimate_escape_rate(const CoefficientTable& table, std::size_t n_terms,
                                   const Viewport& region, int grid, int iterations, double radius,
                                   long min_survivors, unsigned jobs) {
  const TruncatedLSeries series(table, n_terms);
  return estimate_escape_rate_with(series, region, grid, iterations, radius, min_survivors, jobs);
}

}  // namespace ellidyn
