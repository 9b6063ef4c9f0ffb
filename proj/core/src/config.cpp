#include "ellidyn/config.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <sstream>

namespace ellidyn {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, sep);) out.push_back(trim(item));
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    throw ConfigError(key + ": integer out of range");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string PipelineConfig::effective_cache_dir() const {
  return cache_dir.empty() ? out_dir + "/cache" : cache_dir;
}

const char* to_string(BoundRule rule) { return rule == BoundRule::crude ? "crude" : "trapping"; }

Viewport parse_viewport(const std::string& text) {
  const auto parts = split(text, ',');
  if (parts.size() != 4) throw ConfigError("viewport: expected re0,re1,im0,im1");
  Viewport vp;
  vp.re_min = to_double("viewport", parts[0]);
  vp.re_max = to_double("viewport", parts[1]);
  vp.im_min = to_double("viewport", parts[2]);
  vp.im_max = to_double("viewport", parts[3]);
  if (!(vp.re_min < vp.re_max) || !(vp.im_min < vp.im_max)) {
    throw ConfigError("viewport: need re0 < re1 and im0 < im1");
  }
  return vp;
}

std::pair<int, int> parse_size(const std::string& text) {
  const auto x = text.find('x');
  if (x == std::string::npos) throw ConfigError("size: expected WxH");
  const auto w = to_u64("size", text.substr(0, x));
  const auto h = to_u64("size", text.substr(x + 1));
  if (w == 0 || h == 0 || w > 100000 || h > 100000) throw ConfigError("size: out of range");
  return {static_cast<int>(w), static_cast<int>(h)};
}

void apply_config_value(PipelineConfig& cfg, const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  using Setter = std::function<void()>;
  const std::map<std::string, Setter> setters{
      {"allcurves", [&] { cfg.allcurves = split(v, ','); }},
      {"max_conductor", [&] { cfg.max_conductor = to_u64(key, v); }},
      {"sample_size", [&] { cfg.sample_size = to_u64(key, v); }},
      {"rng_seed", [&] { cfg.rng_seed = to_u64(key, v); }},
      {"one_per_class", [&] { cfg.one_per_class = to_bool(key, v); }},
      {"n_max", [&] { cfg.n_max = to_u64(key, v); }},
      {"viewport",
       [&] {
         const Viewport vp = parse_viewport(v);
         cfg.viewport.re_min = vp.re_min;
         cfg.viewport.re_max = vp.re_max;
         cfg.viewport.im_min = vp.im_min;
         cfg.viewport.im_max = vp.im_max;
       }},
      {"image_size",
       [&] {
         const auto [w, h] = parse_size(v);
         cfg.viewport.width = w;
         cfg.viewport.height = h;
       }},
      {"max_iter", [&] { cfg.max_iter = static_cast<int>(to_u64(key, v)); }},
      {"radius", [&] { cfg.radius = to_double(key, v); }},
      {"palette",
       [&] {
         parse_palette(v);
         cfg.palette = v;
       }},
      {"render_images", [&] { cfg.render_images = to_bool(key, v); }},
      {"tau_region",
       [&] {
         const Viewport vp = parse_viewport(v);
         cfg.tau_region.re_min = vp.re_min;
         cfg.tau_region.re_max = vp.re_max;
         cfg.tau_region.im_min = vp.im_min;
         cfg.tau_region.im_max = vp.im_max;
       }},
      {"tau_grid", [&] { cfg.tau_grid = static_cast<int>(to_u64(key, v)); }},
      {"tau_iters", [&] { cfg.tau_iters = static_cast<int>(to_u64(key, v)); }},
      {"tau_radius", [&] { cfg.tau_radius = to_double(key, v); }},
      {"min_survivors", [&] { cfg.min_survivors = static_cast<long>(to_u64(key, v)); }},
      {"consistency", [&] { cfg.consistency = to_bool(key, v); }},
      {"consistency_max_conductor", [&] { cfg.consistency_max_conductor = to_u64(key, v); }},
      {"entropy_bound",
       [&] {
         if (v == "crude") {
           cfg.entropy_bound = BoundRule::crude;
         } else if (v == "trapping") {
           cfg.entropy_bound = BoundRule::trapping;
         } else {
           throw ConfigError(key + ": expected crude or trapping");
         }
       }},
      {"word_length", [&] { cfg.word_length = static_cast<int>(to_u64(key, v)); }},
      {"entropy_seeds", [&] { cfg.entropy_seeds = static_cast<int>(to_u64(key, v)); }},
      {"lap_depth", [&] { cfg.lap_depth = static_cast<int>(to_u64(key, v)); }},
      {"agreement_tolerance", [&] { cfg.agreement_tolerance = to_double(key, v); }},
      {"alpha", [&] { cfg.alpha = to_double(key, v); }},
      {"permutations", [&] { cfg.permutations = to_u64(key, v); }},
      {"out_dir", [&] { cfg.out_dir = v; }},
      {"cache_dir", [&] { cfg.cache_dir = v; }},
      {"jobs", [&] { cfg.jobs = static_cast<unsigned>(std::max<std::uint64_t>(1, to_u64(key, v))); }},
  };
  const auto it = setters.find(key);
  if (it == setters.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second();
}

void load_config(PipelineConfig& cfg, std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    apply_config_value(cfg, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
}

void load_config_file(PipelineConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  load_config(cfg, in);
}

std::string format_config(const PipelineConfig& c) {
  std::ostringstream os;
  const auto region = [](const Viewport& vp) {
    return fmt(vp.re_min) + "," + fmt(vp.re_max) + "," + fmt(vp.im_min) + "," + fmt(vp.im_max);
  };
  std::string paths;
  for (std::size_t i = 0; i < c.allcurves.size(); ++i) paths += (i ? "," : "") + c.allcurves[i];
  os << "allcurves = " << paths << '\n'
     << "max_conductor = " << c.max_conductor << '\n'
     << "sample_size = " << c.sample_size << '\n'
     << "rng_seed = " << c.rng_seed << '\n'
     << "one_per_class = " << (c.one_per_class ? "true" : "false") << '\n'
     << "n_max = " << c.n_max << '\n'
     << "viewport = " << region(c.viewport) << '\n'
     << "image_size = " << c.viewport.width << 'x' << c.viewport.height << '\n'
     << "max_iter = " << c.max_iter << '\n'
     << "radius = " << fmt(c.radius) << '\n'
     << "palette = " << c.palette << '\n'
     << "render_images = " << (c.render_images ? "true" : "false") << '\n'
     << "tau_region = " << region(c.tau_region) << '\n'
     << "tau_grid = " << c.tau_grid << '\n'
     << "tau_iters = " << c.tau_iters << '\n'
     << "tau_radius = " << fmt(c.tau_radius) << '\n'
     << "min_survivors = " << c.min_survivors << '\n'
     << "consistency = " << (c.consistency ? "true" : "false") << '\n'
     << "consistency_max_conductor = " << c.consistency_max_conductor << '\n'
     << "entropy_bound = " << to_string(c.entropy_bound) << '\n'
     << "word_length = " << c.word_length << '\n'
     << "entropy_seeds = " << c.entropy_seeds << '\n'
     << "lap_depth = " << c.lap_depth << '\n'
     << "agreement_tolerance = " << fmt(c.agreement_tolerance) << '\n'
     << "alpha = " << fmt(c.alpha) << '\n'
     << "permutations = " << c.permutations << '\n';
  // out_dir, cache_dir and jobs do not affect results and are left out of the echo.
  return os.str();
}

}  // namespace ellidyn
