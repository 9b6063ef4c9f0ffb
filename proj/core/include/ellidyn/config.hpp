#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "ellidyn/lseries.hpp"

namespace ellidyn {

// How the entropy study picks the interval [-B, B] for each polynomial.
enum class BoundRule {
  crude,     // 1 + max |A_k|, widened to the trapping radius when needed
  trapping,  // the trapping radius itself
};

struct PipelineConfig {
  std::vector<std::string> allcurves{"data/allcurves.00000-00999"};
  std::uint64_t max_conductor = 1000;
  std::size_t sample_size = 30;
  std::uint64_t rng_seed = 20081231;
  bool one_per_class = true;

  std::size_t n_max = 1000;

  Viewport viewport{};  // images; width/height are the image size
  int max_iter = 50;
  double radius = 100.0;
  std::string palette = "log-gray";
  bool render_images = false;

  Viewport tau_region{};  // seeds; grid overrides width/height
  int tau_grid = 300;
  int tau_iters = 60;
  double tau_radius = 100.0;
  long min_survivors = 100;

  bool consistency = true;
  std::uint64_t consistency_max_conductor = 100;
  BoundRule entropy_bound = BoundRule::trapping;
  int word_length = 14;
  int entropy_seeds = 100000;
  int lap_depth = 14;
  double agreement_tolerance = 0.1;

  double alpha = 0.001;
  std::uint64_t permutations = 100000;

  std::string out_dir = "ellidyn-out";
  std::string cache_dir;  // empty: <out_dir>/cache
  unsigned jobs = 1;

  std::string effective_cache_dir() const;
};

// Applies one `key = value` assignment; throws ConfigError on unknown keys or bad values.
void apply_config_value(PipelineConfig& cfg, const std::string& key, const std::string& value);

// Line-oriented `key = value` text with `#` comments.
void load_config(PipelineConfig& cfg, std::istream& in);
void load_config_file(PipelineConfig& cfg, const std::string& path);

// Every key in a fixed order, in the same syntax load_config reads.
std::string format_config(const PipelineConfig& cfg);

Viewport parse_viewport(const std::string& text);  // re0,re1,im0,im1
std::pair<int, int> parse_size(const std::string& text);  // WxH

const char* to_string(BoundRule rule);

}  // namespace ellidyn
