#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "gprscan/error.hpp"
#include "gprscan/hog.hpp"
#include "gprscan/image.hpp"
#include "gprscan/io.hpp"
#include "gprscan/naive_bayes.hpp"
#include "gprscan/preprocess.hpp"

namespace gprscan {

struct RebarSpec {
  int x0 = 0;
  int depth = 0;
  int reflect = 255;
  /// 1-based line in the scene file this rebar came from (0 if generated).
  int source_line = 0;
};

struct SyntheticSceneSpec {
  int width = 1000;
  int height = 300;
  std::vector<RebarSpec> rebar;
  /// Lateral pixels per row of two-way travel time; smaller is a steeper hyperbola.
  double velocity_px = 0.25;
  int ground_row = 20;
  int ground_thickness = 3;
  double noise_sigma = 0.0;
  std::uint64_t seed = 1;
  double psf_sigma = 1.5;
  double decay = 0.01;
  int background = 120;
  int ground_level = 15;

  void validate() const {
    auto bad = [](const std::string& why) { throw Error(ErrorCode::InvalidSpec, why); };
    if (width <= 0 || height <= 0) bad("width and height must be positive");
    if (!(velocity_px > 0.0)) bad("velocity_px must be > 0");
    if (!(noise_sigma >= 0.0)) bad("noise_sigma must be >= 0");
    if (!(psf_sigma > 0.0)) bad("psf_sigma must be > 0");
    if (!(decay >= 0.0)) bad("decay must be >= 0");
    if (ground_thickness < 0 || ground_row < 0 || ground_row + ground_thickness > height) {
      bad("ground band must lie inside the image");
    }
    if (background < 0 || background > 255 || ground_level < 0 || ground_level > 255) {
      bad("background and ground_level must be in [0,255]");
    }
    for (const auto& r : rebar) {
      const std::string where =
          r.source_line > 0 ? "line " + std::to_string(r.source_line) + ": " : "";
      const std::string what = "rebar=" + std::to_string(r.x0) + "," + std::to_string(r.depth) +
                               "," + std::to_string(r.reflect);
      if (r.x0 < 0 || r.x0 >= width || r.depth < 0 || r.depth >= height) {
        bad(where + what + " apex lies outside the " + std::to_string(width) + "x" +
            std::to_string(height) + " image");
      }
      if (r.depth < ground_row + ground_thickness) {
        bad(where + what + " apex is not below the ground band");
      }
      if (r.reflect < 0 || r.reflect > 255) bad(where + what + " reflect outside [0,255]");
    }
  }
};

/// Two-way travel-time row of a point reflector at (x0, depth) seen from column x.
inline int travel_time_row(int x, int x0, int depth, double velocity_px) {
  const double lateral = (x - x0) / velocity_px;
  return static_cast<int>(
      std::lround(std::sqrt(static_cast<double>(depth) * depth + lateral * lateral)));
}

struct RenderedScene {
  BScanImage image;
  PickSet truth;
};

/// Renders a B-scan: flat background, dark ground band, one hyperbola per
/// rebar (vertical Gaussian spread, exponential decay along the limbs,
/// overlaps combined by max), then seeded additive Gaussian noise.
inline RenderedScene render_bscan(const SyntheticSceneSpec& spec) {
  spec.validate();
  const int w = spec.width;
  const int h = spec.height;
  std::vector<double> field(static_cast<std::size_t>(w) * static_cast<std::size_t>(h),
                            static_cast<double>(spec.background));
  auto cell = [&](int x, int y) -> double& {
    return field[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) +
                 static_cast<std::size_t>(x)];
  };
  for (int y = spec.ground_row; y < spec.ground_row + spec.ground_thickness; ++y) {
    for (int x = 0; x < w; ++x) cell(x, y) = spec.ground_level;
  }

  const int spread = static_cast<int>(std::ceil(4.0 * spec.psf_sigma));
  const double inv_two_var = 1.0 / (2.0 * spec.psf_sigma * spec.psf_sigma);
  std::vector<double> signature(field.size(), 0.0);
  for (const auto& r : spec.rebar) {
    for (int x = 0; x < w; ++x) {
      const int row = travel_time_row(x, r.x0, r.depth, spec.velocity_px);
      if (row >= h) continue;
      const double peak = r.reflect * std::exp(-spec.decay * std::abs(x - r.x0));
      for (int y = std::max(0, row - spread); y <= std::min(h - 1, row + spread); ++y) {
        const double v = peak * std::exp(-(y - row) * (y - row) * inv_two_var);
        auto& s = signature[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) +
                            static_cast<std::size_t>(x)];
        s = std::max(s, v);
      }
    }
  }
  for (std::size_t i = 0; i < field.size(); ++i) field[i] = std::max(field[i], signature[i]);

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, spec.noise_sigma > 0.0 ? spec.noise_sigma : 1.0);
  BScanImage image(w, h);
  auto& pixels = image.pixels();
  for (std::size_t i = 0; i < field.size(); ++i) {
    const double v = field[i] + (spec.noise_sigma > 0.0 ? noise(rng) : 0.0);
    pixels[i] = static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
  }

  RenderedScene scene{std::move(image), {}};
  for (const auto& r : spec.rebar) {
    scene.truth.picks.push_back({r.x0, r.depth, scene.image.at(r.x0, r.depth)});
  }
  scene.truth.normalize();
  return scene;
}

/// Random rebar placement: `count` bars left to right with gaps drawn from
/// [spacing_min, spacing_max], depths and reflectivities drawn uniformly.
struct RandomLayout {
  int count = 60;
  int spacing_min = 14;
  int spacing_max = 16;
  int depth_min = 55;
  int depth_max = 65;
  int reflect_min = 200;
  int reflect_max = 250;
  int margin = 30;
};

inline SyntheticSceneSpec apply_layout(SyntheticSceneSpec spec, const RandomLayout& layout) {
  auto bad = [](const std::string& why) { throw Error(ErrorCode::InvalidSpec, why); };
  if (layout.count < 0 || layout.spacing_min <= 0 || layout.spacing_max < layout.spacing_min ||
      layout.depth_max < layout.depth_min || layout.reflect_max < layout.reflect_min ||
      layout.margin < 0) {
    bad("inconsistent random layout ranges");
  }
  // Layout draws use their own stream so noise and geometry stay independent.
  std::mt19937_64 rng(spec.seed ^ 0x9E3779B97F4A7C15ULL);
  std::vector<int> gaps;
  int span = 0;
  for (int i = 1; i < layout.count; ++i) {
    gaps.push_back(std::uniform_int_distribution<int>(layout.spacing_min, layout.spacing_max)(rng));
    span += gaps.back();
  }
  const int first_max = spec.width - 1 - layout.margin - span;
  if (layout.count > 0 && first_max < layout.margin) {
    bad(std::to_string(layout.count) + " rebar at spacing up to " +
        std::to_string(layout.spacing_max) + " do not fit in width " + std::to_string(spec.width));
  }
  int x = layout.count > 0 ? std::uniform_int_distribution<int>(layout.margin, first_max)(rng) : 0;
  spec.rebar.clear();
  for (int i = 0; i < layout.count; ++i) {
    if (i > 0) x += gaps[static_cast<std::size_t>(i - 1)];
    RebarSpec r;
    r.x0 = x;
    r.depth = std::uniform_int_distribution<int>(layout.depth_min, layout.depth_max)(rng);
    r.reflect = std::uniform_int_distribution<int>(layout.reflect_min, layout.reflect_max)(rng);
    spec.rebar.push_back(r);
  }
  return spec;
}

/// Parsed scene file: fixed scene parameters, optionally a random layout
/// that replaces explicit `rebar=` lines for every seed.
struct SceneFile {
  SyntheticSceneSpec base;
  std::optional<RandomLayout> layout;

  SyntheticSceneSpec scene(std::uint64_t seed) const {
    SyntheticSceneSpec spec = base;
    spec.seed = seed;
    if (layout) spec = apply_layout(std::move(spec), *layout);
    spec.validate();
    return spec;
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

}  // namespace detail

/**
 * Scene file format, one `key=value` per line, `#` starts a comment:
 *
 *   width, height, velocity_px, ground_row, ground_thickness, noise_sigma,
 *   seed, psf_sigma, decay, background, ground_level
 *   rebar=<x0>,<depth>,<reflect>          (repeatable)
 *   layout_count, layout_spacing_min, layout_spacing_max, layout_depth_min,
 *   layout_depth_max, layout_reflect_min, layout_reflect_max, layout_margin
 *
 * Any `layout_*` key switches on random placement.
 */
inline SceneFile parse_scene(const std::vector<std::string>& lines,
                             const std::string& source = "scene") {
  SceneFile file;
  RandomLayout layout;
  bool use_layout = false;
  auto& s = file.base;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const int line_no = static_cast<int>(i) + 1;
    std::string line = lines[i];
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const std::string where = source + " line " + std::to_string(line_no);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::InvalidSpec, where + ": expected key=value, got '" + line + "'");
    }
    const std::string key = detail::trim(std::string_view(line).substr(0, eq));
    const std::string value = detail::trim(std::string_view(line).substr(eq + 1));
    auto bad_value = [&]() {
      throw Error(ErrorCode::InvalidSpec, where + ": bad value for " + key + ": '" + value + "'");
    };
    auto as_int = [&](int& out) {
      if (!detail::parse_number(value, out)) bad_value();
    };
    auto as_double = [&](double& out) {
      if (!detail::parse_number(value, out)) bad_value();
    };
    auto layout_int = [&](int& out) {
      as_int(out);
      use_layout = true;
    };

    if (key == "width") as_int(s.width);
    else if (key == "height") as_int(s.height);
    else if (key == "velocity_px") as_double(s.velocity_px);
    else if (key == "ground_row") as_int(s.ground_row);
    else if (key == "ground_thickness") as_int(s.ground_thickness);
    else if (key == "noise_sigma") as_double(s.noise_sigma);
    else if (key == "psf_sigma") as_double(s.psf_sigma);
    else if (key == "decay") as_double(s.decay);
    else if (key == "background") as_int(s.background);
    else if (key == "ground_level") as_int(s.ground_level);
    else if (key == "seed") {
      if (!detail::parse_number(value, s.seed)) bad_value();
    } else if (key == "rebar") {
      const auto fields = detail::split_fields(value);
      RebarSpec r;
      r.source_line = line_no;
      if (fields.size() != 3 || !detail::parse_number(detail::trim(fields[0]), r.x0) ||
          !detail::parse_number(detail::trim(fields[1]), r.depth) ||
          !detail::parse_number(detail::trim(fields[2]), r.reflect)) {
        bad_value();
      }
      s.rebar.push_back(r);
    } else if (key == "layout_count") layout_int(layout.count);
    else if (key == "layout_spacing_min") layout_int(layout.spacing_min);
    else if (key == "layout_spacing_max") layout_int(layout.spacing_max);
    else if (key == "layout_depth_min") layout_int(layout.depth_min);
    else if (key == "layout_depth_max") layout_int(layout.depth_max);
    else if (key == "layout_reflect_min") layout_int(layout.reflect_min);
    else if (key == "layout_reflect_max") layout_int(layout.reflect_max);
    else if (key == "layout_margin") layout_int(layout.margin);
    else {
      throw Error(ErrorCode::InvalidSpec, where + ": unknown key '" + key + "'");
    }
  }
  if (use_layout) {
    if (!s.rebar.empty()) {
      throw Error(ErrorCode::InvalidSpec,
                  source + ": rebar= lines and layout_* keys are mutually exclusive");
    }
    file.layout = layout;
  }
  file.scene(s.seed);  // validates
  return file;
}

inline SceneFile load_scene(const std::filesystem::path& path) {
  return parse_scene(detail::read_lines(path), path.string());
}

struct LabeledWindow {
  BScanImage pixels;
  ClassLabel label = ClassLabel::NotHyperbola;
  int center_x = 0;
  int center_y = 0;
};

inline constexpr int kPositiveJitter = 2;
inline constexpr int kNegativeExclusionCols = 15;
inline constexpr int kNegativeExclusionRows = 8;

/**
 * Draws labeled training windows from a scene with known apexes.
 * Positives are centered on apexes (cycling through them in shuffled order)
 * with +/-2 px jitter on both axes. Negatives are uniform in-bounds centers,
 * rejected when fewer than 15 columns and 8 rows from some apex. With a
 * `band`, negative centers are further limited to the rows the sliding
 * window visits for that search band.
 */
inline std::vector<LabeledWindow> sample_training_windows(
    const BScanImage& image, const PickSet& truth, int n_pos, int n_neg, std::uint64_t seed,
    const std::optional<SearchWindow>& band = std::nullopt) {
  if (n_pos < 0 || n_neg < 0) throw Error(ErrorCode::InvalidSpec, "negative sample counts");
  const int x_lo = kWindowHalfWidth;
  const int x_hi = image.width() - kWindowHalfWidth;
  const int y_lo = kWindowHalfHeight;
  const int y_hi = image.height() - 1 - kWindowHalfHeight;
  if (x_hi < x_lo || y_hi < y_lo) {
    throw Error(ErrorCode::InsufficientRoom, "image smaller than one 50x15 window");
  }

  std::mt19937_64 rng(seed);
  std::vector<LabeledWindow> out;
  out.reserve(static_cast<std::size_t>(n_pos) + static_cast<std::size_t>(n_neg));

  std::vector<RebarPick> eligible;
  for (const auto& p : truth.picks) {
    if (p.x - kPositiveJitter >= x_lo && p.x + kPositiveJitter <= x_hi &&
        p.y - kPositiveJitter >= y_lo && p.y + kPositiveJitter <= y_hi) {
      eligible.push_back(p);
    }
  }
  if (n_pos > 0 && eligible.empty()) {
    throw Error(ErrorCode::InsufficientRoom, "no apex admits a jittered centered window");
  }
  std::uniform_int_distribution<int> jitter(-kPositiveJitter, kPositiveJitter);
  std::vector<std::size_t> order(eligible.size());
  for (int i = 0; i < n_pos; ++i) {
    const auto slot = static_cast<std::size_t>(i) % eligible.size();
    if (slot == 0) {
      for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
      std::shuffle(order.begin(), order.end(), rng);
    }
    const auto& apex = eligible[order[slot]];
    const int cx = apex.x + jitter(rng);
    const int cy = apex.y + jitter(rng);
    out.push_back({window_at(image, cx, cy), ClassLabel::Hyperbola, cx, cy});
  }

  int neg_y_lo = y_lo;
  int neg_y_hi = y_hi;
  if (band) {
    neg_y_lo = std::max(y_lo, band->start + kWindowHalfHeight);
    neg_y_hi = std::min(y_hi, band->end - kWindowHalfHeight);
    if (n_neg > 0 && neg_y_hi < neg_y_lo) {
      throw Error(ErrorCode::InsufficientRoom, "search band admits no window rows");
    }
  }
  std::uniform_int_distribution<int> pick_x(x_lo, x_hi);
  std::uniform_int_distribution<int> pick_y(neg_y_lo, std::max(neg_y_lo, neg_y_hi));
  const long long budget = 100LL * n_neg;
  long long attempts = 0;
  int placed = 0;
  while (placed < n_neg) {
    if (attempts++ >= budget) {
      throw Error(ErrorCode::InsufficientRoom,
                  "placed " + std::to_string(placed) + " of " + std::to_string(n_neg) +
                      " negative windows after " + std::to_string(budget) + " attempts");
    }
    const int cx = pick_x(rng);
    const int cy = pick_y(rng);
    const bool near_apex = std::any_of(truth.picks.begin(), truth.picks.end(), [&](const RebarPick& p) {
      return std::abs(p.x - cx) < kNegativeExclusionCols && std::abs(p.y - cy) < kNegativeExclusionRows;
    });
    if (near_apex) continue;
    out.push_back({window_at(image, cx, cy), ClassLabel::NotHyperbola, cx, cy});
    ++placed;
  }
  return out;
}

}  // namespace gprscan
