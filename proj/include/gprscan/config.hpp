#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "gprscan/detector.hpp"
#include "gprscan/error.hpp"
#include "gprscan/evaluator.hpp"
#include "gprscan/io.hpp"
#include "gprscan/preprocess.hpp"
#include "gprscan/simulator.hpp"

namespace gprscan {

/// Every tunable of the command-line tool. Loaded from a flat `key=value`
/// file; command-line flags are applied on top with the same keys.
struct RunConfig {
  DetectOptions detect;
  MatchTolerance tolerance;
  AttenuationThresholds thresholds;
  double cell_m = 1.0;
  int cell_px = 8;

  // Training-set size summed over all training images.
  int n_pos = 304;
  int n_neg = 1800;
  std::uint64_t train_seed = 7;

  std::uint64_t seed = 1;
  int jobs = 1;

  // End-to-end pipeline.
  std::filesystem::path scene;
  std::filesystem::path work_dir = "pipeline_out";
  int train_scenes = 10;
  int test_scenes = 20;
  std::uint64_t train_seed_base = 101;
  double pixels_per_meter = 100.0;
  double min_accuracy = 95.0;
  double min_precision = 95.0;

  void set(const std::string& key, const std::string& value) {
    auto bad = [&](const std::string& why) {
      throw Error(ErrorCode::InvalidConfig, key + "=" + value + ": " + why);
    };
    auto as_int = [&](int& out) {
      if (!detail::parse_number(std::string_view(value), out)) bad("expected an integer");
    };
    auto as_u64 = [&](std::uint64_t& out) {
      if (!detail::parse_number(std::string_view(value), out)) bad("expected an unsigned integer");
    };
    auto as_double = [&](double& out) {
      if (!detail::parse_number(std::string_view(value), out)) bad("expected a number");
    };
    auto as_bool = [&](bool& out) {
      if (value == "true" || value == "1") out = true;
      else if (value == "false" || value == "0") out = false;
      else bad("expected true/false");
    };

    if (key == "clahe_tiles_x") as_int(detect.clahe.tiles_x);
    else if (key == "clahe_tiles_y") as_int(detect.clahe.tiles_y);
    else if (key == "clahe_clip_limit") as_double(detect.clahe.clip_limit);
    else if (key == "use_clahe") as_bool(detect.use_clahe);
    else if (key == "final_nms") as_bool(detect.final_nms);
    else if (key == "stride_x") as_int(detect.detector.stride_x);
    else if (key == "stride_y") as_int(detect.detector.stride_y);
    else if (key == "nms_radius") as_int(detect.detector.nms_radius);
    else if (key == "refine_half") as_int(detect.detector.refine_half);
    else if (key == "min_pick_separation") as_int(detect.detector.min_pick_separation);
    else if (key == "tol_x") as_int(tolerance.x);
    else if (key == "tol_y") as_int(tolerance.y);
    else if (key == "db_low") as_double(thresholds.low_db);
    else if (key == "db_moderate") as_double(thresholds.moderate_db);
    else if (key == "db_high") as_double(thresholds.high_db);
    else if (key == "reference_percentile") as_double(thresholds.reference_percentile);
    else if (key == "cell_m") as_double(cell_m);
    else if (key == "cell_px") as_int(cell_px);
    else if (key == "n_pos") as_int(n_pos);
    else if (key == "n_neg") as_int(n_neg);
    else if (key == "train_seed") as_u64(train_seed);
    else if (key == "seed") as_u64(seed);
    else if (key == "jobs") as_int(jobs);
    else if (key == "scene") scene = value;
    else if (key == "work_dir") work_dir = value;
    else if (key == "train_scenes") as_int(train_scenes);
    else if (key == "test_scenes") as_int(test_scenes);
    else if (key == "train_seed_base") as_u64(train_seed_base);
    else if (key == "pixels_per_meter") as_double(pixels_per_meter);
    else if (key == "min_accuracy") as_double(min_accuracy);
    else if (key == "min_precision") as_double(min_precision);
    else throw Error(ErrorCode::InvalidConfig, "unknown key '" + key + "' (value '" + value + "')");
  }

  void validate() const {
    auto bad = [](const std::string& key, const std::string& value, const std::string& why) {
      throw Error(ErrorCode::InvalidConfig, key + "=" + value + ": " + why);
    };
    auto positive = [&](const char* key, int v) {
      if (v <= 0) bad(key, std::to_string(v), "must be > 0");
    };
    auto positive_real = [&](const char* key, double v) {
      if (!(v > 0.0)) bad(key, detail::format_double(v), "must be > 0");
    };
    positive("clahe_tiles_x", detect.clahe.tiles_x);
    positive("clahe_tiles_y", detect.clahe.tiles_y);
    positive_real("clahe_clip_limit", detect.clahe.clip_limit);
    positive("stride_x", detect.detector.stride_x);
    positive("stride_y", detect.detector.stride_y);
    positive("nms_radius", detect.detector.nms_radius);
    positive("refine_half", detect.detector.refine_half);
    positive("min_pick_separation", detect.detector.min_pick_separation);
    if (tolerance.x < 0) bad("tol_x", std::to_string(tolerance.x), "must be >= 0");
    if (tolerance.y < 0) bad("tol_y", std::to_string(tolerance.y), "must be >= 0");
    if (!(thresholds.low_db > thresholds.moderate_db &&
          thresholds.moderate_db > thresholds.high_db)) {
      bad("db_low/db_moderate/db_high",
          detail::format_double(thresholds.low_db) + "/" +
              detail::format_double(thresholds.moderate_db) + "/" +
              detail::format_double(thresholds.high_db),
          "must be strictly decreasing");
    }
    if (!(thresholds.reference_percentile > 0.0 && thresholds.reference_percentile <= 1.0)) {
      bad("reference_percentile", detail::format_double(thresholds.reference_percentile),
          "must be in (0, 1]");
    }
    positive_real("cell_m", cell_m);
    positive("cell_px", cell_px);
    if (n_pos < 2) bad("n_pos", std::to_string(n_pos), "must be >= 2");
    if (n_neg < 2) bad("n_neg", std::to_string(n_neg), "must be >= 2");
    positive("jobs", jobs);
    positive("train_scenes", train_scenes);
    positive("test_scenes", test_scenes);
    positive_real("pixels_per_meter", pixels_per_meter);
  }
};

/// Applies `key=value` lines ('#' comments, blank lines ignored).
inline void apply_config_lines(RunConfig& config, const std::vector<std::string>& lines,
                               const std::string& source = "config") {
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string line = lines[i];
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::InvalidConfig,
                  source + " line " + std::to_string(i + 1) + ": expected key=value, got '" +
                      line + "'");
    }
    config.set(detail::trim(std::string_view(line).substr(0, eq)),
               detail::trim(std::string_view(line).substr(eq + 1)));
  }
}

/// A relative `scene` path is taken relative to the config file; `work_dir`
/// stays relative to the working directory.
inline RunConfig load_config(const std::filesystem::path& path) {
  RunConfig config;
  apply_config_lines(config, detail::read_lines(path), path.string());
  if (!config.scene.empty() && config.scene.is_relative()) {
    config.scene = path.parent_path() / config.scene;
  }
  return config;
}

}  // namespace gprscan
