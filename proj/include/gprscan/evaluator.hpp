#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gprscan/error.hpp"
#include "gprscan/image.hpp"

namespace gprscan {

struct MatchTolerance {
  int x = 10;
  int y = 5;
};

struct MatchResult {
  int true_positives = 0;
  int false_positives = 0;
  int false_negatives = 0;
  /// (detected index, truth index) pairs.
  std::vector<std::pair<int, int>> pairs;
};

/// Greedy one-to-one matching. Detections are visited in ascending x (then
/// y); each takes the nearest unmatched truth pick inside the rectangular
/// tolerance, Euclidean distance first, smaller truth index on ties.
inline MatchResult match_picks(const PickSet& detected, const PickSet& truth,
                               MatchTolerance tol = {}) {
  std::vector<int> order(detected.picks.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const auto& pa = detected.picks[static_cast<std::size_t>(a)];
    const auto& pb = detected.picks[static_cast<std::size_t>(b)];
    return pa.x != pb.x ? pa.x < pb.x : pa.y < pb.y;
  });

  MatchResult result;
  std::vector<bool> taken(truth.picks.size(), false);
  for (int d : order) {
    const auto& p = detected.picks[static_cast<std::size_t>(d)];
    int best = -1;
    long long best_dist = std::numeric_limits<long long>::max();
    for (std::size_t t = 0; t < truth.picks.size(); ++t) {
      if (taken[t]) continue;
      const auto& q = truth.picks[t];
      const int dx = std::abs(p.x - q.x);
      const int dy = std::abs(p.y - q.y);
      if (dx > tol.x || dy > tol.y) continue;
      const long long dist = static_cast<long long>(dx) * dx + static_cast<long long>(dy) * dy;
      if (dist < best_dist) {
        best_dist = dist;
        best = static_cast<int>(t);
      }
    }
    if (best >= 0) {
      taken[static_cast<std::size_t>(best)] = true;
      result.pairs.emplace_back(d, best);
    }
  }
  result.true_positives = static_cast<int>(result.pairs.size());
  result.false_positives = static_cast<int>(detected.picks.size()) - result.true_positives;
  result.false_negatives = static_cast<int>(truth.picks.size()) - result.true_positives;
  return result;
}

struct Metrics {
  double accuracy = 0.0;   // fraction
  double precision = 0.0;  // fraction
};

/// accuracy = tp / total_rebar, precision = tp / (tp + fp); precision is 0
/// when nothing was detected, accuracy is 0 for an empty survey.
inline Metrics compute_metrics(long long tp, long long fp, long long total_rebar) {
  if (tp < 0 || fp < 0 || total_rebar < 0 || tp > total_rebar) {
    throw Error(ErrorCode::InvalidCounts,
                "tp=" + std::to_string(tp) + " fp=" + std::to_string(fp) +
                    " total=" + std::to_string(total_rebar));
  }
  Metrics m;
  m.accuracy = total_rebar > 0 ? static_cast<double>(tp) / static_cast<double>(total_rebar) : 0.0;
  m.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  return m;
}

/// Fraction rendered as a percentage with two decimals, e.g. 0.96690 -> "96.69".
inline std::string format_percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", fraction * 100.0);
  return buf;
}

enum class CorrosionLevel : int { None = 0, Low = 1, Moderate = 2, High = 3 };

struct AttenuationThresholds {
  double low_db = -3.0;       // below this: at least Low
  double moderate_db = -6.0;  // below this: at least Moderate
  double high_db = -9.0;      // below this: High
  double reference_percentile = 0.90;
};

inline CorrosionLevel level_for(double attenuation_db, const AttenuationThresholds& th = {}) {
  if (attenuation_db >= th.low_db) return CorrosionLevel::None;
  if (attenuation_db >= th.moderate_db) return CorrosionLevel::Low;
  if (attenuation_db >= th.high_db) return CorrosionLevel::Moderate;
  return CorrosionLevel::High;
}

struct ConditionCell {
  int lane = 0;
  int station_index = 0;  // floor(station / cell_m)
  std::optional<CorrosionLevel> level;  // empty = no data
  double mean_db = 0.0;
  int pick_count = 0;
};

/// Lanes x station cells, row-major by lane. Covers every lane from 0 to
/// the largest lane with picks and every station cell between the first
/// and last cell holding a pick.
struct ConditionMap {
  int lanes = 0;
  int first_station_index = 0;
  int station_cells = 0;
  double cell_m = 1.0;
  double reference_amplitude = 0.0;
  std::vector<ConditionCell> cells;

  const ConditionCell& at(int lane, int station_cell) const {
    return cells[static_cast<std::size_t>(lane) * static_cast<std::size_t>(station_cells) +
                 static_cast<std::size_t>(station_cell)];
  }
};

inline double attenuation_db(double amplitude, double reference) {
  return 20.0 * std::log10(std::max(amplitude, 1.0) / std::max(reference, 1.0));
}

/// Nearest-rank percentile of the survey amplitudes.
inline double reference_amplitude(std::vector<int> amplitudes, double percentile) {
  if (amplitudes.empty()) throw Error(ErrorCode::EmptySurvey, "no picks in survey");
  std::sort(amplitudes.begin(), amplitudes.end());
  const auto rank = static_cast<std::size_t>(
      std::ceil(percentile * static_cast<double>(amplitudes.size()) - 1e-9));
  return amplitudes[std::max<std::size_t>(rank, 1) - 1];
}

inline ConditionMap build_condition_map(const std::vector<PickSet>& picksets,
                                        const ScanManifest& manifest, double cell_m,
                                        const AttenuationThresholds& th = {}) {
  if (!(cell_m > 0.0)) throw Error(ErrorCode::InvalidConfig, "cell_m must be > 0");
  struct Located {
    int lane;
    long long station_index;
    int amplitude;
  };
  std::vector<Located> located;
  std::vector<int> amplitudes;
  for (const auto& set : picksets) {
    const ManifestEntry* entry = manifest.find(set.image_id);
    if (entry == nullptr) {
      throw Error(ErrorCode::UnknownImageId, "'" + set.image_id + "' is not in the manifest");
    }
    for (const auto& p : set.picks) {
      const double station = entry->start_station_m + p.x / entry->pixels_per_meter;
      located.push_back({entry->lane_index,
                         static_cast<long long>(std::floor(station / cell_m)), p.amplitude});
      amplitudes.push_back(p.amplitude);
    }
  }
  if (located.empty()) throw Error(ErrorCode::EmptySurvey, "no picks in survey");

  ConditionMap map;
  map.cell_m = cell_m;
  map.reference_amplitude = reference_amplitude(amplitudes, th.reference_percentile);
  int max_lane = 0;
  long long lo = located.front().station_index;
  long long hi = lo;
  for (const auto& l : located) {
    max_lane = std::max(max_lane, l.lane);
    lo = std::min(lo, l.station_index);
    hi = std::max(hi, l.station_index);
  }
  map.lanes = max_lane + 1;
  map.first_station_index = static_cast<int>(lo);
  map.station_cells = static_cast<int>(hi - lo + 1);

  std::vector<double> sum_db(static_cast<std::size_t>(map.lanes) *
                                 static_cast<std::size_t>(map.station_cells),
                             0.0);
  std::vector<int> counts(sum_db.size(), 0);
  for (const auto& l : located) {
    const auto idx = static_cast<std::size_t>(l.lane) * static_cast<std::size_t>(map.station_cells) +
                     static_cast<std::size_t>(l.station_index - lo);
    sum_db[idx] += attenuation_db(l.amplitude, map.reference_amplitude);
    ++counts[idx];
  }
  for (int lane = 0; lane < map.lanes; ++lane) {
    for (int s = 0; s < map.station_cells; ++s) {
      const auto idx = static_cast<std::size_t>(lane) * static_cast<std::size_t>(map.station_cells) +
                       static_cast<std::size_t>(s);
      ConditionCell cell;
      cell.lane = lane;
      cell.station_index = map.first_station_index + s;
      cell.pick_count = counts[idx];
      if (counts[idx] > 0) {
        cell.mean_db = sum_db[idx] / counts[idx];
        cell.level = level_for(cell.mean_db, th);
      }
      map.cells.push_back(cell);
    }
  }
  return map;
}

inline constexpr Rgb kLevelColors[4] = {
    {0, 0, 255},    // none: blue
    {0, 255, 0},    // low: green
    {255, 165, 0},  // moderate: orange
    {255, 0, 0},    // high: red
};
inline constexpr Rgb kNoDataColor = {128, 128, 128};

/// One `cell_px` square per cell; lanes run down, stations run right.
inline RgbImage render_condition_map(const ConditionMap& map, int cell_px = 8) {
  if (map.cells.empty() || cell_px <= 0) {
    throw Error(ErrorCode::EmptySurvey, "nothing to render");
  }
  RgbImage image(map.station_cells * cell_px, map.lanes * cell_px);
  for (const auto& cell : map.cells) {
    const Rgb color = cell.level ? kLevelColors[static_cast<int>(*cell.level)] : kNoDataColor;
    const int x0 = (cell.station_index - map.first_station_index) * cell_px;
    const int y0 = cell.lane * cell_px;
    for (int y = y0; y < y0 + cell_px; ++y) {
      for (int x = x0; x < x0 + cell_px; ++x) image.at(x, y) = color;
    }
  }
  return image;
}

/// CSV export `lane,station_start_m,level,mean_db`; no-data cells carry
/// level -1 and an empty mean_db.
inline std::string encode_condition_map(const ConditionMap& map) {
  std::string out = "lane,station_start_m,level,mean_db\n";
  char buf[64];
  for (const auto& cell : map.cells) {
    std::snprintf(buf, sizeof(buf), "%.3f", cell.station_index * map.cell_m);
    out += std::to_string(cell.lane) + "," + buf + ",";
    if (cell.level) {
      out += std::to_string(static_cast<int>(*cell.level)) + ",";
      std::snprintf(buf, sizeof(buf), "%.2f", cell.mean_db);
      out += buf;
    } else {
      out += "-1,";
    }
    out += "\n";
  }
  return out;
}

}  // namespace gprscan
