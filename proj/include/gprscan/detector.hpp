#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <string>
#include <utility>
#include <vector>

#include "gprscan/error.hpp"
#include "gprscan/hog.hpp"
#include "gprscan/image.hpp"
#include "gprscan/naive_bayes.hpp"
#include "gprscan/preprocess.hpp"

namespace gprscan {

struct CandidatePoint {
  int x = 0;
  int y = 0;
  friend bool operator==(const CandidatePoint&, const CandidatePoint&) = default;
};

using CandidatePoints = std::vector<CandidatePoint>;

struct DetectorConfig {
  int stride_x = 2;
  int stride_y = 2;
  /// Column i survives histogram suppression unless some j in
  /// [i - nms_radius, i + nms_radius - 1] has a strictly larger count.
  int nms_radius = 7;
  /// Half-width of the brightest-pixel refinement neighborhood (2 -> 5x5).
  int refine_half = 2;
  int min_pick_separation = 10;

  void validate() const {
    auto check = [](int v, const char* key) {
      if (v <= 0) {
        throw Error(ErrorCode::InvalidConfig,
                    std::string(key) + "=" + std::to_string(v) + " must be > 0");
      }
    };
    check(stride_x, "stride_x");
    check(stride_y, "stride_y");
    check(nms_radius, "nms_radius");
    check(refine_half, "refine_half");
    check(min_pick_separation, "min_pick_separation");
  }
};

/// Window-center lattice searched inside a band; all bounds inclusive.
struct ScanLattice {
  int x_first = 0;
  int x_last = -1;
  int y_first = 0;
  int y_last = -1;

  bool empty() const noexcept { return x_last < x_first || y_last < y_first; }
};

inline ScanLattice scan_lattice(const BScanImage& image, const SearchWindow& window) {
  ScanLattice lattice;
  lattice.x_first = kWindowHalfWidth;
  lattice.x_last = image.width() - kWindowHalfWidth;
  lattice.y_first = std::max(window.start + kWindowHalfHeight, kWindowHalfHeight);
  lattice.y_last = std::min(window.end - kWindowHalfHeight, image.height() - 1 - kWindowHalfHeight);
  return lattice;
}

/// Classifies every lattice window in the band; hyperbola hits are returned
/// in row-major scan order.
inline CandidatePoints sliding_window_scan(const BScanImage& image, const SearchWindow& window,
                                           const NaiveBayesModel& model,
                                           const DetectorConfig& config = {}) {
  config.validate();
  const ScanLattice lattice = scan_lattice(image, window);
  if (lattice.empty()) {
    throw Error(ErrorCode::WindowDoesNotFit,
                "no 50x15 window fits rows [" + std::to_string(window.start) + ", " +
                    std::to_string(window.end) + "] of a " + std::to_string(image.width()) +
                    "x" + std::to_string(image.height()) + " image");
  }
  CandidatePoints points;
  for (int y = lattice.y_first; y <= lattice.y_last; y += config.stride_y) {
    for (int x = lattice.x_first; x <= lattice.x_last; x += config.stride_x) {
      if (classify(model, extract_hog(window_at(image, x, y))) == ClassLabel::Hyperbola) {
        points.push_back({x, y});
      }
    }
  }
  return points;
}

/**
 * Histogram localization of rebar apexes from classifier hits.
 *
 * 1. Accumulate a histogram of candidate x coordinates.
 * 2. Keep columns with a non-zero count that no column in
 *    [i - nms_radius, i + nms_radius - 1] strictly exceeds.
 * 3. In each kept column, take the brightest row within [start, end]
 *    (first row wins ties).
 * 4. Move to the brightest pixel of the (2*refine_half+1)^2 neighborhood;
 *    the current point is kept unless a neighbor is strictly brighter, and
 *    among brighter neighbors the first in row-major order wins.
 *
 * Picks that land on the same pixel are merged.
 */
inline PickSet histogram_localize(const CandidatePoints& points, const BScanImage& image,
                                  int start, int end, const DetectorConfig& config = {},
                                  std::string image_id = {}) {
  PickSet out;
  out.image_id = std::move(image_id);
  if (points.empty() || image.empty()) return out;
  start = std::max(start, 0);
  end = std::min(end, image.height() - 1);
  if (start > end) return out;

  const int width = image.width();
  std::vector<int> histogram(static_cast<std::size_t>(width), 0);
  for (const auto& p : points) {
    if (p.x >= 0 && p.x < width) ++histogram[static_cast<std::size_t>(p.x)];
  }

  std::vector<int> maxima;
  for (int i = 0; i < width; ++i) {
    const int count = histogram[static_cast<std::size_t>(i)];
    if (count == 0) continue;
    bool is_max = true;
    const int lo = std::max(0, i - config.nms_radius);
    const int hi = std::min(width - 1, i + config.nms_radius - 1);
    for (int j = lo; j <= hi && is_max; ++j) {
      if (histogram[static_cast<std::size_t>(j)] > count) is_max = false;
    }
    if (is_max) maxima.push_back(i);
  }

  for (int column : maxima) {
    int row = start;
    for (int y = start + 1; y <= end; ++y) {
      if (image.at(column, y) > image.at(column, row)) row = y;
    }
    int best_x = column;
    int best_y = row;
    int best = image.at(column, row);
    for (int y = row - config.refine_half; y <= row + config.refine_half; ++y) {
      for (int x = column - config.refine_half; x <= column + config.refine_half; ++x) {
        if (!image.contains(x, y)) continue;
        if (image.at(x, y) > best) {
          best = image.at(x, y);
          best_x = x;
          best_y = y;
        }
      }
    }
    out.picks.push_back({best_x, best_y, best});
  }
  out.normalize();
  return out;
}

/// Greedy pick suppression: strongest amplitude first (ties: smaller x, then
/// smaller y); a pick is dropped when a kept pick is fewer than `min_sep`
/// columns away.
inline PickSet suppress_duplicate_picks(const PickSet& picks, int min_sep) {
  std::vector<RebarPick> order = picks.picks;
  std::sort(order.begin(), order.end(), [](const RebarPick& a, const RebarPick& b) {
    if (a.amplitude != b.amplitude) return a.amplitude > b.amplitude;
    if (a.x != b.x) return a.x < b.x;
    return a.y < b.y;
  });
  PickSet out;
  out.image_id = picks.image_id;
  for (const auto& p : order) {
    const bool crowded = std::any_of(out.picks.begin(), out.picks.end(), [&](const RebarPick& k) {
      return std::abs(k.x - p.x) < min_sep;
    });
    if (!crowded) out.picks.push_back(p);
  }
  out.normalize();
  return out;
}

struct DetectOptions {
  ClaheParams clahe;
  bool use_clahe = true;
  bool final_nms = true;
  DetectorConfig detector;
};

struct DetectionReport {
  PickSet picks;
  SearchWindow window;
  std::size_t candidate_count = 0;
};

/// Whole pipeline: search band, CLAHE, sliding-window classification,
/// histogram localization and final pick suppression. Only the classifier
/// sees the equalized image. The search band and the intensity searches of
/// the localization step use the input amplitudes, where equalization
/// cannot lift background speckle to the level of a reflection.
inline DetectionReport detect_rebar_report(const BScanImage& image, const NaiveBayesModel& model,
                                           const DetectOptions& options = {},
                                           const std::string& image_id = {}) {
  options.detector.validate();
  if (image.width() < kWindowWidth || image.height() < kWindowHeight) {
    throw Error(ErrorCode::WindowDoesNotFit, "image smaller than one 50x15 window");
  }
  DetectionReport report;
  report.window = compute_search_window(image);
  const BScanImage enhanced = options.use_clahe ? apply_clahe(image, options.clahe) : image;
  const CandidatePoints points =
      sliding_window_scan(enhanced, report.window, model, options.detector);
  report.candidate_count = points.size();

  PickSet picks = histogram_localize(points, image, report.window.start, report.window.end,
                                     options.detector, image_id);
  report.picks = options.final_nms
                     ? suppress_duplicate_picks(picks, options.detector.min_pick_separation)
                     : std::move(picks);
  return report;
}

inline PickSet detect_rebar(const BScanImage& image, const NaiveBayesModel& model,
                            const DetectOptions& options = {}, const std::string& image_id = {}) {
  return detect_rebar_report(image, model, options, image_id).picks;
}

}  // namespace gprscan
