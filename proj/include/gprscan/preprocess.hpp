#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <vector>

#include "gprscan/error.hpp"
#include "gprscan/image.hpp"

namespace gprscan {

/// Row interval [start, end] (both inclusive) searched by the classifier.
struct SearchWindow {
  int start = 0;
  int end = 0;
  /// Set when no Laplacian edges were found and `end` fell back to the last row.
  bool depth_fallback = false;

  friend bool operator==(const SearchWindow&, const SearchWindow&) = default;
};

struct ClaheParams {
  int tiles_x = 8;
  int tiles_y = 8;
  /// Maximum bin height as a fraction of the tile's pixel count.
  double clip_limit = 0.03;

  void validate() const {
    if (tiles_x < 1 || tiles_y < 1) {
      throw Error(ErrorCode::InvalidConfig, "CLAHE tile counts must be >= 1");
    }
    if (!(clip_limit > 0.0)) {
      throw Error(ErrorCode::InvalidConfig, "CLAHE clip_limit must be > 0");
    }
  }
};

using GrayLut = std::array<std::uint8_t, 256>;

/// Per-tile equalization tables plus the tile geometry they were built on.
struct ClaheMappings {
  std::vector<int> col_bounds;  // tiles_x + 1 entries
  std::vector<int> row_bounds;  // tiles_y + 1 entries
  std::vector<GrayLut> luts;    // row-major over tiles

  const GrayLut& lut(int tx, int ty) const {
    return luts[static_cast<std::size_t>(ty) * (col_bounds.size() - 1) +
                static_cast<std::size_t>(tx)];
  }
};

namespace detail {

inline std::vector<int> tile_bounds(int extent, int tiles) {
  std::vector<int> bounds(static_cast<std::size_t>(tiles) + 1);
  for (int t = 0; t <= tiles; ++t) {
    bounds[static_cast<std::size_t>(t)] =
        static_cast<int>(static_cast<long long>(t) * extent / tiles);
  }
  return bounds;
}

// Clipped-histogram equalization table for one tile.
inline GrayLut equalization_lut(const std::array<double, 256>& histogram, double pixel_count,
                                double clip_limit) {
  std::array<double, 256> hist = histogram;
  const double clip = clip_limit * pixel_count;
  if (clip < pixel_count) {
    double excess = 0.0;
    for (double& h : hist) {
      if (h > clip) {
        excess += h - clip;
        h = clip;
      }
    }
    const double share = excess / 256.0;
    for (double& h : hist) h += share;
  }
  GrayLut lut{};
  double cdf = 0.0;
  for (int v = 0; v < 256; ++v) {
    cdf += hist[static_cast<std::size_t>(v)];
    const double mapped = std::round(255.0 * cdf / pixel_count);
    lut[static_cast<std::size_t>(v)] =
        static_cast<std::uint8_t>(std::clamp(mapped, 0.0, 255.0));
  }
  return lut;
}

struct InterpolationAxis {
  std::vector<int> lo;
  std::vector<int> hi;
  std::vector<double> weight;  // weight of `hi`
};

// For every pixel coordinate, the two nearest tile centers and the blend
// weight; coordinates beyond the outer centers clamp to the edge tile.
inline InterpolationAxis interpolation_axis(const std::vector<int>& bounds, int extent) {
  const int tiles = static_cast<int>(bounds.size()) - 1;
  std::vector<double> centers(static_cast<std::size_t>(tiles));
  for (int t = 0; t < tiles; ++t) {
    centers[static_cast<std::size_t>(t)] =
        (bounds[static_cast<std::size_t>(t)] + bounds[static_cast<std::size_t>(t) + 1] - 1) / 2.0;
  }
  InterpolationAxis axis;
  axis.lo.resize(static_cast<std::size_t>(extent));
  axis.hi.resize(static_cast<std::size_t>(extent));
  axis.weight.resize(static_cast<std::size_t>(extent));
  int t = 0;
  for (int p = 0; p < extent; ++p) {
    const auto i = static_cast<std::size_t>(p);
    if (p <= centers.front()) {
      axis.lo[i] = axis.hi[i] = 0;
      axis.weight[i] = 0.0;
      continue;
    }
    if (p >= centers.back()) {
      axis.lo[i] = axis.hi[i] = tiles - 1;
      axis.weight[i] = 0.0;
      continue;
    }
    while (centers[static_cast<std::size_t>(t) + 1] <= p) ++t;
    axis.lo[i] = t;
    axis.hi[i] = t + 1;
    axis.weight[i] = (p - centers[static_cast<std::size_t>(t)]) /
                     (centers[static_cast<std::size_t>(t) + 1] - centers[static_cast<std::size_t>(t)]);
  }
  return axis;
}

}  // namespace detail

inline ClaheMappings compute_clahe_mappings(const BScanImage& image, const ClaheParams& params) {
  params.validate();
  if (image.width() < params.tiles_x || image.height() < params.tiles_y) {
    throw Error(ErrorCode::ImageTooSmall,
                std::to_string(image.width()) + "x" + std::to_string(image.height()) +
                    " image cannot hold " + std::to_string(params.tiles_x) + "x" +
                    std::to_string(params.tiles_y) + " tiles");
  }
  ClaheMappings maps;
  maps.col_bounds = detail::tile_bounds(image.width(), params.tiles_x);
  maps.row_bounds = detail::tile_bounds(image.height(), params.tiles_y);
  maps.luts.reserve(static_cast<std::size_t>(params.tiles_x) *
                    static_cast<std::size_t>(params.tiles_y));
  for (int ty = 0; ty < params.tiles_y; ++ty) {
    for (int tx = 0; tx < params.tiles_x; ++tx) {
      std::array<double, 256> hist{};
      const int x0 = maps.col_bounds[static_cast<std::size_t>(tx)];
      const int x1 = maps.col_bounds[static_cast<std::size_t>(tx) + 1];
      const int y0 = maps.row_bounds[static_cast<std::size_t>(ty)];
      const int y1 = maps.row_bounds[static_cast<std::size_t>(ty) + 1];
      for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) hist[image.at(x, y)] += 1.0;
      }
      const double count = static_cast<double>(x1 - x0) * static_cast<double>(y1 - y0);
      maps.luts.push_back(detail::equalization_lut(hist, count, params.clip_limit));
    }
  }
  return maps;
}

/// Contrast limited adaptive histogram equalization with bilinear blending
/// of the four nearest tile mappings.
inline BScanImage apply_clahe(const BScanImage& image, const ClaheParams& params = {}) {
  const ClaheMappings maps = compute_clahe_mappings(image, params);
  const auto cols = detail::interpolation_axis(maps.col_bounds, image.width());
  const auto rows = detail::interpolation_axis(maps.row_bounds, image.height());

  BScanImage out(image.width(), image.height());
  for (int y = 0; y < image.height(); ++y) {
    const auto yi = static_cast<std::size_t>(y);
    const double wy = rows.weight[yi];
    for (int x = 0; x < image.width(); ++x) {
      const auto xi = static_cast<std::size_t>(x);
      const double wx = cols.weight[xi];
      const auto v = image.at(x, y);
      const double top = (1.0 - wx) * maps.lut(cols.lo[xi], rows.lo[yi])[v] +
                         wx * maps.lut(cols.hi[xi], rows.lo[yi])[v];
      const double bottom = (1.0 - wx) * maps.lut(cols.lo[xi], rows.hi[yi])[v] +
                            wx * maps.lut(cols.hi[xi], rows.hi[yi])[v];
      const double blended = (1.0 - wy) * top + wy * bottom;
      out.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::round(blended), 0.0, 255.0));
    }
  }
  return out;
}

// Half the classifier window height; the first window center below a row.
inline constexpr int kWindowHalfHeightRows = 7;

inline constexpr double kGroundSearchFraction = 0.4;
inline constexpr double kGroundContrastRatio = 0.9;

/// Row of the dark surface band. Row means are smoothed over three rows
/// so the middle of a multi-row band wins; only the top 40% of rows are
/// candidates, ties go to the smallest row.
inline int find_ground_plane(const BScanImage& image) {
  const int h = image.height();
  if (h == 0 || image.width() == 0) {
    throw Error(ErrorCode::NoGroundPlane, "empty image");
  }
  std::vector<double> row_mean(static_cast<std::size_t>(h), 0.0);
  double total = 0.0;
  for (int y = 0; y < h; ++y) {
    long long sum = 0;
    for (int x = 0; x < image.width(); ++x) sum += image.at(x, y);
    total += static_cast<double>(sum);
    row_mean[static_cast<std::size_t>(y)] = static_cast<double>(sum) / image.width();
  }
  const double global_mean = total / (static_cast<double>(h) * image.width());

  const int candidates =
      std::max(1, static_cast<int>(std::ceil(kGroundSearchFraction * h - 1e-9)));
  int best_row = 0;
  double best = 0.0;
  for (int y = 0; y < candidates; ++y) {
    double sum = 0.0;
    int n = 0;
    for (int r = std::max(0, y - 1); r <= std::min(h - 1, y + 1); ++r) {
      sum += row_mean[static_cast<std::size_t>(r)];
      ++n;
    }
    const double smoothed = sum / n;
    if (y == 0 || smoothed < best) {
      best = smoothed;
      best_row = y;
    }
  }
  if (best >= kGroundContrastRatio * global_mean) {
    throw Error(ErrorCode::NoGroundPlane,
                "darkest band mean " + std::to_string(best) + " is not below 0.9 x global mean " +
                    std::to_string(global_mean));
  }
  return best_row;
}

inline constexpr double kEdgeSmoothingSigma = 1.5;
inline constexpr double kEdgePercentile = 0.998;
inline constexpr int kDepthMargin = 15;

struct DepthBandEnd {
  int row = 0;
  bool fallback = false;
};

namespace detail {

// Separable Gaussian blur with replicated borders.
inline std::vector<double> gaussian_blur(const BScanImage& image, double sigma) {
  const int w = image.width();
  const int h = image.height();
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double norm = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-(i * i) / (2.0 * sigma * sigma));
    kernel[static_cast<std::size_t>(i + radius)] = v;
    norm += v;
  }
  for (double& v : kernel) v /= norm;

  const auto idx = [w](int x, int y) {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x);
  };
  std::vector<double> rows(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        acc += kernel[static_cast<std::size_t>(i + radius)] * image.at(std::clamp(x + i, 0, w - 1), y);
      }
      rows[idx(x, y)] = acc;
    }
  }
  std::vector<double> out(rows.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        acc += kernel[static_cast<std::size_t>(i + radius)] * rows[idx(x, std::clamp(y + i, 0, h - 1))];
      }
      out[idx(x, y)] = acc;
    }
  }
  return out;
}

}  // namespace detail

/**
 * End of the rebar search band: the mean row of the strongest Laplacian
 * responses beneath the ground plane, plus one window height.
 *
 * The image is Gaussian-smoothed (sigma 1.5) before the 3x3 Laplacian
 * [0,1,0; 1,-4,1; 0,1,0] so that speckle does not outvote the reflections.
 * Only rows deeper than start + 7 (the first row a window can be centered
 * on) are considered, which keeps the ground band's own edge out of the
 * statistic. Pixels at or above the 99.8th percentile of |response| count,
 * so only apex ridges vote and the fainter hyperbola limbs do not drag the
 * mean deeper. Zero responses never count.
 */
inline DepthBandEnd estimate_depth_band_end(const BScanImage& image, int start) {
  const int w = image.width();
  const int h = image.height();
  if (start < 0 || start >= h) {
    throw Error(ErrorCode::WindowDoesNotFit, "search start row outside image");
  }
  const int first_row = start + 1 + kWindowHalfHeightRows;
  if (first_row >= h) return {h - 1, true};

  const std::vector<double> smooth = detail::gaussian_blur(image, kEdgeSmoothingSigma);
  auto px = [&](int x, int y) {
    return smooth[static_cast<std::size_t>(std::clamp(y, 0, h - 1)) * static_cast<std::size_t>(w) +
                  static_cast<std::size_t>(std::clamp(x, 0, w - 1))];
  };
  std::vector<double> response;
  response.reserve(static_cast<std::size_t>(w) * static_cast<std::size_t>(h - first_row));
  for (int y = first_row; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double lap = px(x, y - 1) + px(x, y + 1) + px(x - 1, y) + px(x + 1, y) - 4.0 * px(x, y);
      response.push_back(std::abs(lap));
    }
  }

  std::vector<double> sorted = response;
  const auto rank = static_cast<std::size_t>(
      std::ceil(kEdgePercentile * static_cast<double>(sorted.size()) - 1e-9));
  const std::size_t k = std::max<std::size_t>(rank, 1) - 1;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k), sorted.end());
  // Responses within rounding noise of zero are flat image, not edges.
  constexpr double kFlat = 1e-9;
  const double threshold = sorted[k];

  double row_sum = 0.0;
  long long count = 0;
  for (std::size_t i = 0; i < response.size(); ++i) {
    if (response[i] >= threshold && response[i] > kFlat) {
      row_sum += first_row + static_cast<double>(i / static_cast<std::size_t>(w));
      ++count;
    }
  }
  if (count == 0) return {h - 1, true};
  const int mean_row = static_cast<int>(std::lround(row_sum / static_cast<double>(count)));
  return {std::min(mean_row + kDepthMargin, h - 1), false};
}

inline constexpr int kMinBandHeight = 15;

inline SearchWindow compute_search_window(const BScanImage& image) {
  const int start = find_ground_plane(image);
  const DepthBandEnd end = estimate_depth_band_end(image, start);
  SearchWindow window{start, std::max(end.row, start + kMinBandHeight), end.fallback};
  if (window.end > image.height() - 1) {
    throw Error(ErrorCode::WindowDoesNotFit,
                "search band from row " + std::to_string(start) + " needs " +
                    std::to_string(kMinBandHeight) + " rows but image has " +
                    std::to_string(image.height()));
  }
  return window;
}

}  // namespace gprscan
