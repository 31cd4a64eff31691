#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "gprscan/error.hpp"
#include "gprscan/image.hpp"

namespace gprscan {

inline constexpr int kWindowWidth = 50;
inline constexpr int kWindowHeight = 15;
inline constexpr int kWindowHalfWidth = kWindowWidth / 2;    // 25
inline constexpr int kWindowHalfHeight = kWindowHeight / 2;  // 7

// HOG layout: 9 unsigned bins, 5x5 cells, 2x2-cell blocks with 1-cell stride.
inline constexpr int kHogBins = 9;
inline constexpr int kHogCellSize = 5;
inline constexpr int kHogCellsX = kWindowWidth / kHogCellSize;   // 10
inline constexpr int kHogCellsY = kWindowHeight / kHogCellSize;  // 3
inline constexpr int kHogBlockCells = 2;
inline constexpr int kHogBlocksX = kHogCellsX - kHogBlockCells + 1;  // 9
inline constexpr int kHogBlocksY = kHogCellsY - kHogBlockCells + 1;  // 2
inline constexpr int kHogBlockLength = kHogBlockCells * kHogBlockCells * kHogBins;  // 36
inline constexpr int kHogLength = kHogBlocksX * kHogBlocksY * kHogBlockLength;     // 648
inline constexpr double kHogEpsilon = 1e-6;
inline constexpr double kHogClip = 0.2;

using HogDescriptor = std::vector<double>;

/// Copies the 50x15 block centered at (x, y): columns x-25..x+24, rows y-7..y+7.
inline BScanImage window_at(const BScanImage& image, int x, int y) {
  if (x < kWindowHalfWidth || x > image.width() - kWindowHalfWidth ||
      y < kWindowHalfHeight || y > image.height() - 1 - kWindowHalfHeight) {
    throw Error(ErrorCode::WindowOutOfBounds,
                "window centered at (" + std::to_string(x) + "," + std::to_string(y) +
                    ") leaves the " + std::to_string(image.width()) + "x" +
                    std::to_string(image.height()) + " image");
  }
  BScanImage block(kWindowWidth, kWindowHeight);
  for (int r = 0; r < kWindowHeight; ++r) {
    for (int c = 0; c < kWindowWidth; ++c) {
      block.at(c, r) = image.at(x - kWindowHalfWidth + c, y - kWindowHalfHeight + r);
    }
  }
  return block;
}

namespace detail {

// L2 normalization with the epsilon inside the root, in place.
inline void l2_normalize(double* v, int n) {
  double sq = 0.0;
  for (int i = 0; i < n; ++i) sq += v[i] * v[i];
  const double scale = 1.0 / std::sqrt(sq + kHogEpsilon * kHogEpsilon);
  for (int i = 0; i < n; ++i) v[i] *= scale;
}

}  // namespace detail

/// Histogram of oriented gradients for one 50x15 window (648 values).
inline HogDescriptor extract_hog(const BScanImage& window) {
  if (window.width() != kWindowWidth || window.height() != kWindowHeight) {
    throw Error(ErrorCode::BadWindowSize, "HOG window must be 50x15, got " +
                                              std::to_string(window.width()) + "x" +
                                              std::to_string(window.height()));
  }
  constexpr double kBinWidth = 180.0 / kHogBins;
  std::array<double, kHogCellsX * kHogCellsY * kHogBins> cells{};

  auto px = [&](int x, int y) {
    x = x < 0 ? 0 : (x >= kWindowWidth ? kWindowWidth - 1 : x);
    y = y < 0 ? 0 : (y >= kWindowHeight ? kWindowHeight - 1 : y);
    return static_cast<double>(window.at(x, y));
  };

  for (int y = 0; y < kWindowHeight; ++y) {
    for (int x = 0; x < kWindowWidth; ++x) {
      const double gx = px(x + 1, y) - px(x - 1, y);
      const double gy = px(x, y + 1) - px(x, y - 1);
      const double mag = std::sqrt(gx * gx + gy * gy);
      if (mag == 0.0) continue;
      double angle = std::atan2(gy, gx) * (180.0 / std::numbers::pi);
      if (angle < 0.0) angle += 180.0;
      if (angle >= 180.0) angle -= 180.0;
      // Bin centers sit at 10, 30, ..., 170 degrees; wrap between 170 and 10.
      const double pos = angle / kBinWidth - 0.5;
      const double lower = std::floor(pos);
      const double frac = pos - lower;
      const int b0 = (static_cast<int>(lower) + kHogBins) % kHogBins;
      const int b1 = (b0 + 1) % kHogBins;
      const int cell = (y / kHogCellSize) * kHogCellsX + (x / kHogCellSize);
      cells[static_cast<std::size_t>(cell * kHogBins + b0)] += mag * (1.0 - frac);
      cells[static_cast<std::size_t>(cell * kHogBins + b1)] += mag * frac;
    }
  }

  HogDescriptor out(static_cast<std::size_t>(kHogLength), 0.0);
  double* dst = out.data();
  for (int by = 0; by < kHogBlocksY; ++by) {
    for (int bx = 0; bx < kHogBlocksX; ++bx) {
      double* block = dst;
      for (int cy = 0; cy < kHogBlockCells; ++cy) {
        for (int cx = 0; cx < kHogBlockCells; ++cx) {
          const int cell = (by + cy) * kHogCellsX + (bx + cx);
          for (int b = 0; b < kHogBins; ++b) {
            *dst++ = cells[static_cast<std::size_t>(cell * kHogBins + b)];
          }
        }
      }
      // L2-Hys: normalize, clip, renormalize.
      detail::l2_normalize(block, kHogBlockLength);
      for (int i = 0; i < kHogBlockLength; ++i) block[i] = std::min(block[i], kHogClip);
      detail::l2_normalize(block, kHogBlockLength);
    }
  }
  return out;
}

}  // namespace gprscan
