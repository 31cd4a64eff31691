#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "gprscan/error.hpp"

namespace gprscan {

/**
 * 8-bit grayscale radargram. Columns are scan positions along the survey
 * line, rows are two-way travel time (depth). Pixels are stored row-major,
 * 0 = black, 255 = white; reflections from rebar show up bright.
 */
class BScanImage {
 public:
  BScanImage() = default;

  BScanImage(int width, int height, std::uint8_t fill = 0)
      : width_(width), height_(height) {
    if (width < 0 || height < 0) {
      throw Error(ErrorCode::MalformedFile, "negative image dimensions");
    }
    pixels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }

  BScanImage(int width, int height, std::vector<std::uint8_t> pixels)
      : width_(width), height_(height), pixels_(std::move(pixels)) {
    if (width < 0 || height < 0 ||
        pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
      throw Error(ErrorCode::MalformedFile, "pixel buffer does not match width x height");
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return pixels_.empty(); }

  bool contains(int x, int y) const noexcept {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  std::uint8_t at(int x, int y) const {
    return pixels_[index(x, y)];
  }
  std::uint8_t& at(int x, int y) { return pixels_[index(x, y)]; }

  const std::vector<std::uint8_t>& pixels() const noexcept { return pixels_; }
  std::vector<std::uint8_t>& pixels() noexcept { return pixels_; }

  friend bool operator==(const BScanImage&, const BScanImage&) = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

using Rgb = std::array<std::uint8_t, 3>;

/// Interleaved RGB image used for annotated scans and condition-map renders.
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int width, int height, Rgb fill = {0, 0, 0})
      : width_(width), height_(height),
        pixels_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }

  Rgb at(int x, int y) const { return pixels_[index(x, y)]; }
  Rgb& at(int x, int y) { return pixels_[index(x, y)]; }

  const std::vector<Rgb>& pixels() const noexcept { return pixels_; }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<Rgb> pixels_;
};

struct RebarPick {
  int x = 0;
  int y = 0;
  int amplitude = 0;

  friend bool operator==(const RebarPick&, const RebarPick&) = default;
};

/// Picks for one image, kept sorted by (x, y) with unique positions.
struct PickSet {
  std::string image_id;
  std::vector<RebarPick> picks;

  /// Restores the ordering invariant and drops repeated positions (the first
  /// occurrence in the original sequence wins).
  void normalize() {
    std::stable_sort(picks.begin(), picks.end(), [](const RebarPick& a, const RebarPick& b) {
      return std::tie(a.x, a.y) < std::tie(b.x, b.y);
    });
    picks.erase(std::unique(picks.begin(), picks.end(),
                            [](const RebarPick& a, const RebarPick& b) {
                              return a.x == b.x && a.y == b.y;
                            }),
                picks.end());
  }

  std::size_t size() const noexcept { return picks.size(); }
  bool empty() const noexcept { return picks.empty(); }

  friend bool operator==(const PickSet&, const PickSet&) = default;
};

struct ManifestEntry {
  std::string image_id;
  int lane_index = 0;
  double start_station_m = 0.0;
  double pixels_per_meter = 1.0;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct ScanManifest {
  std::vector<ManifestEntry> entries;

  const ManifestEntry* find(const std::string& image_id) const {
    auto it = std::find_if(entries.begin(), entries.end(),
                           [&](const ManifestEntry& e) { return e.image_id == image_id; });
    return it == entries.end() ? nullptr : &*it;
  }

  friend bool operator==(const ScanManifest&, const ScanManifest&) = default;
};

}  // namespace gprscan
