#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "gprscan/error.hpp"
#include "gprscan/image.hpp"

namespace gprscan {

namespace detail {

inline std::vector<char> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_all(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) {
    throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
  }
}

// Netpbm header tokenizer: whitespace separated fields with '#' comments.
class NetpbmHeader {
 public:
  NetpbmHeader(const std::vector<char>& data, const std::string& name)
      : data_(data), name_(name) {}

  std::string magic() {
    if (data_.size() < 2) fail("truncated header");
    pos_ = 2;
    return {data_.begin(), data_.begin() + 2};
  }

  long long next_number() {
    skip_space_and_comments();
    long long value = 0;
    std::size_t digits = 0;
    while (pos_ < data_.size() && data_[pos_] >= '0' && data_[pos_] <= '9') {
      value = value * 10 + (data_[pos_] - '0');
      if (value > (1LL << 40)) fail("header value too large");
      ++pos_;
      ++digits;
    }
    if (digits == 0) fail("expected a number in header");
    return value;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_offset() {
    if (pos_ >= data_.size() || !is_space(data_[pos_])) fail("missing raster separator");
    return pos_ + 1;
  }

  [[noreturn]] void fail(const std::string& why) const {
    throw Error(ErrorCode::MalformedFile, name_ + ": " + why);
  }

 private:
  static bool is_space(char c) {
    return c == ' ' || c == '\n' || c == '\r' || c == '\t' || c == '\v' || c == '\f';
  }

  void skip_space_and_comments() {
    while (pos_ < data_.size()) {
      if (is_space(data_[pos_])) {
        ++pos_;
      } else if (data_[pos_] == '#') {
        while (pos_ < data_.size() && data_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  const std::vector<char>& data_;
  std::string name_;
  std::size_t pos_ = 0;
};

inline std::vector<std::string_view> split_fields(std::string_view line, char sep = ',') {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    auto end = line.find(sep, start);
    if (end == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, end - start));
    start = end + 1;
  }
  return fields;
}

inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  }
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
  if (text.empty()) return false;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

inline std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

}  // namespace detail

/// Reads a binary PGM (P5, maxval 255).
inline BScanImage load_bscan(const std::filesystem::path& path) {
  const auto data = detail::read_all(path);
  detail::NetpbmHeader header(data, path.string());
  if (header.magic() != "P5") header.fail("not a binary graymap (P5)");
  const long long width = header.next_number();
  const long long height = header.next_number();
  const long long maxval = header.next_number();
  if (width <= 0 || height <= 0) header.fail("image dimensions must be positive");
  if (maxval != 255) {
    throw Error(ErrorCode::UnsupportedDepth,
                path.string() + ": maxval " + std::to_string(maxval) + " (only 255 supported)");
  }
  const std::size_t offset = header.raster_offset();
  const auto count = static_cast<std::size_t>(width * height);
  if (data.size() - offset < count) header.fail("raster shorter than width x height");
  std::vector<std::uint8_t> pixels(data.begin() + static_cast<std::ptrdiff_t>(offset),
                                   data.begin() + static_cast<std::ptrdiff_t>(offset + count));
  return BScanImage(static_cast<int>(width), static_cast<int>(height), std::move(pixels));
}

inline std::string encode_pgm(const BScanImage& image) {
  std::string out = "P5\n" + std::to_string(image.width()) + " " +
                    std::to_string(image.height()) + "\n255\n";
  out.append(image.pixels().begin(), image.pixels().end());
  return out;
}

inline void save_bscan(const BScanImage& image, const std::filesystem::path& path) {
  detail::write_all(path, encode_pgm(image));
}

inline std::string encode_ppm(const RgbImage& image) {
  std::string out = "P6\n" + std::to_string(image.width()) + " " +
                    std::to_string(image.height()) + "\n255\n";
  out.reserve(out.size() + image.pixels().size() * 3);
  for (const Rgb& px : image.pixels()) {
    out.push_back(static_cast<char>(px[0]));
    out.push_back(static_cast<char>(px[1]));
    out.push_back(static_cast<char>(px[2]));
  }
  return out;
}

inline void save_rgb(const RgbImage& image, const std::filesystem::path& path) {
  detail::write_all(path, encode_ppm(image));
}

/// Reads a binary PPM (P6, maxval 255).
inline RgbImage load_rgb(const std::filesystem::path& path) {
  const auto data = detail::read_all(path);
  detail::NetpbmHeader header(data, path.string());
  if (header.magic() != "P6") header.fail("not a binary pixmap (P6)");
  const long long width = header.next_number();
  const long long height = header.next_number();
  const long long maxval = header.next_number();
  if (width <= 0 || height <= 0) header.fail("image dimensions must be positive");
  if (maxval != 255) {
    throw Error(ErrorCode::UnsupportedDepth, path.string() + ": maxval must be 255");
  }
  const std::size_t offset = header.raster_offset();
  const auto count = static_cast<std::size_t>(width * height);
  if (data.size() - offset < count * 3) header.fail("raster shorter than width x height x 3");
  RgbImage image(static_cast<int>(width), static_cast<int>(height));
  for (std::size_t i = 0; i < count; ++i) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&data[offset + 3 * i]);
    image.at(static_cast<int>(i % static_cast<std::size_t>(width)),
             static_cast<int>(i / static_cast<std::size_t>(width))) = {p[0], p[1], p[2]};
  }
  return image;
}

inline constexpr std::string_view kPickHeader = "image_id,x,y,amplitude";
inline constexpr std::string_view kManifestHeader =
    "image_id,lane_index,start_station_m,pixels_per_meter";

/// Parses pick CSV text. `fallback_id` names the set when the body is empty.
inline PickSet parse_picks(const std::vector<std::string>& lines, const std::string& fallback_id,
                           const std::string& source = "picks") {
  if (lines.empty() || lines.front() != kPickHeader) {
    throw Error(ErrorCode::MalformedRow, source + ": expected header '" +
                                             std::string(kPickHeader) + "'");
  }
  PickSet set;
  set.image_id = fallback_id;
  bool have_id = false;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto fields = detail::split_fields(lines[i]);
    const std::string where = source + " line " + std::to_string(i + 1);
    if (fields.size() != 4) {
      throw Error(ErrorCode::MalformedRow, where + ": expected 4 fields");
    }
    RebarPick pick;
    if (!detail::parse_number(fields[1], pick.x) || !detail::parse_number(fields[2], pick.y) ||
        !detail::parse_number(fields[3], pick.amplitude)) {
      throw Error(ErrorCode::MalformedRow, where + ": non-integer field in '" + lines[i] + "'");
    }
    const std::string id(fields[0]);
    if (!have_id) {
      set.image_id = id;
      have_id = true;
    } else if (id != set.image_id) {
      throw Error(ErrorCode::MalformedRow, where + ": mixed image ids '" + set.image_id +
                                               "' and '" + id + "'");
    }
    set.picks.push_back(pick);
  }
  set.normalize();
  return set;
}

inline PickSet load_picks(const std::filesystem::path& path) {
  return parse_picks(detail::read_lines(path), path.stem().string(), path.string());
}

inline std::string encode_picks(const PickSet& set) {
  PickSet sorted = set;
  sorted.normalize();
  std::string out(kPickHeader);
  out += '\n';
  for (const auto& p : sorted.picks) {
    out += sorted.image_id + "," + std::to_string(p.x) + "," + std::to_string(p.y) + "," +
           std::to_string(p.amplitude) + "\n";
  }
  return out;
}

inline void save_picks(const PickSet& set, const std::filesystem::path& path) {
  detail::write_all(path, encode_picks(set));
}

inline ScanManifest load_manifest(const std::filesystem::path& path) {
  const auto lines = detail::read_lines(path);
  if (lines.empty() || lines.front() != kManifestHeader) {
    throw Error(ErrorCode::MalformedRow, path.string() + ": expected header '" +
                                             std::string(kManifestHeader) + "'");
  }
  ScanManifest manifest;
  std::set<std::string> seen;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto fields = detail::split_fields(lines[i]);
    const std::string where = path.string() + " line " + std::to_string(i + 1);
    if (fields.size() != 4) throw Error(ErrorCode::MalformedRow, where + ": expected 4 fields");
    ManifestEntry e;
    e.image_id = std::string(fields[0]);
    if (!detail::parse_number(fields[1], e.lane_index) ||
        !detail::parse_number(fields[2], e.start_station_m) ||
        !detail::parse_number(fields[3], e.pixels_per_meter)) {
      throw Error(ErrorCode::MalformedRow, where + ": unparsable field in '" + lines[i] + "'");
    }
    if (e.lane_index < 0) throw Error(ErrorCode::MalformedRow, where + ": lane_index < 0");
    if (!(e.pixels_per_meter > 0.0)) {
      throw Error(ErrorCode::MalformedRow, where + ": pixels_per_meter must be > 0");
    }
    if (!seen.insert(e.image_id).second) {
      throw Error(ErrorCode::MalformedRow, where + ": duplicate image_id '" + e.image_id + "'");
    }
    manifest.entries.push_back(std::move(e));
  }
  return manifest;
}

inline void save_manifest(const ScanManifest& manifest, const std::filesystem::path& path) {
  std::string out(kManifestHeader);
  out += '\n';
  for (const auto& e : manifest.entries) {
    out += e.image_id + "," + std::to_string(e.lane_index) + "," +
           detail::format_double(e.start_station_m) + "," +
           detail::format_double(e.pixels_per_meter) + "\n";
  }
  detail::write_all(path, out);
}

inline constexpr Rgb kPickColor = {255, 0, 0};
inline constexpr int kPickSquareHalf = 2;

/// Gray-to-RGB copy with a red 5x5 outline square around every pick.
inline RgbImage annotate_picks(const BScanImage& image, const PickSet& picks) {
  for (const auto& p : picks.picks) {
    if (!image.contains(p.x, p.y)) {
      throw Error(ErrorCode::PickOutOfBounds,
                  "pick (" + std::to_string(p.x) + "," + std::to_string(p.y) +
                      ") outside " + std::to_string(image.width()) + "x" +
                      std::to_string(image.height()) + " image");
    }
  }
  RgbImage out(image.width(), image.height());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      const auto v = image.at(x, y);
      out.at(x, y) = {v, v, v};
    }
  }
  for (const auto& p : picks.picks) {
    for (int dy = -kPickSquareHalf; dy <= kPickSquareHalf; ++dy) {
      for (int dx = -kPickSquareHalf; dx <= kPickSquareHalf; ++dx) {
        const bool perimeter = dx == -kPickSquareHalf || dx == kPickSquareHalf ||
                               dy == -kPickSquareHalf || dy == kPickSquareHalf;
        if (perimeter && image.contains(p.x + dx, p.y + dy)) {
          out.at(p.x + dx, p.y + dy) = kPickColor;
        }
      }
    }
  }
  return out;
}

}  // namespace gprscan
