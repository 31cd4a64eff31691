#include <gtest/gtest.h>

#include <random>

#include "gprscan/io.hpp"
#include "gprscan/preprocess.hpp"
#include "gprscan/simulator.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace gprscan;

namespace {

BScanImage two_tone() {
  BScanImage img(64, 64);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) img.at(x, y) = ((x < 32) == (y < 32)) ? 60 : 190;
  return img;
}

}  // namespace

TEST(Clahe, ConstantImageStaysConstant) {
  for (int v : {0, 17, 128, 255}) {
    const BScanImage out = apply_clahe(BScanImage(40, 30, static_cast<std::uint8_t>(v)));
    for (auto p : out.pixels()) EXPECT_EQ(p, out.pixels().front());
  }
}

TEST(Clahe, SingleTileNoClipIsGlobalEqualization) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 20; ++i) {
    const BScanImage img = oracle::random_image(rng, 10 + i * 5, 8 + i * 3, i, 200 + i);
    EXPECT_EQ(apply_clahe(img, {1, 1, 1.0}), oracle::global_equalize(img));
  }
}

TEST(Clahe, TwoToneGolden) {
  const BScanImage golden = load_bscan(GPRSCAN_TEST_DATA "/clahe_two_tone.pgm");
  EXPECT_EQ(oracle::clahe_reference(two_tone(), 2, 2, 0.01), golden);
  EXPECT_EQ(apply_clahe(two_tone(), {2, 2, 0.01}), golden);
}

TEST(Clahe, MatchesPerPixelReferenceOnRandomImages) {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 5; ++i) {
    const BScanImage img = oracle::random_image(rng, 37 + i * 11, 29 + i * 5);
    EXPECT_EQ(apply_clahe(img, {4, 3, 0.05}), oracle::clahe_reference(img, 4, 3, 0.05));
  }
}

TEST(Clahe, TileMappingsAreMonotone) {
  std::mt19937_64 rng(13);
  const BScanImage img = oracle::random_image(rng, 120, 90);
  const ClaheMappings maps = compute_clahe_mappings(img, {});
  for (const auto& lut : maps.luts)
    for (int v = 1; v < 256; ++v) EXPECT_LE(lut[v - 1], lut[v]);
}

TEST(Clahe, GlobalCaseKeepsRankOrder) {
  // With one tile every pixel shares a single monotone table.
  std::mt19937_64 rng(14);
  for (int i = 0; i < 10; ++i) {
    const BScanImage img = oracle::random_image(rng, 64, 48);
    const BScanImage out = apply_clahe(img, {1, 1, 0.01 + 0.05 * i});
    for (int k = 0; k < 500; ++k) {
      const std::size_t a = rng() % img.pixels().size(), b = rng() % img.pixels().size();
      if (img.pixels()[a] < img.pixels()[b]) {
        EXPECT_LE(out.pixels()[a], out.pixels()[b]);
      }
    }
  }
}

TEST(Clahe, OutputRangeAndErrors) {
  std::mt19937_64 rng(15);
  const BScanImage out = apply_clahe(oracle::random_image(rng, 80, 60), {8, 8, 0.5});
  EXPECT_EQ(out.width(), 80);
  EXPECT_ERROR_CODE(apply_clahe(BScanImage(4, 4), {8, 8, 0.03}), ErrorCode::ImageTooSmall);
  EXPECT_ERROR_CODE(apply_clahe(BScanImage(40, 40), {0, 8, 0.03}), ErrorCode::InvalidConfig);
  EXPECT_ERROR_CODE(apply_clahe(BScanImage(40, 40), {8, 8, 0.0}), ErrorCode::InvalidConfig);
}

TEST(GroundPlane, ThreeRowBandCenterWins) {
  BScanImage img(60, 50, 180);
  for (int y = 9; y <= 11; ++y)
    for (int x = 0; x < 60; ++x) img.at(x, y) = 10;
  EXPECT_EQ(find_ground_plane(img), 10);
}

TEST(GroundPlane, ConstantImageHasNone) {
  EXPECT_ERROR_CODE(find_ground_plane(BScanImage(60, 50, 90)), ErrorCode::NoGroundPlane);
  EXPECT_ERROR_CODE(find_ground_plane(BScanImage(60, 50, 0)), ErrorCode::NoGroundPlane);
}

TEST(GroundPlane, RenderedScene) {
  SyntheticSceneSpec spec;
  spec.rebar.push_back({500, 60, 230});
  spec.noise_sigma = 12;
  const int s = find_ground_plane(render_bscan(spec).image);
  EXPECT_NEAR(s, spec.ground_row + spec.ground_thickness / 2, 1);
}

TEST(GroundPlane, InvariantUnderAffineMaps) {
  std::mt19937_64 rng(16);
  for (int trial = 0; trial < 20; ++trial) {
    SyntheticSceneSpec spec;
    spec.width = 200;
    spec.height = 120;
    spec.ground_row = 5 + static_cast<int>(rng() % 30);
    spec.noise_sigma = 5;
    spec.seed = trial;
    const BScanImage img = render_bscan(spec).image;
    const int s = find_ground_plane(img);
    BScanImage mapped = img;
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x) mapped.at(x, y) = static_cast<std::uint8_t>(img.at(x, y) / 2 + 40);
    EXPECT_EQ(find_ground_plane(mapped), s);
  }
}

TEST(DepthBand, BrightLineAtRow40) {
  BScanImage img(100, 80, 50);
  for (int x = 0; x < 100; ++x) img.at(x, 40) = 200;
  const DepthBandEnd e = estimate_depth_band_end(img, 10);
  EXPECT_FALSE(e.fallback);
  EXPECT_EQ(e.row, 55);
}

TEST(DepthBand, ConstantBelowStartFallsBack) {
  BScanImage img(100, 80, 50);
  for (int x = 0; x < 100; ++x) img.at(x, 10) = 0;
  const DepthBandEnd e = estimate_depth_band_end(img, 10);
  EXPECT_TRUE(e.fallback);
  EXPECT_EQ(e.row, 79);
}

TEST(DepthBand, RenderedApexesAtRow60) {
  for (double noise : {0.0, 12.0}) {
    SyntheticSceneSpec spec;
    spec.noise_sigma = noise;
    for (int x = 40; x < 1000; x += 60) spec.rebar.push_back({x, 60, 230});
    const BScanImage img = render_bscan(spec).image;
    const int e = estimate_depth_band_end(img, find_ground_plane(img)).row;
    EXPECT_GE(e, 70) << "noise " << noise;
    EXPECT_LE(e, 80) << "noise " << noise;
  }
}

TEST(SearchWindow, RenderedScene) {
  SyntheticSceneSpec spec;
  spec.noise_sigma = 12;
  spec = apply_layout(spec, RandomLayout{});
  const SearchWindow w = compute_search_window(render_bscan(spec).image);
  EXPECT_NEAR(w.start, 20, 1);
  EXPECT_NEAR(w.end, 75, 3);
}

TEST(SearchWindow, ShallowImageClampsAndExtends) {
  BScanImage img(60, 25, 150);
  for (int y = 4; y <= 6; ++y)
    for (int x = 0; x < 60; ++x) img.at(x, y) = 5;
  const SearchWindow w = compute_search_window(img);
  EXPECT_EQ(w.start, 5);
  EXPECT_EQ(w.end, 24);
}

TEST(SearchWindow, PropagatesNoGroundPlane) {
  EXPECT_ERROR_CODE(compute_search_window(BScanImage(60, 40, 77)), ErrorCode::NoGroundPlane);
}

TEST(SearchWindow, AlwaysAdmitsOneWindow) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    SyntheticSceneSpec spec;
    spec.width = 50 + static_cast<int>(rng() % 100);
    spec.height = 40 + static_cast<int>(rng() % 80);
    spec.ground_row = static_cast<int>(rng() % 10);
    spec.noise_sigma = 8;
    spec.seed = trial;
    const BScanImage img = render_bscan(spec).image;
    const SearchWindow w = compute_search_window(img);
    EXPECT_GE(w.end - w.start, 15);
    EXPECT_LE(std::max(w.start + 7, 7), std::min(w.end - 7, img.height() - 8));
  }
}
