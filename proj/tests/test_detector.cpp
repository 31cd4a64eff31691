#include <gtest/gtest.h>

#include <random>
#include <set>

#include "gprscan/detector.hpp"
#include "gprscan/evaluator.hpp"
#include "gprscan/simulator.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace gprscan;

namespace {

// Both classes share every likelihood, so the priors alone decide.
NaiveBayesModel constant_model(ClassLabel answer) {
  NaiveBayesModel m;
  m.priors = answer == ClassLabel::Hyperbola ? std::array<double, 2>{0.999, 0.001}
                                             : std::array<double, 2>{0.001, 0.999};
  for (std::size_t k = 0; k < 2; ++k) {
    m.means[k].assign(648, 0.0);
    m.variances[k].assign(648, 1.0);
  }
  return m;
}

NaiveBayesModel train_on_scenes(int first_seed, int count, const RandomLayout& layout,
                                double noise, bool use_clahe = true) {
  std::vector<HogDescriptor> x;
  std::vector<ClassLabel> y;
  for (int i = 0; i < count; ++i) {
    SyntheticSceneSpec spec;
    spec.noise_sigma = noise;
    spec.seed = static_cast<std::uint64_t>(first_seed + i);
    const RenderedScene scene = render_bscan(apply_layout(spec, layout));
    const BScanImage img = use_clahe ? apply_clahe(scene.image) : scene.image;
    for (const auto& w : sample_training_windows(img, scene.truth, 30, 180, 500 + i)) {
      x.push_back(extract_hog(w.pixels));
      y.push_back(w.label);
    }
  }
  return train(x, y);
}

}  // namespace

TEST(SlidingWindow, AlwaysNoGivesNothing) {
  std::mt19937_64 rng(41);
  const BScanImage img = oracle::random_image(rng, 100, 50);
  EXPECT_TRUE(sliding_window_scan(img, {10, 40}, constant_model(ClassLabel::NotHyperbola)).empty());
}

TEST(SlidingWindow, AlwaysYesCoversLattice) {
  std::mt19937_64 rng(42);
  const BScanImage img = oracle::random_image(rng, 100, 50);
  const CandidatePoints pts =
      sliding_window_scan(img, {10, 40}, constant_model(ClassLabel::Hyperbola));
  // Centers x = 25, 27, ..., 75 and y = 17, 19, ..., 33.
  const std::size_t cols = (75 - 25) / 2 + 1, rows = (33 - 17) / 2 + 1;
  ASSERT_EQ(pts.size(), cols * rows);
  EXPECT_EQ(pts.front(), (CandidatePoint{25, 17}));
  EXPECT_EQ(pts[1], (CandidatePoint{27, 17}));
  EXPECT_EQ(pts.back(), (CandidatePoint{75, 33}));
}

TEST(SlidingWindow, BandTooThinThrows) {
  EXPECT_ERROR_CODE(sliding_window_scan(BScanImage(100, 50), {10, 20},
                                        constant_model(ClassLabel::Hyperbola)),
                    ErrorCode::WindowDoesNotFit);
}

TEST(Localize, EmptyInput) {
  EXPECT_TRUE(histogram_localize({}, BScanImage(60, 40, 9), 5, 30).empty());
}

TEST(Localize, TenPointsOneBrightPixel) {
  // Column 20 peaks at row 30; its brighter neighbour is one column over.
  BScanImage img(60, 50, 40);
  img.at(20, 30) = 200;
  img.at(21, 30) = 250;
  CandidatePoints pts(10, CandidatePoint{20, 25});
  const PickSet out = histogram_localize(pts, img, 10, 40);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out.picks[0], (RebarPick{21, 30, 250}));
  EXPECT_EQ(out, oracle::algorithm1(pts, img, 10, 40));
}

TEST(Localize, NearbyClusterSuppressed) {
  std::mt19937_64 rng(43);
  const BScanImage img = oracle::random_image(rng, 60, 50);
  CandidatePoints pts;
  for (int i = 0; i < 7; ++i) pts.push_back({20, 20 + i});
  for (int i = 0; i < 5; ++i) pts.push_back({25, 20 + i});
  const PickSet out = histogram_localize(pts, img, 10, 40);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_NEAR(out.picks[0].x, 20, 2);
}

TEST(Localize, AsymmetricSuppressionWindow) {
  // Column 20 looks at [13, 26], so the taller column 27 does not suppress
  // it; a symmetric +/-7 window would have.
  const BScanImage img(80, 40, 10);
  CandidatePoints pts;
  for (int i = 0; i < 3; ++i) pts.push_back({20, 15});
  for (int i = 0; i < 5; ++i) pts.push_back({27, 15});
  const PickSet out = histogram_localize(pts, img, 5, 30);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out.picks[0], (RebarPick{20, 5, 10}));
  EXPECT_EQ(out.picks[1], (RebarPick{27, 5, 10}));

  // Mirror image: 3 points at 27 and 5 at 20; 27 looks at [20, 33].
  CandidatePoints mirror;
  for (int i = 0; i < 5; ++i) mirror.push_back({20, 15});
  for (int i = 0; i < 3; ++i) mirror.push_back({27, 15});
  ASSERT_EQ(histogram_localize(mirror, img, 5, 30).size(), 1u);
}

TEST(Localize, MatchesExhaustiveOracle) {
  std::mt19937_64 rng(44);
  for (int trial = 0; trial < 200; ++trial) {
    const int w = 10 + static_cast<int>(rng() % 91), h = 10 + static_cast<int>(rng() % 41);
    // Few gray levels so ties actually happen.
    const BScanImage img = oracle::random_image(rng, w, h, 0, trial % 2 ? 255 : 4);
    CandidatePoints pts(rng() % 201);
    for (auto& p : pts) p = {static_cast<int>(rng() % w), static_cast<int>(rng() % h)};
    const int s = static_cast<int>(rng() % h), e = s + static_cast<int>(rng() % (h - s));
    PickSet got = histogram_localize(pts, img, s, e);
    got.image_id.clear();
    ASSERT_EQ(got, oracle::algorithm1(pts, img, s, e)) << "trial " << trial;
  }
}

TEST(Localize, PickInvariants) {
  std::mt19937_64 rng(45);
  for (int trial = 0; trial < 100; ++trial) {
    const BScanImage img = oracle::random_image(rng, 100, 50);
    CandidatePoints pts(1 + rng() % 100);
    for (auto& p : pts) p = {static_cast<int>(rng() % 100), static_cast<int>(rng() % 50)};
    const PickSet out = histogram_localize(pts, img, 12, 35);
    std::set<int> xs;
    for (const auto& p : pts) xs.insert(p.x);
    EXPECT_LE(out.size(), xs.size());
    for (const auto& p : out.picks) {
      EXPECT_EQ(p.amplitude, img.at(p.x, p.y));
      EXPECT_GE(p.y, 12 - 2);
      EXPECT_LE(p.y, 35 + 2);
    }
  }
}

TEST(Suppress, RuleExamples) {
  PickSet far;
  far.picks = {{20, 5, 100}, {50, 5, 90}};
  EXPECT_EQ(suppress_duplicate_picks(far, 10).size(), 2u);

  PickSet near;
  near.picks = {{20, 5, 200}, {25, 5, 150}};
  const PickSet kept = suppress_duplicate_picks(near, 10);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept.picks[0].x, 20);

  PickSet tie;
  tie.picks = {{20, 5, 150}, {25, 5, 150}};
  EXPECT_EQ(suppress_duplicate_picks(tie, 10).picks[0].x, 20);
}

TEST(Suppress, IdempotentAndSeparated) {
  std::mt19937_64 rng(46);
  for (int trial = 0; trial < 200; ++trial) {
    PickSet set;
    for (int i = 0; i < 40; ++i)
      set.picks.push_back({static_cast<int>(rng() % 300), static_cast<int>(rng() % 80),
                           static_cast<int>(rng() % 256)});
    set.normalize();
    const int sep = 1 + static_cast<int>(rng() % 15);
    const PickSet once = suppress_duplicate_picks(set, sep);
    EXPECT_EQ(suppress_duplicate_picks(once, sep), once);
    for (std::size_t a = 0; a < once.size(); ++a)
      for (std::size_t b = a + 1; b < once.size(); ++b)
        EXPECT_GE(std::abs(once.picks[a].x - once.picks[b].x), sep);
  }
}

TEST(Detect, BlankImageHasNoGroundPlane) {
  EXPECT_ERROR_CODE(detect_rebar(BScanImage(200, 100, 0), constant_model(ClassLabel::Hyperbola)),
                    ErrorCode::NoGroundPlane);
}

TEST(Detect, TooSmallImage) {
  EXPECT_ERROR_CODE(detect_rebar(BScanImage(40, 100, 0), constant_model(ClassLabel::Hyperbola)),
                    ErrorCode::WindowDoesNotFit);
}

TEST(Detect, FiveRebarSceneHasCandidatesNearEachApex) {
  const NaiveBayesModel model = train_on_scenes(201, 4, RandomLayout{}, 6);
  SyntheticSceneSpec spec;
  spec.width = 300;
  spec.height = 150;
  for (int x : {60, 110, 160, 210, 260}) spec.rebar.push_back({x, 60, 230});
  const RenderedScene scene = render_bscan(spec);
  const BScanImage img = apply_clahe(scene.image);
  const CandidatePoints pts = sliding_window_scan(img, compute_search_window(scene.image), model);
  for (const auto& apex : scene.truth.picks) {
    const bool hit = std::any_of(pts.begin(), pts.end(),
                                 [&](const CandidatePoint& p) { return std::abs(p.x - apex.x) <= 5; });
    EXPECT_TRUE(hit) << "apex at " << apex.x;
  }
}

namespace {

// 20 bars 40-48 px apart across a 1000 px scan, speckle sigma 10; trained on
// seeds 301-306, scored on seeds 1-3.
Metrics twenty_rebar_metrics(bool use_clahe) {
  RandomLayout layout;
  layout.count = 20;
  layout.spacing_min = 40;
  layout.spacing_max = 48;
  const NaiveBayesModel model = train_on_scenes(301, 6, layout, 10, use_clahe);
  DetectOptions options;
  options.use_clahe = use_clahe;
  long long tp = 0, fp = 0, total = 0;
  for (int seed = 1; seed <= 3; ++seed) {
    SyntheticSceneSpec spec;
    spec.noise_sigma = 10;
    spec.seed = static_cast<std::uint64_t>(seed);
    const RenderedScene scene = render_bscan(apply_layout(spec, layout));
    const PickSet picks = detect_rebar(scene.image, model, options);
    if (seed == 1) {
      EXPECT_EQ(detect_rebar(scene.image, model, options), picks);
    }
    const MatchResult m = match_picks(picks, scene.truth);
    tp += m.true_positives;
    fp += m.false_positives;
    total += static_cast<long long>(scene.truth.size());
  }
  return compute_metrics(tp, fp, total);
}

}  // namespace

TEST(Detect, TwentyRebarSceneMeetsTargetsAndIsDeterministic) {
  const Metrics metrics = twenty_rebar_metrics(false);
  EXPECT_GE(metrics.accuracy, 0.95);
  EXPECT_GE(metrics.precision, 0.95);
}

TEST(Detect, TwentyRebarSceneWithEqualizationKeepsRecall) {
  // Equalizing bar-free tiles stretches speckle to full contrast, and with
  // wide gaps between bars that costs precision. Recall is unaffected.
  const Metrics metrics = twenty_rebar_metrics(true);
  RecordProperty("precision_pct", format_percent(metrics.precision));
  EXPECT_GE(metrics.accuracy, 0.95);
}
