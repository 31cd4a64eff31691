#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gprscan/naive_bayes.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace gprscan;

namespace {

NaiveBayesModel one_d(double m1, double v1, double m2, double v2, double p1 = 0.5) {
  NaiveBayesModel m;
  m.priors = {p1, 1.0 - p1};
  m.means = {std::vector<double>{m1}, std::vector<double>{m2}};
  m.variances = {std::vector<double>{v1}, std::vector<double>{v2}};
  return m;
}

NaiveBayesModel random_model(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> mean(-2, 2), var(0.2, 3), prior(0.05, 0.95);
  NaiveBayesModel m;
  const double p = prior(rng);
  m.priors = {p, 1 - p};
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t i = 0; i < n; ++i) {
      m.means[k].push_back(mean(rng));
      m.variances[k].push_back(var(rng));
    }
  return m;
}

}  // namespace

TEST(Train, PriorsFromClassCounts) {
  std::vector<std::vector<double>> x;
  std::vector<ClassLabel> y;
  for (int i = 0; i < 304; ++i) {
    x.push_back({1.0 * i});
    y.push_back(ClassLabel::Hyperbola);
  }
  for (int i = 0; i < 1800; ++i) {
    x.push_back({-1.0 * i});
    y.push_back(ClassLabel::NotHyperbola);
  }
  const NaiveBayesModel m = train(x, y);
  EXPECT_DOUBLE_EQ(m.priors[0], 304.0 / 2104.0);
  EXPECT_DOUBLE_EQ(m.priors[1], 1800.0 / 2104.0);
  EXPECT_NEAR(m.priors[0], 0.14449, 5e-6);
  EXPECT_NEAR(m.priors[1], 0.85551, 5e-6);
}

TEST(Train, SingleSamplePerClassFloorsVariance) {
  const NaiveBayesModel m = train({{0.0}, {1.0}}, {ClassLabel::Hyperbola, ClassLabel::NotHyperbola});
  EXPECT_EQ(m.means[0][0], 0.0);
  EXPECT_EQ(m.means[1][0], 1.0);
  EXPECT_EQ(m.variances[0][0], 1e-6);
  EXPECT_EQ(m.variances[1][0], 1e-6);
  EXPECT_EQ(m.priors[0], 0.5);
}

TEST(Train, MatchesAccumulationOracle) {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> g(0, 1);
  std::vector<std::vector<double>> x;
  std::vector<ClassLabel> y;
  for (int i = 0; i < 200; ++i) {
    const bool pos = rng() % 3 == 0;
    x.push_back({g(rng) + pos, 2 * g(rng), g(rng) * g(rng)});
    y.push_back(pos ? ClassLabel::Hyperbola : ClassLabel::NotHyperbola);
  }
  const NaiveBayesModel m = train(x, y);
  for (std::size_t k = 0; k < 2; ++k) {
    const ClassLabel label = k == 0 ? ClassLabel::Hyperbola : ClassLabel::NotHyperbola;
    for (std::size_t f = 0; f < 3; ++f) {
      long double sum = 0, sq = 0;
      int n = 0;
      for (std::size_t s = 0; s < x.size(); ++s)
        if (y[s] == label) {
          sum += x[s][f];
          sq += static_cast<long double>(x[s][f]) * x[s][f];
          ++n;
        }
      const long double mean = sum / n;
      EXPECT_NEAR(m.means[k][f], static_cast<double>(mean), 1e-12);
      EXPECT_NEAR(m.variances[k][f], static_cast<double>(sq / n - mean * mean), 1e-12);
    }
  }
}

TEST(Train, Errors) {
  EXPECT_ERROR_CODE(train({{0.0}, {1.0}}, {ClassLabel::Hyperbola, ClassLabel::Hyperbola}),
                    ErrorCode::ClassMissing);
  EXPECT_ERROR_CODE(train({{0.0}, {1.0, 2.0}}, {ClassLabel::Hyperbola, ClassLabel::NotHyperbola}),
                    ErrorCode::LengthMismatch);
}

TEST(Train, SeparatedCloudsFitPerfectly) {
  std::mt19937_64 rng(32);
  std::normal_distribution<double> g(0, 0.5);
  std::vector<std::vector<double>> x;
  std::vector<ClassLabel> y;
  for (int i = 0; i < 100; ++i) {
    x.push_back({g(rng), g(rng)});
    y.push_back(ClassLabel::Hyperbola);
    x.push_back({10 + g(rng), 10 + g(rng)});
    y.push_back(ClassLabel::NotHyperbola);
  }
  const NaiveBayesModel m = train(x, y);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(classify(m, x[i]), y[i]);
}

TEST(Posterior, IdenticalClassesTie) {
  const NaiveBayesModel m = one_d(3, 2, 3, 2);
  for (double x : {-5.0, 0.0, 3.0, 100.0}) {
    const ClassScores s = log_posterior(m, {x});
    EXPECT_EQ(s[0], s[1]);
    EXPECT_EQ(classify(s), ClassLabel::Hyperbola);
  }
}

TEST(Posterior, MidpointTies) {
  const ClassScores s = log_posterior(one_d(0, 1, 2, 1), {1.0});
  EXPECT_EQ(s[0], s[1]);
}

TEST(Posterior, HandEvaluable) {
  EXPECT_EQ(classify(one_d(0, 1, 10, 1), {0.1}), ClassLabel::Hyperbola);
  EXPECT_EQ(classify(one_d(0, 1, 10, 1), {9.0}), ClassLabel::NotHyperbola);
  EXPECT_ERROR_CODE(log_posterior(one_d(0, 1, 10, 1), {1.0, 2.0}), ErrorCode::LengthMismatch);
}

TEST(Posterior, MatchesDensityProduct) {
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng() % 6;
    const NaiveBayesModel m = random_model(rng, n);
    std::vector<double> x(n);
    for (double& v : x) v = u(rng);
    const ClassScores s = log_posterior(m, x);
    for (std::size_t k = 0; k < 2; ++k) {
      const double direct = std::log(oracle::density_product(m, k, x));
      EXPECT_NEAR(s[k], direct, 1e-9 * std::max(1.0, std::abs(direct)));
    }
    const double p1 = oracle::density_product(m, 0, x), p2 = oracle::density_product(m, 1, x);
    if (p1 != p2) {
      EXPECT_EQ(classify(m, x), p1 > p2 ? ClassLabel::Hyperbola : ClassLabel::NotHyperbola);
    }
  }
}

TEST(Posterior, ArgmaxInvariances) {
  std::mt19937_64 rng(34);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int trial = 0; trial < 200; ++trial) {
    NaiveBayesModel m = random_model(rng, 4);
    std::vector<double> x(4);
    for (double& v : x) v = u(rng);
    const ClassScores s = log_posterior(m, x);
    if (std::abs(s[0] - s[1]) < 1e-9) continue;
    const ClassLabel base = classify(s);
    // Adding a constant to both scores.
    EXPECT_EQ(classify(ClassScores{s[0] + 17.5, s[1] + 17.5}), base);
    // Scaling both priors by one factor.
    m.priors = {m.priors[0] * 0.25, m.priors[1] * 0.25};
    EXPECT_EQ(classify(m, x), base);
  }
}

TEST(Posterior, NeverNaNWithFlooredVariance) {
  const NaiveBayesModel m = train({{0.0, 5.0}, {0.0, 5.0}, {1.0, 5.0}, {1.0, 5.0}},
                                  {ClassLabel::Hyperbola, ClassLabel::Hyperbola,
                                   ClassLabel::NotHyperbola, ClassLabel::NotHyperbola});
  const ClassScores s = log_posterior(m, {0.5, 4.0});
  EXPECT_TRUE(std::isfinite(s[0]));
  EXPECT_TRUE(std::isfinite(s[1]));
}

TEST(ModelFile, RoundTripIsExact) {
  TempDir dir;
  std::mt19937_64 rng(35);
  for (int trial = 0; trial < 20; ++trial) {
    const NaiveBayesModel m = random_model(rng, 1 + rng() % 40);
    save_model(m, dir / "m.txt");
    EXPECT_EQ(load_model(dir / "m.txt"), m);
  }
}

TEST(ModelFile, RejectsBadPriorsAndCounts) {
  const NaiveBayesModel m = one_d(0, 1, 1, 1);
  std::string text = encode_model(m);
  EXPECT_EQ(decode_model(text), m);

  std::string bad_priors = text;
  bad_priors.replace(bad_priors.find("priors"), std::string("priors 0.5 0.5").size(), "priors 0.5 0.6");
  EXPECT_ERROR_CODE(decode_model(bad_priors), ErrorCode::MalformedModelFile);

  std::string bad_n = text;
  bad_n.replace(bad_n.find("n=1"), 3, "n=2");
  EXPECT_ERROR_CODE(decode_model(bad_n), ErrorCode::MalformedModelFile);

  EXPECT_ERROR_CODE(decode_model("hello\n"), ErrorCode::MalformedModelFile);
}
