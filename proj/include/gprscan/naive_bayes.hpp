#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gprscan/error.hpp"

namespace gprscan {

enum class ClassLabel : int { Hyperbola = 1, NotHyperbola = 2 };

inline constexpr std::size_t kClassCount = 2;
inline constexpr double kVarianceFloor = 1e-6;

constexpr std::size_t class_index(ClassLabel label) {
  return static_cast<std::size_t>(label) - 1;
}

/// Gaussian Naive Bayes parameters for the two-class hyperbola problem.
/// Index 0 is class 1 (hyperbola), index 1 is class 2.
struct NaiveBayesModel {
  std::array<double, kClassCount> priors{};
  std::array<std::vector<double>, kClassCount> means;
  std::array<std::vector<double>, kClassCount> variances;

  std::size_t feature_count() const noexcept { return means[0].size(); }

  friend bool operator==(const NaiveBayesModel&, const NaiveBayesModel&) = default;
};

using ClassScores = std::array<double, kClassCount>;

/// Priors from class frequencies; per-feature population mean and variance,
/// variance floored at 1e-6.
inline NaiveBayesModel train(const std::vector<std::vector<double>>& samples,
                             const std::vector<ClassLabel>& labels) {
  if (samples.size() != labels.size()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(samples.size()) + " samples but " +
                                               std::to_string(labels.size()) + " labels");
  }
  std::array<std::size_t, kClassCount> counts{};
  for (ClassLabel label : labels) {
    if (label != ClassLabel::Hyperbola && label != ClassLabel::NotHyperbola) {
      throw Error(ErrorCode::ClassMissing, "label outside {1, 2}");
    }
    ++counts[class_index(label)];
  }
  for (std::size_t k = 0; k < kClassCount; ++k) {
    if (counts[k] == 0) {
      throw Error(ErrorCode::ClassMissing, "class " + std::to_string(k + 1) + " has no samples");
    }
  }
  const std::size_t n = samples.front().size();
  for (const auto& s : samples) {
    if (s.size() != n) {
      throw Error(ErrorCode::LengthMismatch, "descriptor lengths differ (" +
                                                 std::to_string(s.size()) + " vs " +
                                                 std::to_string(n) + ")");
    }
  }

  NaiveBayesModel model;
  const auto total = static_cast<double>(samples.size());
  for (std::size_t k = 0; k < kClassCount; ++k) {
    model.priors[k] = static_cast<double>(counts[k]) / total;
    model.means[k].assign(n, 0.0);
    model.variances[k].assign(n, 0.0);
  }
  for (std::size_t s = 0; s < samples.size(); ++s) {
    auto& mean = model.means[class_index(labels[s])];
    for (std::size_t i = 0; i < n; ++i) mean[i] += samples[s][i];
  }
  for (std::size_t k = 0; k < kClassCount; ++k) {
    for (double& m : model.means[k]) m /= static_cast<double>(counts[k]);
  }
  // Second pass around the mean keeps the variance free of cancellation.
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const std::size_t k = class_index(labels[s]);
    for (std::size_t i = 0; i < n; ++i) {
      const double d = samples[s][i] - model.means[k][i];
      model.variances[k][i] += d * d;
    }
  }
  for (std::size_t k = 0; k < kClassCount; ++k) {
    for (double& v : model.variances[k]) {
      v = std::max(v / static_cast<double>(counts[k]), kVarianceFloor);
    }
  }
  return model;
}

/// ln p(C_k) + sum_i ln N(x_i; mean_ki, var_ki). The evidence term is never
/// formed; only the argmax matters.
inline ClassScores log_posterior(const NaiveBayesModel& model, const std::vector<double>& x) {
  const std::size_t n = model.feature_count();
  if (x.size() != n) {
    throw Error(ErrorCode::LengthMismatch, "descriptor has " + std::to_string(x.size()) +
                                               " features, model expects " + std::to_string(n));
  }
  constexpr double kLogTwoPi = 1.8378770664093454835606594728112;  // ln(2*pi)
  ClassScores scores{};
  for (std::size_t k = 0; k < kClassCount; ++k) {
    const auto& mean = model.means[k];
    const auto& var = model.variances[k];
    double score = std::log(model.priors[k]);
    for (std::size_t i = 0; i < n; ++i) {
      const double d = x[i] - mean[i];
      score += -0.5 * (kLogTwoPi + std::log(var[i])) - d * d / (2.0 * var[i]);
    }
    scores[k] = score;
  }
  return scores;
}

/// Ties go to class 1 so the localization stage sees every borderline window.
inline ClassLabel classify(const ClassScores& scores) {
  return scores[0] >= scores[1] ? ClassLabel::Hyperbola : ClassLabel::NotHyperbola;
}

inline ClassLabel classify(const NaiveBayesModel& model, const std::vector<double>& x) {
  return classify(log_posterior(model, x));
}

// ---------------------------------------------------------------------------
// Model file:
//   nbayes v1 n=<n>
//   priors <p1> <p2>
//   mean <n values>   (class 1)
//   var <n values>    (class 1)
//   mean <n values>   (class 2)
//   var <n values>    (class 2)

inline std::string encode_model(const NaiveBayesModel& model) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "nbayes v1 n=" << model.feature_count() << "\n";
  out << "priors " << model.priors[0] << " " << model.priors[1] << "\n";
  for (std::size_t k = 0; k < kClassCount; ++k) {
    out << "mean";
    for (double m : model.means[k]) out << " " << m;
    out << "\nvar";
    for (double v : model.variances[k]) out << " " << v;
    out << "\n";
  }
  return out.str();
}

inline void save_model(const NaiveBayesModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  out << encode_model(model);
  out.flush();
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

inline NaiveBayesModel decode_model(const std::string& text, const std::string& source = "model") {
  auto fail = [&](const std::string& why) -> NaiveBayesModel {
    throw Error(ErrorCode::MalformedModelFile, source + ": " + why);
  };
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) return fail("empty file");
  std::size_t n = 0;
  {
    std::istringstream header(line);
    std::string magic, version, count;
    header >> magic >> version >> count;
    if (magic != "nbayes" || version != "v1" || count.rfind("n=", 0) != 0) {
      return fail("bad header '" + line + "'");
    }
    try {
      std::size_t used = 0;
      n = std::stoul(count.substr(2), &used);
      if (used != count.size() - 2 || n == 0) return fail("bad feature count");
    } catch (const std::exception&) {
      return fail("bad feature count");
    }
  }

  auto read_row = [&](const std::string& tag) {
    std::string row;
    if (!std::getline(in, row)) fail("missing '" + tag + "' line");
    std::istringstream fields(row);
    std::string got;
    fields >> got;
    if (got != tag) fail("expected '" + tag + "' line, got '" + got + "'");
    std::vector<double> values;
    std::string token;
    while (fields >> token) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(token, &used));
        if (used != token.size()) fail("bad number '" + token + "'");
      } catch (const std::invalid_argument&) {
        fail("bad number '" + token + "'");
      } catch (const std::out_of_range&) {
        fail("number out of range '" + token + "'");
      }
    }
    return values;
  };

  NaiveBayesModel model;
  const auto priors = read_row("priors");
  if (priors.size() != kClassCount) fail("expected 2 priors");
  for (std::size_t k = 0; k < kClassCount; ++k) {
    if (!(priors[k] > 0.0)) fail("priors must be positive");
    model.priors[k] = priors[k];
  }
  if (std::abs(priors[0] + priors[1] - 1.0) > 1e-9) fail("priors do not sum to 1");
  for (std::size_t k = 0; k < kClassCount; ++k) {
    model.means[k] = read_row("mean");
    model.variances[k] = read_row("var");
    if (model.means[k].size() != n || model.variances[k].size() != n) {
      fail("class " + std::to_string(k + 1) + " rows do not have n=" + std::to_string(n) +
           " values");
    }
    for (double v : model.variances[k]) {
      if (!(v >= kVarianceFloor)) fail("variance below floor 1e-6");
    }
  }
  return model;
}

inline NaiveBayesModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return decode_model(text.str(), path.string());
}

}  // namespace gprscan
