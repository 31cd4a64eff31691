#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "gprscan/config.hpp"
#include "gprscan/detector.hpp"
#include "gprscan/error.hpp"
#include "gprscan/evaluator.hpp"
#include "gprscan/hog.hpp"
#include "gprscan/io.hpp"
#include "gprscan/naive_bayes.hpp"
#include "gprscan/preprocess.hpp"
#include "gprscan/simulator.hpp"

// Subcommands of the gprscan tool. Each returns a process exit code and
// writes its summary to `out`, diagnostics to `err`.
namespace gprscan::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kPartial = 1, kInvalidInput = 2, kIoError = 3 };

inline int exit_code_for(const Error& e) {
  return e.code() == ErrorCode::IoFailure ? kIoError : kInvalidInput;
}

namespace detail {

inline std::string scene_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%03d", index);
  return buf;
}

inline std::vector<fs::path> sorted_files(const fs::path& dir, const std::string& prefix,
                                          const std::string& extension) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw Error(ErrorCode::IoFailure, dir.string() + " is not a directory");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (entry.path().extension() == extension && name.rfind(prefix, 0) == 0) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

inline void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
}

// Truth file for an image id: <id>.csv, or truth_<n>.csv for scan_<n>.
inline std::optional<fs::path> find_truth(const fs::path& truth_dir, const std::string& image_id) {
  const fs::path direct = truth_dir / (image_id + ".csv");
  if (fs::exists(direct)) return direct;
  if (image_id.rfind("scan_", 0) == 0) {
    const fs::path sim = truth_dir / ("truth_" + image_id.substr(5) + ".csv");
    if (fs::exists(sim)) return sim;
  }
  return std::nullopt;
}

inline PickSet load_truth_for(const fs::path& file, const std::string& image_id) {
  PickSet truth = parse_picks(gprscan::detail::read_lines(file), image_id, file.string());
  truth.image_id = image_id;
  return truth;
}

// Runs `task(i)` for i in [0, n) on up to `jobs` threads.
inline void parallel_for(int n, int jobs, const std::function<void(int)>& task) {
  jobs = std::clamp(jobs, 1, std::max(n, 1));
  if (jobs == 1) {
    for (int i = 0; i < n; ++i) task(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> workers;
  for (int t = 0; t < jobs; ++t) {
    workers.emplace_back([&] {
      for (int i = next++; i < n; i = next++) task(i);
    });
  }
  for (auto& w : workers) w.join();
}

}  // namespace detail

/// Renders `count` scenes with seeds base_seed + i into scan_<i>.pgm and
/// truth_<i>.csv.
inline int cmd_simulate(const SceneFile& scene, const fs::path& out_dir, int count,
                        std::uint64_t base_seed, std::ostream& out) {
  if (count < 1) throw Error(ErrorCode::InvalidConfig, "count=" + std::to_string(count) + ": must be >= 1");
  detail::ensure_dir(out_dir);
  for (int i = 0; i < count; ++i) {
    const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(i);
    RenderedScene rendered = render_bscan(scene.scene(seed));
    const std::string name = detail::scene_name(i);
    rendered.truth.image_id = "scan_" + name;
    const fs::path image_path = out_dir / ("scan_" + name + ".pgm");
    const fs::path truth_path = out_dir / ("truth_" + name + ".csv");
    save_bscan(rendered.image, image_path);
    save_picks(rendered.truth, truth_path);
    out << image_path.filename().string() << " seed=" << seed
        << " rebar=" << rendered.truth.size() << "\n";
  }
  return kOk;
}

/// Samples labeled windows (304:1800 balance by default) from every .pgm
/// with truth in the same directory and trains the classifier.
inline NaiveBayesModel train_from_directory(const fs::path& dir, const RunConfig& config,
                                            std::ostream& out) {
  const auto images = detail::sorted_files(dir, "", ".pgm");
  if (images.empty()) {
    throw Error(ErrorCode::ClassMissing, "no .pgm training images in " + dir.string());
  }
  const int n = static_cast<int>(images.size());
  std::vector<HogDescriptor> samples;
  std::vector<ClassLabel> labels;
  for (int i = 0; i < n; ++i) {
    const fs::path& path = images[static_cast<std::size_t>(i)];
    const std::string id = path.stem().string();
    const auto truth_file = detail::find_truth(dir, id);
    if (!truth_file) {
      throw Error(ErrorCode::InvalidSpec, "no truth CSV for training image " + path.string());
    }
    const PickSet truth = detail::load_truth_for(*truth_file, id);
    const BScanImage raw = load_bscan(path);
    const BScanImage image =
        config.detect.use_clahe ? apply_clahe(raw, config.detect.clahe) : raw;
    // Totals are split across images; the first images take the remainder.
    const int n_pos = config.n_pos / n + (i < config.n_pos % n ? 1 : 0);
    const int n_neg = config.n_neg / n + (i < config.n_neg % n ? 1 : 0);
    const auto windows = sample_training_windows(image, truth, n_pos, n_neg,
                                                 config.train_seed + static_cast<std::uint64_t>(i));
    for (const auto& w : windows) {
      samples.push_back(extract_hog(w.pixels));
      labels.push_back(w.label);
    }
  }
  const NaiveBayesModel model = train(samples, labels);
  const auto positives = std::count(labels.begin(), labels.end(), ClassLabel::Hyperbola);
  out << "images=" << n << " class1=" << positives
      << " class2=" << static_cast<long long>(labels.size()) - positives
      << " prior1=" << gprscan::detail::format_double(model.priors[0])
      << " prior2=" << gprscan::detail::format_double(model.priors[1]) << "\n";
  return model;
}

inline int cmd_train(const fs::path& dir, const fs::path& model_out, const RunConfig& config,
                     std::ostream& out) {
  const NaiveBayesModel model = train_from_directory(dir, config, out);
  if (model_out.has_parent_path()) detail::ensure_dir(model_out.parent_path());
  save_model(model, model_out);
  out << "model written to " << model_out.string() << "\n";
  return kOk;
}

struct DetectOutcome {
  std::string image_id;
  bool ok = false;
  std::string error;
  PickSet picks;
  double ms = 0.0;
};

/// Detects rebar in every .pgm of `images_dir` in sorted name order. Per
/// image: picks_<id>.csv and annotated_<id>.ppm; timing.csv collects
/// `image_id,ms`. Failed images are logged and skipped (exit 1).
inline int cmd_detect(const fs::path& images_dir, const NaiveBayesModel& model,
                      const fs::path& out_dir, const RunConfig& config, std::ostream& out,
                      std::ostream& err) {
  const auto images = detail::sorted_files(images_dir, "", ".pgm");
  detail::ensure_dir(out_dir);
  std::vector<DetectOutcome> outcomes(images.size());
  detail::parallel_for(static_cast<int>(images.size()), config.jobs, [&](int i) {
    const fs::path& path = images[static_cast<std::size_t>(i)];
    DetectOutcome& o = outcomes[static_cast<std::size_t>(i)];
    o.image_id = path.stem().string();
    try {
      const BScanImage image = load_bscan(path);
      const auto t0 = std::chrono::steady_clock::now();
      o.picks = detect_rebar(image, model, config.detect, o.image_id);
      o.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      save_picks(o.picks, out_dir / ("picks_" + o.image_id + ".csv"));
      save_rgb(annotate_picks(image, o.picks), out_dir / ("annotated_" + o.image_id + ".ppm"));
      o.ok = true;
    } catch (const Error& e) {
      o.error = e.what();
    }
  });

  std::string timing = "image_id,ms\n";
  int failed = 0;
  for (const auto& o : outcomes) {
    if (!o.ok) {
      ++failed;
      err << o.image_id << ": " << o.error << "\n";
      continue;
    }
    char ms[32];
    std::snprintf(ms, sizeof(ms), "%.1f", o.ms);
    timing += o.image_id + "," + ms + "\n";
    out << o.image_id << " picks=" << o.picks.size() << " ms=" << ms << "\n";
  }
  gprscan::detail::write_all(out_dir / "timing.csv", timing);
  return failed > 0 ? kPartial : kOk;
}

struct EvaluationTotals {
  long long total = 0;
  long long tp = 0;
  long long fp = 0;
  Metrics metrics;
};

inline std::string metrics_row(const std::string& id, long long total, long long tp, long long fp) {
  const Metrics m = compute_metrics(tp, fp, total);
  return id + "," + std::to_string(total) + "," + std::to_string(tp) + "," + std::to_string(fp) +
         "," + std::to_string(total - tp) + "," + format_percent(m.accuracy) + "," +
         format_percent(m.precision);
}

inline constexpr const char* kMetricsHeader = "image_id,total,tp,fp,fn,accuracy_pct,precision_pct";

/// Scores every picks_*.csv in `picks_dir` against its truth file and
/// writes per-image rows plus a TOTAL row.
inline EvaluationTotals evaluate_directory(const fs::path& picks_dir, const fs::path& truth_dir,
                                           const fs::path& metrics_out,
                                           const MatchTolerance& tolerance, std::ostream& out) {
  const auto files = detail::sorted_files(picks_dir, "picks_", ".csv");
  std::string csv = std::string(kMetricsHeader) + "\n";
  EvaluationTotals totals;
  for (const auto& file : files) {
    const std::string fallback = file.stem().string().substr(6);
    const PickSet picks = parse_picks(gprscan::detail::read_lines(file), fallback, file.string());
    const auto truth_file = detail::find_truth(truth_dir, picks.image_id);
    if (!truth_file) {
      throw Error(ErrorCode::InvalidSpec, "no truth file for " + file.string() + " (looked for " +
                                              (truth_dir / (picks.image_id + ".csv")).string() + ")");
    }
    const PickSet truth = detail::load_truth_for(*truth_file, picks.image_id);
    const MatchResult m = match_picks(picks, truth, tolerance);
    const long long total = static_cast<long long>(truth.size());
    csv += metrics_row(picks.image_id, total, m.true_positives, m.false_positives) + "\n";
    totals.total += total;
    totals.tp += m.true_positives;
    totals.fp += m.false_positives;
  }
  const std::string total_row = metrics_row("TOTAL", totals.total, totals.tp, totals.fp);
  csv += total_row + "\n";
  totals.metrics = compute_metrics(totals.tp, totals.fp, totals.total);
  if (metrics_out.has_parent_path()) detail::ensure_dir(metrics_out.parent_path());
  gprscan::detail::write_all(metrics_out, csv);
  out << kMetricsHeader << "\n" << total_row << "\n";
  return totals;
}

inline int cmd_evaluate(const fs::path& picks_dir, const fs::path& truth_dir,
                        const fs::path& metrics_out, const RunConfig& config, std::ostream& out) {
  evaluate_directory(picks_dir, truth_dir, metrics_out, config.tolerance, out);
  return kOk;
}

/// Writes <out_prefix>.csv and <out_prefix>.ppm and prints per-level cell counts.
inline int cmd_condition_map(const fs::path& picks_dir, const fs::path& manifest_path,
                             const fs::path& out_prefix, const RunConfig& config,
                             std::ostream& out) {
  const ScanManifest manifest = load_manifest(manifest_path);
  std::vector<PickSet> sets;
  for (const auto& file : detail::sorted_files(picks_dir, "picks_", ".csv")) {
    sets.push_back(
        parse_picks(gprscan::detail::read_lines(file), file.stem().string().substr(6), file.string()));
  }
  const ConditionMap map = build_condition_map(sets, manifest, config.cell_m, config.thresholds);
  if (out_prefix.has_parent_path()) detail::ensure_dir(out_prefix.parent_path());
  gprscan::detail::write_all(fs::path(out_prefix.string() + ".csv"), encode_condition_map(map));
  save_rgb(render_condition_map(map, config.cell_px), fs::path(out_prefix.string() + ".ppm"));

  std::array<int, 4> levels{};
  int no_data = 0;
  for (const auto& cell : map.cells) {
    if (cell.level) ++levels[static_cast<std::size_t>(*cell.level)];
    else ++no_data;
  }
  out << "level0=" << levels[0] << " level1=" << levels[1] << " level2=" << levels[2]
      << " level3=" << levels[3] << " nodata=" << no_data << "\n";
  return kOk;
}

/// simulate -> train -> detect -> evaluate -> map under `config.work_dir`.
/// Training scenes use seeds train_seed_base + i, test scenes seed + i.
inline int cmd_pipeline(const RunConfig& config, std::ostream& out, std::ostream& err) {
  if (config.scene.empty()) {
    throw Error(ErrorCode::InvalidConfig, "scene=<path> is required for the pipeline");
  }
  const SceneFile scene = load_scene(config.scene);
  const fs::path root = config.work_dir;
  const fs::path train_dir = root / "train";
  const fs::path test_dir = root / "test";
  const fs::path detect_dir = root / "detect";

  out << "[simulate]\n";
  cmd_simulate(scene, train_dir, config.train_scenes, config.train_seed_base, out);
  cmd_simulate(scene, test_dir, config.test_scenes, config.seed, out);

  out << "[train]\n";
  cmd_train(train_dir, root / "model.txt", config, out);
  const NaiveBayesModel model = load_model(root / "model.txt");

  out << "[detect]\n";
  const int detect_status = cmd_detect(test_dir, model, detect_dir, config, out, err);
  if (detect_status != kOk) return detect_status;

  out << "[evaluate]\n";
  const EvaluationTotals totals =
      evaluate_directory(detect_dir, test_dir, root / "metrics.csv", config.tolerance, out);

  out << "[map]\n";
  ScanManifest manifest;
  for (int i = 0; i < config.test_scenes; ++i) {
    manifest.entries.push_back({"scan_" + detail::scene_name(i), i, 0.0, config.pixels_per_meter});
  }
  save_manifest(manifest, root / "manifest.csv");
  cmd_condition_map(detect_dir, root / "manifest.csv", root / "condition_map", config, out);

  const std::string acc = format_percent(totals.metrics.accuracy);
  const std::string prec = format_percent(totals.metrics.precision);
  out << "accuracy=" << acc << " precision=" << prec << "\n";
  const bool pass = totals.metrics.accuracy * 100.0 >= config.min_accuracy - 1e-9 &&
                    totals.metrics.precision * 100.0 >= config.min_precision - 1e-9;
  return pass ? kOk : kPartial;
}

}  // namespace gprscan::cli
