// gprscan: rebar detection in GPR B-scans.
//
//   gprscan simulate <scene> <out_dir> [--count N]
//   gprscan train <dir> <model_out>
//   gprscan detect <images_dir> <model> <out_dir>
//   gprscan evaluate <picks_dir> <truth_dir> <metrics_csv>
//   gprscan condition-map <picks_dir> <manifest> <out_prefix>
//   gprscan pipeline
//
// Exit codes: 0 ok, 1 partial failure or threshold miss, 2 invalid input, 3 I/O.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "gprscan/commands.hpp"

namespace {

using namespace gprscan;
namespace cli = gprscan::cli;

struct GlobalFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  bool no_clahe = false;
  bool no_final_nms = false;
};

RunConfig resolve_config(const GlobalFlags& flags) {
  RunConfig config = flags.config_path.empty() ? RunConfig{} : load_config(flags.config_path);
  if (flags.seed) config.seed = *flags.seed;
  if (flags.jobs) config.jobs = *flags.jobs;
  if (flags.no_clahe) config.detect.use_clahe = false;
  if (flags.no_final_nms) config.detect.final_nms = false;
  config.validate();
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rebar detection in ground-penetrating-radar B-scans"};
  app.require_subcommand(1);

  GlobalFlags flags;
  app.add_option("--config", flags.config_path, "key=value configuration file");
  app.add_option("--seed", flags.seed, "base seed (simulate, pipeline)");
  app.add_option("--jobs", flags.jobs, "parallel images in detect");
  app.add_flag("--no-clahe", flags.no_clahe, "skip contrast enhancement");
  app.add_flag("--no-final-nms", flags.no_final_nms, "keep picks closer than min_pick_separation");

  std::string a, b, c;
  int count = 1;

  auto* simulate = app.add_subcommand("simulate", "render synthetic scans with ground truth");
  simulate->add_option("scene", a, "scene file")->required();
  simulate->add_option("out_dir", b, "output directory")->required();
  simulate->add_option("--count", count, "number of scenes");

  auto* train_cmd = app.add_subcommand("train", "train the hyperbola classifier");
  train_cmd->add_option("dir", a, "directory of .pgm scans with truth CSVs")->required();
  train_cmd->add_option("model_out", b, "model file to write")->required();

  auto* detect = app.add_subcommand("detect", "detect rebar in every .pgm of a directory");
  detect->add_option("images_dir", a)->required();
  detect->add_option("model", b)->required();
  detect->add_option("out_dir", c)->required();

  auto* evaluate = app.add_subcommand("evaluate", "score pick CSVs against truth");
  evaluate->add_option("picks_dir", a)->required();
  evaluate->add_option("truth_dir", b)->required();
  evaluate->add_option("metrics_csv", c)->required();

  auto* cmap = app.add_subcommand("condition-map", "attenuation condition map from picks");
  cmap->add_option("picks_dir", a)->required();
  cmap->add_option("manifest", b)->required();
  cmap->add_option("out_prefix", c)->required();

  auto* pipeline = app.add_subcommand("pipeline", "simulate, train, detect, evaluate and map");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : cli::kInvalidInput;
  }

  try {
    const RunConfig config = resolve_config(flags);
    if (simulate->parsed()) {
      const SceneFile scene = load_scene(a);
      return cli::cmd_simulate(scene, b, count, flags.seed ? *flags.seed : scene.base.seed,
                               std::cout);
    }
    if (train_cmd->parsed()) return cli::cmd_train(a, b, config, std::cout);
    if (detect->parsed()) {
      return cli::cmd_detect(a, load_model(b), c, config, std::cout, std::cerr);
    }
    if (evaluate->parsed()) return cli::cmd_evaluate(a, b, c, config, std::cout);
    if (cmap->parsed()) return cli::cmd_condition_map(a, b, c, config, std::cout);
    if (pipeline->parsed()) return cli::cmd_pipeline(config, std::cout, std::cerr);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::exit_code_for(e);
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kIoError;
  }
  return cli::kInvalidInput;
}
