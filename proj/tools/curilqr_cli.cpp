#include <exception>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "curilqr/config.hpp"
#include "curilqr/runner.hpp"

namespace {

curilqr::ExperimentConfig load_config(const std::string& config_path,
                                      int seeds_override,
                                      const std::string& out_override,
                                      int workers_override) {
  curilqr::ExperimentConfig cfg =
      config_path.empty() ? curilqr::ExperimentConfig()
                          : curilqr::ExperimentConfig::parse_file(config_path);
  if (seeds_override > 0) cfg.n_seeds = seeds_override;
  if (!out_override.empty()) cfg.output_dir = out_override;
  if (workers_override > 0) cfg.workers = workers_override;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Model-based reaching experiments with a curious iLQR solver"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_override;
  int seeds_override = 0;
  int workers_override = 0;
  app.add_option("--config", config_path, "Experiment config file");
  app.add_option("--seeds", seeds_override, "Override number of seeds");
  app.add_option("--out", out_override, "Override output directory");
  app.add_option("--workers", workers_override, "Override worker count");

  CLI::App* run = app.add_subcommand("run", "Run the learning experiments");
  std::string modes_arg;
  run->add_option("--modes", modes_arg,
                  "Comma-separated mode sweep (curious,normal,random); "
                  "defaults to the config's mode");

  CLI::App* transfer = app.add_subcommand(
      "transfer", "Re-plan to new targets against frozen models");
  std::vector<std::string> model_paths;
  std::string targets_path;
  transfer->add_option("--model", model_paths, "Model file(s)")->required();
  transfer->add_option("--targets", targets_path, "Targets CSV file")
      ->required();

  app.add_subcommand("validate-config",
                     "Parse the config and print its canonical form");
  app.add_subcommand("babble-only", "Write babble datasets and exit");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("validate-config")) {
      curilqr::ExperimentConfig cfg = load_config(
          config_path, seeds_override, out_override, workers_override);
      std::cout << cfg.serialize();
      return 0;
    }
    curilqr::ExperimentConfig cfg = load_config(
        config_path, seeds_override, out_override, workers_override);
    if (app.got_subcommand("run")) {
      std::vector<curilqr::ExplorationKind> modes;
      if (modes_arg.empty()) {
        modes.push_back(cfg.mode.kind);
      } else {
        std::stringstream ss(modes_arg);
        std::string item;
        while (std::getline(ss, item, ','))
          modes.push_back(curilqr::mode_from_name(item));
      }
      curilqr::run_experiments(cfg, modes, &std::cout);
    } else if (app.got_subcommand("transfer")) {
      curilqr::run_transfer(cfg, model_paths, targets_path, &std::cout);
    } else if (app.got_subcommand("babble-only")) {
      curilqr::run_babble_only(cfg, &std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
