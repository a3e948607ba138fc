#pragma once

#include <string>

#include "curilqr/arm.hpp"
#include "curilqr/cost.hpp"
#include "curilqr/gp.hpp"
#include "curilqr/mbrl.hpp"
#include "curilqr/solver.hpp"

namespace curilqr {

// Flat key = value experiment configuration. Every field has a default, so
// an empty file parses to the stock 2-link setup. Unknown keys are errors.
struct ExperimentConfig {
  ArmParams arm = ArmParams::default_two_link();
  ReachingCost cost;
  SolverConfig solver;
  ExplorationMode mode = ExplorationMode::curious(-0.05);
  GpFitOptions fit;

  int n_iterations = 5;
  int n_seeds = 10;
  std::uint64_t seed_base = 0;
  std::string output_dir = "out";
  double babble_duration = 0.5;
  double babble_torque_std = 0.005;
  bool cold_start = false;
  int workers = 1;

  ExperimentConfig();

  MbrlOptions mbrl_options() const;

  static ExperimentConfig parse_file(const std::string& path);
  static ExperimentConfig parse_string(const std::string& text);
  std::string serialize() const;
  void validate() const;  // throws InvalidInput
};

std::string mode_name(ExplorationKind kind);
ExplorationKind mode_from_name(const std::string& name);

}  // namespace curilqr
