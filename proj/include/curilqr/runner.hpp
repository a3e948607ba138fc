#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "curilqr/config.hpp"

namespace curilqr {

inline constexpr const char* kCodeVersion = "0.1.0";

// Runs n_seeds experiments per mode and writes, under cfg.output_dir:
//   <mode>/metrics_seed<k>.csv   per-iteration metrics (deterministic bytes)
//   <mode>/timing_seed<k>.csv    wall-clock sidecar (not deterministic)
//   <mode>/trace_seed<k>.csv     solver trace records
//   <mode>/dataset_seed<k>.csv   final transition dataset
//   <mode>/model_seed<k>         final GP model
//   aggregate.csv                median/quartiles per mode and iteration
//   manifest                     JSON snapshot sufficient to reproduce
// Seeds are seed_base..seed_base+n_seeds-1, shared across modes. `progress`
// may be null.
void run_experiments(const ExperimentConfig& cfg,
                     const std::vector<ExplorationKind>& modes,
                     std::ostream* progress);

// Loads each model file, solves for every target with sigma = 0, executes on
// the simulator, and writes <output_dir>/transfer.csv plus a manifest.
void run_transfer(const ExperimentConfig& cfg,
                  const std::vector<std::string>& model_paths,
                  const std::string& targets_path, std::ostream* progress);

// Writes the babble dataset each run-experiment seed would start from:
// <output_dir>/dataset_seed<k>.csv plus a manifest.
void run_babble_only(const ExperimentConfig& cfg, std::ostream* progress);

// Joint-config targets file: CSV with header theta_0..theta_{n-1}.
std::vector<Eigen::VectorXd> load_targets_csv(const std::string& path,
                                              int n_links);
void save_targets_csv(const std::string& path,
                      const std::vector<Eigen::VectorXd>& targets);

}  // namespace curilqr
