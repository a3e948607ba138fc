#pragma once

#include <cstdint>
#include <vector>

#include "curilqr/arm.hpp"
#include "curilqr/cost.hpp"
#include "curilqr/gp.hpp"
#include "curilqr/solver.hpp"

namespace curilqr {

enum class ExplorationKind { curious, normal, random };

// The three exploration arms: curiosity (risk-seeking solve, sigma < 0),
// plain iLQR, and plain iLQR with Gaussian torque noise at execution time.
struct ExplorationMode {
  ExplorationKind kind = ExplorationKind::curious;
  double sigma = -0.05;    // curious only, must be < 0
  double noise_std = 0.0;  // random only, N m

  static ExplorationMode curious(double sigma = -0.05);
  static ExplorationMode normal();
  static ExplorationMode random_torques(double noise_std);

  // sigma the solver actually runs with under this mode.
  double solver_sigma() const {
    return kind == ExplorationKind::curious ? sigma : 0.0;
  }
  void validate() const;  // throws InvalidInput
};

struct IterationRecord {
  int iteration = 0;
  double final_ee_distance = 0.0;  // m, executed final state vs target
  double rollout_cost = 0.0;       // total_cost of the executed trajectory
  double model_rmse = 0.0;         // rad/s^2, on the rollout before appending
  int dataset_size = 0;            // after appending
  bool solver_converged = false;
  double wall_time = 0.0;          // s, fit + solve + rollout
};

struct ExperimentResult {
  std::vector<IterationRecord> records;
  FeedbackPolicy final_policy;
  GpModel final_model;
  TransitionDataset dataset;
  std::uint64_t seed = 0;
};

struct SystemRollout {
  TransitionDataset transitions;
  std::vector<State> states;     // length T+1
  std::vector<Action> controls;  // executed (clamped) torques
};

struct MbrlOptions {
  double babble_duration = 0.5;     // s
  double babble_torque_std = 0.005;  // N m
  bool cold_start = false;  // true: fresh random controls every iteration
  GpFitOptions fit;
};

// Execute the policy on the true simulator: u_t = tau_t + K_t (x_t - x*_t),
// plus exploration noise in random mode, torques clamped by the simulator.
SystemRollout rollout_on_system(const ArmParams& sim,
                                const FeedbackPolicy& policy,
                                const ExplorationMode& mode,
                                std::uint64_t seed);

// Babble, then iterate fit -> solve -> rollout -> append. Episodic: every
// rollout restarts from the rest state. The mode decides the solver's sigma.
ExperimentResult run_experiment(const ArmParams& sim, const ReachingCost& cost,
                                const SolverConfig& cfg,
                                const ExplorationMode& mode, int n_iterations,
                                std::uint64_t seed,
                                const MbrlOptions& opts = {},
                                std::vector<SolveTrace>* traces = nullptr);

// Plain-iLQR solves against a frozen model for unseen targets; one execution
// per target on the simulator. Returns final EE distances in target order; a
// target whose execution diverges numerically scores infinity.
std::vector<double> evaluate_transfer(
    const GpModel& model, const ArmParams& sim,
    const std::vector<Eigen::VectorXd>& new_targets,
    const ReachingCost& base_cost, SolverConfig cfg, std::uint64_t seed);

// Euclidean end-effector distance between theta and the cost target.
double ee_distance(const ArmParams& sim, const Eigen::VectorXd& theta,
                   const Eigen::VectorXd& target_theta);

}  // namespace curilqr
