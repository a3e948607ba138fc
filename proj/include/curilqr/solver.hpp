#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "curilqr/arm.hpp"
#include "curilqr/cost.hpp"
#include "curilqr/gp.hpp"

namespace curilqr {

// Local model of one step: delta_x' = A delta_x + B delta_u + C w, with w
// drawn from N(0, Sigma_next). C stays an explicit field so alternative
// noise factorizations remain one-line changes; here it is the identity and
// Sigma_next is the integrated state-space covariance.
struct LinearizedStep {
  Eigen::MatrixXd A;           // 2n x 2n
  Eigen::MatrixXd B;           // 2n x n
  Eigen::MatrixXd C;           // 2n x 2n
  Eigen::MatrixXd Sigma_next;  // 2n x 2n, symmetric PSD
};

// Quadratic value function 0.5 dx' S dx + s_vec' dx + s0.
struct ValueExpansion {
  Eigen::MatrixXd S;
  Eigen::VectorXd s_vec;
  double s0 = 0.0;
};

struct SolverConfig {
  double sigma = -0.05;  // < 0 seeks model uncertainty, 0 is plain iLQR
  int horizon = 150;
  double dt = 1.0 / 240.0;
  int max_outer_iters = 50;
  std::vector<double> line_search_alphas = {1.0, 0.5, 0.25, 0.1, 0.05, 0.01};
  double lambda_init = 1.0;
  double lambda_scale = 10.0;
  double lambda_max = 1000.0;
  double convergence_tol = 1e-4;
  double init_torque_std = 0.01;  // N m, for random initial control sequences
  double velocity_bound = 100.0;  // rad/s, rollout divergence guard

  void validate() const;  // throws InvalidInput
};

// Time-varying affine policy u_t = nominal_controls[t] + k[t] (consumed
// during the solve) + K[t] (x - nominal_states[t]) around the final nominal.
struct FeedbackPolicy {
  std::vector<State> nominal_states;    // length T+1
  std::vector<Action> nominal_controls;  // length T
  std::vector<Eigen::VectorXd> k;       // length T
  std::vector<Eigen::MatrixXd> K;       // length T
  bool converged = false;
  double final_cost = 0.0;
};

struct BackwardPassResult {
  bool ok = false;       // false: (H + lambda I) not PD, caller raises lambda
  int failed_step = -1;  // step where the factorization failed
  std::vector<Eigen::VectorXd> k;
  std::vector<Eigen::MatrixXd> K;
  std::vector<ValueExpansion> value;  // length T+1
  // Unregularized control Hessians, length T; diagnostic for how the
  // uncertainty terms harden or soften the gain solve. Entries at and after
  // failed_step are filled even when ok is false.
  std::vector<Eigen::MatrixXd> control_hessian;
  double expected_improvement = 0.0;  // -sum_t g_t . k_t
};

struct ForwardPassResult {
  std::vector<State> states;
  std::vector<Action> controls;
  bool diverged = false;
};

// One line per outer iteration attempt, consumed by the experiment CLI.
struct SolveTraceEntry {
  int outer_iter = 0;
  double lambda = 0.0;
  double alpha = 0.0;  // accepted step size, 0 when nothing was accepted
  double cost = 0.0;   // best cost after the iteration
  double expected_improvement = 0.0;
  bool accepted = false;
};

struct SolveTrace {
  std::vector<SolveTraceEntry> entries;
  bool initial_rollout_diverged = false;
};

std::vector<LinearizedStep> linearize_trajectory(
    const GpModel& model, const std::vector<State>& nominal_states,
    const std::vector<Action>& nominal_controls, double dt);

// Risk-sensitive Riccati sweep. costs has length T+1 (terminal last) and
// initializes S_T = Q_T, s_T = q_T. lambda regularizes the gain solve only;
// the value recursion uses the unregularized H.
BackwardPassResult backward_pass(const std::vector<LinearizedStep>& steps,
                                 const std::vector<CostExpansion>& costs,
                                 double sigma, double lambda);

// Re-simulate through the model with u = u_nom + alpha k + K (x - x_nom).
ForwardPassResult forward_pass(const GpModel& model,
                               const std::vector<State>& nominal_states,
                               const std::vector<Action>& nominal_controls,
                               const std::vector<Eigen::VectorXd>& k,
                               const std::vector<Eigen::MatrixXd>& K,
                               double alpha, double dt,
                               double velocity_bound = 100.0);

double total_cost(const ReachingCost& cost, const std::vector<State>& states,
                  const std::vector<Action>& controls);

// Zero-mean Gaussian torque sequence for cold starts.
std::vector<Action> random_init_controls(int horizon, int n_links, double std,
                                         std::uint64_t seed);

FeedbackPolicy solve(const GpModel& model, const ReachingCost& cost,
                     const State& s0, const std::vector<Action>& init_controls,
                     const SolverConfig& cfg, SolveTrace* trace = nullptr);

}  // namespace curilqr
