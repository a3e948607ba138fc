#pragma once

#include <Eigen/Dense>

#include "curilqr/arm.hpp"

namespace curilqr {

// Quadratic reaching cost in joint space. The terminal step reuses the state
// weights scaled by terminal_scale and carries no control term.
struct ReachingCost {
  Eigen::VectorXd target_theta;  // rad
  double q_pos = 5.0;            // 1 / rad^2
  double q_vel = 0.1;            // s^2 / rad^2
  double r_ctrl = 1e-7;          // 1 / (N m)^2
  double terminal_scale = 10.0;

  void validate(int n_links) const;  // throws InvalidInput
};

// Exact Taylor coefficients of the cost around (s, a). The cost is quadratic,
// so the expansion has zero remainder.
struct CostExpansion {
  double q0 = 0.0;
  Eigen::VectorXd q_x;   // d cost / d x
  Eigen::MatrixXd Q_xx;  // d^2 cost / d x^2
  Eigen::VectorXd r_u;   // d cost / d u
  Eigen::MatrixXd R_uu;  // d^2 cost / d u^2
  Eigen::MatrixXd P_xu;  // d^2 cost / d x d u
};

double stage_cost(const ReachingCost& c, const State& s, const Action& a);

double terminal_cost(const ReachingCost& c, const State& s);

CostExpansion expand(const ReachingCost& c, const State& s, const Action& a,
                     bool is_terminal);

}  // namespace curilqr
