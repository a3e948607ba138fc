#include "curilqr/cost.hpp"

#include <cmath>

#include "curilqr/errors.hpp"

namespace curilqr {

void ReachingCost::validate(int n_links) const {
  if (target_theta.size() != n_links)
    throw InvalidInput("target_theta must have one entry per link");
  if (!target_theta.allFinite()) throw InvalidInput("target_theta not finite");
  if (!(q_pos >= 0.0) || !(q_vel >= 0.0) || !(terminal_scale >= 0.0))
    throw InvalidInput("cost weights must be non-negative");
  if (!(r_ctrl > 0.0)) throw InvalidInput("r_ctrl must be positive");
}

namespace {

void check_dims(const ReachingCost& c, const State& s, const Action* a) {
  if (s.theta.size() != c.target_theta.size() ||
      s.theta_dot.size() != c.target_theta.size())
    throw InvalidInput("state dimension does not match cost target");
  if (a && a->size() != c.target_theta.size())
    throw InvalidInput("action dimension does not match cost target");
}

}  // namespace

double stage_cost(const ReachingCost& c, const State& s, const Action& a) {
  check_dims(c, s, &a);
  return 0.5 * c.q_pos * (s.theta - c.target_theta).squaredNorm() +
         0.5 * c.q_vel * s.theta_dot.squaredNorm() +
         0.5 * c.r_ctrl * a.squaredNorm();
}

double terminal_cost(const ReachingCost& c, const State& s) {
  check_dims(c, s, nullptr);
  return c.terminal_scale *
         (0.5 * c.q_pos * (s.theta - c.target_theta).squaredNorm() +
          0.5 * c.q_vel * s.theta_dot.squaredNorm());
}

CostExpansion expand(const ReachingCost& c, const State& s, const Action& a,
                     bool is_terminal) {
  check_dims(c, s, &a);
  const int n = static_cast<int>(c.target_theta.size());
  const double scale = is_terminal ? c.terminal_scale : 1.0;

  CostExpansion e;
  e.Q_xx = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  e.Q_xx.topLeftCorner(n, n) =
      scale * c.q_pos * Eigen::MatrixXd::Identity(n, n);
  e.Q_xx.bottomRightCorner(n, n) =
      scale * c.q_vel * Eigen::MatrixXd::Identity(n, n);

  e.q_x.resize(2 * n);
  e.q_x.head(n) = scale * c.q_pos * (s.theta - c.target_theta);
  e.q_x.tail(n) = scale * c.q_vel * s.theta_dot;

  if (is_terminal) {
    e.r_u = Eigen::VectorXd::Zero(n);
    e.R_uu = Eigen::MatrixXd::Zero(n, n);
    e.q0 = terminal_cost(c, s);
  } else {
    e.r_u = c.r_ctrl * a;
    e.R_uu = c.r_ctrl * Eigen::MatrixXd::Identity(n, n);
    e.q0 = stage_cost(c, s, a);
  }
  e.P_xu = Eigen::MatrixXd::Zero(2 * n, n);
  return e;
}

}  // namespace curilqr
