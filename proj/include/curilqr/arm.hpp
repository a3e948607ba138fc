#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "curilqr/dataset.hpp"

namespace curilqr {

// Planar n-link arm, revolute joints, gravity along -y. Joint angles are
// relative: theta_i is measured against link i-1, theta_0 against the +x
// axis.
struct ArmParams {
  int n_links = 2;
  Eigen::VectorXd link_lengths;   // m
  Eigen::VectorXd link_masses;    // kg
  Eigen::VectorXd link_inertias;  // kg m^2 about each link's COM
  Eigen::VectorXd com_offsets;    // m from the proximal joint along the link
  Eigen::VectorXd joint_damping;  // N m s / rad, viscous, per joint
  Eigen::VectorXd torque_limits;  // N m, symmetric bound, per joint
  double gravity = 0.0;           // m / s^2 (9.81 pulls along -y)
  double dt = 1.0 / 240.0;        // s

  // Two 0.1 m / 0.05 kg uniform rods, no gravity, light damping, 1 N m limit.
  static ArmParams default_two_link();

  void validate() const;  // throws InvalidInput
};

struct State {
  Eigen::VectorXd theta;      // rad
  Eigen::VectorXd theta_dot;  // rad / s

  State() = default;
  State(Eigen::VectorXd q, Eigen::VectorXd qd)
      : theta(std::move(q)), theta_dot(std::move(qd)) {}

  static State zero(int n_links);
  static State from_vector(const Eigen::VectorXd& x);
  Eigen::VectorXd to_vector() const;  // [theta; theta_dot]
  int n_links() const { return static_cast<int>(theta.size()); }
};

// Joint torques, one per link.
using Action = Eigen::VectorXd;

// Joint-space inertia matrix M(theta), symmetric positive definite.
Eigen::MatrixXd mass_matrix(const ArmParams& arm, const Eigen::VectorXd& theta);

// Coriolis/centrifugal torques C(theta, theta_dot) * theta_dot.
Eigen::VectorXd coriolis_torque(const ArmParams& arm, const State& s);

// Gravity torques g(theta).
Eigen::VectorXd gravity_torque(const ArmParams& arm,
                               const Eigen::VectorXd& theta);

// Joint accelerations from the manipulator equation, with tau clamped to the
// torque limits and viscous damping applied.
Eigen::VectorXd dynamics(const ArmParams& arm, const State& s,
                         const Action& tau);

// One semi-implicit Euler step: the velocity update uses the acceleration at
// the current state, the position update uses the new velocity.
State step(const ArmParams& arm, const State& s, const Action& tau);

// End-effector position in the base frame.
Eigen::Vector2d forward_kinematics(const ArmParams& arm,
                                   const Eigen::VectorXd& theta);

// Per-joint clamp of tau to [-limit, +limit]. Rejects non-finite torques.
Action clamp_torque(const ArmParams& arm, const Action& tau);

// Total mechanical energy (kinetic + gravitational potential); the potential
// is zero when every link lies along +x.
double total_energy(const ArmParams& arm, const State& s);

// Drive the arm with i.i.d. Gaussian torques for `duration` seconds starting
// from s0 and record every transition. Used to seed the model.
TransitionDataset motor_babble(const ArmParams& arm, const State& s0,
                               double duration, double torque_std,
                               std::uint64_t seed);

}  // namespace curilqr
