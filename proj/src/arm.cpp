#include "curilqr/arm.hpp"

#include <cmath>
#include <sstream>

#include "curilqr/errors.hpp"
#include "curilqr/rng.hpp"

namespace curilqr {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw InvalidInput(msg);
}

// Absolute link angles phi_i = theta_0 + ... + theta_i.
Eigen::VectorXd absolute_angles(const Eigen::VectorXd& theta) {
  Eigen::VectorXd phi(theta.size());
  double acc = 0.0;
  for (int i = 0; i < theta.size(); ++i) {
    acc += theta[i];
    phi[i] = acc;
  }
  return phi;
}

// Position of the COM of link i and of each joint, plus the translational
// Jacobian rows. joint_pos has n+1 columns; column i is the proximal joint of
// link i and column n is the end effector.
struct Kinematics {
  Eigen::Matrix2Xd joint_pos;             // 2 x (n+1)
  std::vector<Eigen::Matrix2Xd> com_jac;  // per link, 2 x n
  Eigen::Matrix2Xd com_pos;               // 2 x n
};

Kinematics com_kinematics(const ArmParams& arm, const Eigen::VectorXd& theta) {
  const int n = arm.n_links;
  Eigen::VectorXd phi = absolute_angles(theta);
  Eigen::VectorXd c(n), s(n);
  for (int i = 0; i < n; ++i) {
    c[i] = std::cos(phi[i]);
    s[i] = std::sin(phi[i]);
  }

  Kinematics kin;
  kin.joint_pos.resize(2, n + 1);
  kin.com_pos.resize(2, n);
  kin.joint_pos.col(0).setZero();
  for (int i = 0; i < n; ++i) {
    Eigen::Vector2d axis(c[i], s[i]);
    kin.com_pos.col(i) = kin.joint_pos.col(i) + arm.com_offsets[i] * axis;
    kin.joint_pos.col(i + 1) =
        kin.joint_pos.col(i) + arm.link_lengths[i] * axis;
  }

  // d p_com_i / d theta_j: joint j rotates everything distal to it, so the
  // row is the perpendicular of the lever arm from joint j to the COM.
  kin.com_jac.assign(n, Eigen::Matrix2Xd::Zero(2, n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      Eigen::Vector2d r = kin.com_pos.col(i) - kin.joint_pos.col(j);
      kin.com_jac[i](0, j) = -r.y();
      kin.com_jac[i](1, j) = r.x();
    }
  }
  return kin;
}

// dM/dtheta_k, computed analytically from the Jacobian products. Used for the
// Christoffel form of the Coriolis matrix.
std::vector<Eigen::MatrixXd> mass_matrix_partials(
    const ArmParams& arm, const Eigen::VectorXd& theta) {
  const int n = arm.n_links;
  Kinematics kin = com_kinematics(arm, theta);

  // dJ_i/dtheta_k: differentiating the lever arm. The lever from joint j to
  // COM i changes with theta_k iff k <= i and the COM or the joint moves,
  // i.e. d r_ij / d theta_k = J_i(:,k) - djoint_j/dtheta_k, and the joint
  // position derivative is the perpendicular lever from joint k to joint j
  // when k < j.
  std::vector<Eigen::MatrixXd> dM(n, Eigen::MatrixXd::Zero(n, n));
  for (int k = 0; k < n; ++k) {
    std::vector<Eigen::Matrix2Xd> dJ(n, Eigen::Matrix2Xd::Zero(2, n));
    for (int i = k; i < n; ++i) {
      for (int j = 0; j <= i; ++j) {
        Eigen::Vector2d dcom = kin.com_jac[i].col(k);  // k <= i always here
        Eigen::Vector2d djoint = Eigen::Vector2d::Zero();
        if (k < j) {
          Eigen::Vector2d r = kin.joint_pos.col(j) - kin.joint_pos.col(k);
          djoint = Eigen::Vector2d(-r.y(), r.x());
        }
        Eigen::Vector2d dr = dcom - djoint;
        dJ[i](0, j) = -dr.y();
        dJ[i](1, j) = dr.x();
      }
    }
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      acc.noalias() += arm.link_masses[i] *
                       (dJ[i].transpose() * kin.com_jac[i] +
                        kin.com_jac[i].transpose() * dJ[i]);
    }
    dM[k] = acc;
  }
  return dM;
}

}  // namespace

ArmParams ArmParams::default_two_link() {
  ArmParams p;
  p.n_links = 2;
  p.link_lengths = Eigen::Vector2d(0.1, 0.1);
  p.link_masses = Eigen::Vector2d(0.05, 0.05);
  p.com_offsets = Eigen::Vector2d(0.05, 0.05);
  // Uniform rods about their COM: m l^2 / 12.
  p.link_inertias = Eigen::Vector2d(0.05 * 0.01 / 12.0, 0.05 * 0.01 / 12.0);
  p.joint_damping = Eigen::Vector2d(0.01, 0.01);
  p.torque_limits = Eigen::Vector2d(1.0, 1.0);
  p.gravity = 0.0;
  p.dt = 1.0 / 240.0;
  return p;
}

void ArmParams::validate() const {
  require(n_links >= 1, "n_links must be >= 1");
  auto check_vec = [&](const Eigen::VectorXd& v, const char* name,
                       bool strictly_positive) {
    if (v.size() != n_links) {
      std::ostringstream os;
      os << name << " must have " << n_links << " entries, got " << v.size();
      throw InvalidInput(os.str());
    }
    if (!v.allFinite()) throw InvalidInput(std::string(name) + " not finite");
    if (strictly_positive && (v.array() <= 0.0).any())
      throw InvalidInput(std::string(name) + " must be positive");
    if (!strictly_positive && (v.array() < 0.0).any())
      throw InvalidInput(std::string(name) + " must be non-negative");
  };
  check_vec(link_lengths, "link_lengths", true);
  check_vec(link_masses, "link_masses", true);
  check_vec(link_inertias, "link_inertias", true);
  check_vec(com_offsets, "com_offsets", true);
  check_vec(joint_damping, "joint_damping", false);
  check_vec(torque_limits, "torque_limits", true);
  for (int i = 0; i < n_links; ++i) {
    require(com_offsets[i] <= link_lengths[i],
            "com_offsets must not exceed link_lengths");
  }
  require(std::isfinite(gravity), "gravity not finite");
  require(std::isfinite(dt) && dt > 0.0, "dt must be positive");
}

State State::zero(int n_links) {
  return State(Eigen::VectorXd::Zero(n_links), Eigen::VectorXd::Zero(n_links));
}

State State::from_vector(const Eigen::VectorXd& x) {
  if (x.size() % 2 != 0) throw InvalidInput("state vector length must be even");
  const int n = static_cast<int>(x.size()) / 2;
  return State(x.head(n), x.tail(n));
}

Eigen::VectorXd State::to_vector() const {
  Eigen::VectorXd x(2 * theta.size());
  x << theta, theta_dot;
  return x;
}

Eigen::MatrixXd mass_matrix(const ArmParams& arm,
                            const Eigen::VectorXd& theta) {
  require(theta.size() == arm.n_links, "theta size mismatch");
  require(theta.allFinite(), "theta not finite");
  const int n = arm.n_links;
  Kinematics kin = com_kinematics(arm, theta);
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    M.noalias() +=
        arm.link_masses[i] * kin.com_jac[i].transpose() * kin.com_jac[i];
    // Planar rotation: J_omega for link i is 1 for joints 0..i, 0 after.
    M.topLeftCorner(i + 1, i + 1).array() += arm.link_inertias[i];
  }
  return M;
}

Eigen::VectorXd coriolis_torque(const ArmParams& arm, const State& s) {
  require(s.theta.size() == arm.n_links, "theta size mismatch");
  require(s.theta_dot.size() == arm.n_links, "theta_dot size mismatch");
  const int n = arm.n_links;
  std::vector<Eigen::MatrixXd> dM = mass_matrix_partials(arm, s.theta);
  // C_ij = sum_k c_ijk qd_k with Christoffel symbols of the first kind.
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        C(i, j) += 0.5 * (dM[k](i, j) + dM[j](i, k) - dM[i](j, k)) *
                   s.theta_dot[k];
  return C * s.theta_dot;
}

Eigen::VectorXd gravity_torque(const ArmParams& arm,
                               const Eigen::VectorXd& theta) {
  require(theta.size() == arm.n_links, "theta size mismatch");
  const int n = arm.n_links;
  if (arm.gravity == 0.0) return Eigen::VectorXd::Zero(n);
  Kinematics kin = com_kinematics(arm, theta);
  // Potential V = sum_i m_i g y_i, torque = dV/dtheta = sum_i m_i g Jy_i.
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i)
    g += arm.link_masses[i] * arm.gravity * kin.com_jac[i].row(1).transpose();
  return g;
}

Action clamp_torque(const ArmParams& arm, const Action& tau) {
  require(tau.size() == arm.n_links, "tau size mismatch");
  if (!tau.allFinite()) throw NumericalError("torque not finite");
  return tau.cwiseMax(-arm.torque_limits).cwiseMin(arm.torque_limits);
}

Eigen::VectorXd dynamics(const ArmParams& arm, const State& s,
                         const Action& tau) {
  Action u = clamp_torque(arm, tau);
  Eigen::MatrixXd M = mass_matrix(arm, s.theta);
  Eigen::VectorXd rhs = u - coriolis_torque(arm, s) -
                        gravity_torque(arm, s.theta) -
                        arm.joint_damping.cwiseProduct(s.theta_dot);
  Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (llt.info() != Eigen::Success)
    throw NumericalError("mass matrix is not positive definite");
  return llt.solve(rhs);
}

State step(const ArmParams& arm, const State& s, const Action& tau) {
  Eigen::VectorXd a = dynamics(arm, s, tau);
  State next;
  next.theta_dot = s.theta_dot + arm.dt * a;
  next.theta = s.theta + arm.dt * next.theta_dot;
  return next;
}

Eigen::Vector2d forward_kinematics(const ArmParams& arm,
                                   const Eigen::VectorXd& theta) {
  require(theta.size() == arm.n_links, "theta size mismatch");
  Eigen::VectorXd phi = absolute_angles(theta);
  Eigen::Vector2d p = Eigen::Vector2d::Zero();
  for (int i = 0; i < arm.n_links; ++i)
    p += arm.link_lengths[i] *
         Eigen::Vector2d(std::cos(phi[i]), std::sin(phi[i]));
  return p;
}

double total_energy(const ArmParams& arm, const State& s) {
  Eigen::MatrixXd M = mass_matrix(arm, s.theta);
  double kinetic = 0.5 * s.theta_dot.dot(M * s.theta_dot);
  double potential = 0.0;
  if (arm.gravity != 0.0) {
    Kinematics kin = com_kinematics(arm, s.theta);
    for (int i = 0; i < arm.n_links; ++i)
      potential += arm.link_masses[i] * arm.gravity * kin.com_pos(1, i);
  }
  return kinetic + potential;
}

TransitionDataset motor_babble(const ArmParams& arm, const State& s0,
                               double duration, double torque_std,
                               std::uint64_t seed) {
  arm.validate();
  require(duration > 0.0, "duration must be positive");
  require(torque_std >= 0.0, "torque_std must be non-negative");
  const int steps = static_cast<int>(std::round(duration / arm.dt));
  require(steps >= 1, "duration shorter than one step");

  Rng rng(seed);
  TransitionDataset data;
  data.n_links = arm.n_links;
  data.inputs.resize(steps, 3 * arm.n_links);
  data.targets.resize(steps, arm.n_links);

  State s = s0;
  for (int t = 0; t < steps; ++t) {
    Action tau(arm.n_links);
    for (int j = 0; j < arm.n_links; ++j) tau[j] = rng.gaussian(0.0, torque_std);
    tau = clamp_torque(arm, tau);
    State next = step(arm, s, tau);
    data.inputs.row(t) << s.theta.transpose(), s.theta_dot.transpose(),
        tau.transpose();
    data.targets.row(t) =
        ((next.theta_dot - s.theta_dot) / arm.dt).transpose();
    s = next;
  }
  return data;
}

}  // namespace curilqr
