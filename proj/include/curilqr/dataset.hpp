#pragma once

#include <Eigen/Dense>
#include <string>

namespace curilqr {

// One-step transition data for model learning. Each row pairs a model input
// z = [theta, theta_dot, tau] with the joint accelerations that produced the
// next state, i.e. (theta_dot' - theta_dot) / dt under the integrator.
struct TransitionDataset {
  int n_links = 0;
  Eigen::MatrixXd inputs;   // size x 3*n_links
  Eigen::MatrixXd targets;  // size x n_links

  int size() const { return static_cast<int>(inputs.rows()); }
  bool empty() const { return size() == 0; }
  int input_dim() const { return 3 * n_links; }

  void append_row(const Eigen::VectorXd& z, const Eigen::VectorXd& y);
  void append(const TransitionDataset& other);

  void save_csv(const std::string& path) const;
  static TransitionDataset load_csv(const std::string& path);
};

}  // namespace curilqr
