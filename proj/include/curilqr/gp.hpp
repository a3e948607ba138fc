#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "curilqr/arm.hpp"
#include "curilqr/dataset.hpp"

namespace curilqr {

// ARD squared-exponential hyperparameters, one independent set per output
// dimension: k(z, z') = sf2 * exp(-0.5 * sum_d (z_d - z'_d)^2 / l_d^2).
struct GpHyperparams {
  Eigen::VectorXd signal_variance;  // sf2 per output dim, (rad/s^2)^2
  Eigen::MatrixXd length_scales;    // n_out x n_in
  Eigen::VectorXd noise_variance;   // sn2 per output dim, (rad/s^2)^2
  double jitter = 1e-8;             // additive diagonal term

  static GpHyperparams ones(int n_out, int n_in);
  void validate(int n_in) const;  // throws InvalidInput
};

// Predicted joint accelerations. The per-dimension GPs are independent, so
// the covariance is diagonal and stored as its diagonal.
struct GaussianPrediction {
  Eigen::VectorXd mean_accel;      // rad/s^2
  Eigen::VectorXd accel_variance;  // (rad/s^2)^2, entrywise >= 0

  Eigen::MatrixXd accel_covariance() const {
    return Eigen::MatrixXd(accel_variance.asDiagonal());
  }
};

// Gaussian over the next state [theta; theta_dot].
struct StateDistribution {
  State mean_state;
  Eigen::MatrixXd covariance;  // 2n x 2n, symmetric PSD
};

// Controls for marginal-likelihood hyperparameter search. The ascent runs on
// a seeded subset of the data when the set is large (subset_cap); the final
// model always conditions on every row.
struct GpFitOptions {
  int restarts = 3;
  int max_iters = 60;
  double bound_lo = 1e-3;  // hyperparameter box, applied in log space
  double bound_hi = 1e3;
  int subset_cap = 320;  // 0 disables subsetting
  double grad_tol = 0.5;
  std::optional<GpHyperparams> warm_start;
};

// One exact GP per output dimension over inputs z = [theta, theta_dot, tau].
class GpModel {
 public:
  GpModel() = default;

  // Condition on data with fixed hyperparameters. Cholesky failures escalate
  // the jitter by x10 up to 1e-4 before giving up.
  static GpModel fit(const TransitionDataset& data,
                     const GpHyperparams& hypers);

  // Maximize the log marginal likelihood per output dimension (multi-start
  // sign-based gradient ascent in log space), then condition on all rows.
  static GpModel fit_optimized(const TransitionDataset& data,
                               std::uint64_t seed,
                               const GpFitOptions& opts = {});

  bool fitted() const { return inputs_.rows() > 0; }

  GaussianPrediction predict(const State& s, const Action& a) const;
  GaussianPrediction predict_input(const Eigen::VectorXd& z) const;

  // Gradients of the predictive mean, split into state and action blocks:
  // (d mean / d [theta; theta_dot], d mean / d tau).
  std::pair<Eigen::MatrixXd, Eigen::MatrixXd> predict_gradients(
      const State& s, const Action& a) const;

  // Mean only, skipping the variance solve. Used on hot paths.
  Eigen::VectorXd predict_mean(const Eigen::VectorXd& z) const;

  // Mean, variance, and d mean / d z in one pass over the kernel vector.
  void predict_full(const Eigen::VectorXd& z, Eigen::VectorXd& mean,
                    Eigen::VectorXd& variance, Eigen::MatrixXd& dmean_dz) const;

  const GpHyperparams& hyperparams() const { return hypers_; }
  const Eigen::MatrixXd& training_inputs() const { return inputs_; }
  const Eigen::MatrixXd& training_targets() const { return targets_; }
  const Eigen::VectorXd& alpha(int dim) const { return alpha_[dim]; }
  int input_dim() const { return static_cast<int>(inputs_.cols()); }
  int output_dim() const { return static_cast<int>(targets_.cols()); }
  int n_links() const { return output_dim(); }
  int n_points() const { return static_cast<int>(inputs_.rows()); }
  const Eigen::VectorXd& effective_jitter() const { return effective_jitter_; }

  void save(const std::string& path) const;
  static GpModel load(const std::string& path);

 private:
  void check_fitted() const;
  Eigen::VectorXd kernel_vector(int dim, const Eigen::VectorXd& z) const;

  Eigen::MatrixXd inputs_;   // n x n_in
  Eigen::MatrixXd targets_;  // n x n_out
  GpHyperparams hypers_;
  std::vector<Eigen::MatrixXd> chol_;  // per dim, lower triangular L
  std::vector<Eigen::VectorXd> alpha_;
  Eigen::VectorXd effective_jitter_;  // per dim, after escalation
};

// Euler chain: theta_dot' = theta_dot + a*dt, theta' = theta + theta_dot'*dt.
// The covariance is pushed through the same (linear) map.
StateDistribution integrate(const GaussianPrediction& pred, const State& s,
                            double dt);

struct MeanRollout {
  std::vector<State> states;  // length T+1 when not diverged
  bool diverged = false;
};

// Propagate the predictive mean through the controls. Stops early and flags
// divergence when any |theta_dot| exceeds velocity_bound.
MeanRollout rollout_mean(const GpModel& model, const State& s0,
                         const std::vector<Action>& controls, double dt,
                         double velocity_bound = 100.0);

// Pooled RMSE of the mean prediction over all rows and output dims.
double prediction_error(const GpModel& model, const TransitionDataset& data);

}  // namespace curilqr
