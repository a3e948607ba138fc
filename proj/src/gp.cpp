#include "curilqr/gp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "curilqr/errors.hpp"
#include "curilqr/rng.hpp"

namespace curilqr {

namespace {

constexpr double kMaxJitter = 1e-4;

std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// K_ij = sf2 * exp(-0.5 * sum_d (z_i - z_j)_d^2 / l_d^2), computed from
// scaled inputs with the norm trick; tiny negative squared distances from
// cancellation are clamped.
Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& Z, double sf2,
                              const Eigen::VectorXd& ls) {
  Eigen::MatrixXd Zs = Z.array().rowwise() / ls.transpose().array();
  Eigen::VectorXd sq = Zs.rowwise().squaredNorm();
  Eigen::MatrixXd D2 =
      (sq.replicate(1, Z.rows()) + sq.transpose().replicate(Z.rows(), 1) -
       2.0 * Zs * Zs.transpose())
          .cwiseMax(0.0);
  return sf2 * (-0.5 * D2.array()).exp().matrix();
}

}  // namespace

GpHyperparams GpHyperparams::ones(int n_out, int n_in) {
  GpHyperparams h;
  h.signal_variance = Eigen::VectorXd::Ones(n_out);
  h.length_scales = Eigen::MatrixXd::Ones(n_out, n_in);
  h.noise_variance = Eigen::VectorXd::Constant(n_out, 0.1);
  return h;
}

void GpHyperparams::validate(int n_in) const {
  const int n_out = static_cast<int>(signal_variance.size());
  if (n_out < 1) throw InvalidInput("hyperparams have no output dims");
  if (length_scales.rows() != n_out || length_scales.cols() != n_in)
    throw InvalidInput("length_scales shape mismatch");
  if (noise_variance.size() != n_out)
    throw InvalidInput("noise_variance size mismatch");
  if (!(signal_variance.array() > 0.0).all() ||
      !(length_scales.array() > 0.0).all() ||
      !(noise_variance.array() > 0.0).all())
    throw InvalidInput("hyperparameters must be strictly positive");
  if (!signal_variance.allFinite() || !length_scales.allFinite() ||
      !noise_variance.allFinite())
    throw InvalidInput("hyperparameters must be finite");
  if (!(jitter >= 1e-10)) throw InvalidInput("jitter must be >= 1e-10");
}

GpModel GpModel::fit(const TransitionDataset& data,
                     const GpHyperparams& hypers) {
  if (data.empty()) throw InvalidInput("cannot fit GP on empty dataset");
  hypers.validate(data.input_dim());
  if (hypers.signal_variance.size() != data.n_links)
    throw InvalidInput("hyperparams output dims != dataset n_links");

  GpModel m;
  m.inputs_ = data.inputs;
  m.targets_ = data.targets;
  m.hypers_ = hypers;
  const int n_out = data.n_links;
  m.chol_.resize(n_out);
  m.alpha_.resize(n_out);
  m.effective_jitter_.resize(n_out);

  for (int d = 0; d < n_out; ++d) {
    Eigen::MatrixXd K =
        kernel_matrix(m.inputs_, hypers.signal_variance[d],
                      hypers.length_scales.row(d).transpose());
    double jit = hypers.jitter;
    for (;;) {
      Eigen::MatrixXd Ky = K;
      Ky.diagonal().array() += hypers.noise_variance[d] + jit;
      Eigen::LLT<Eigen::MatrixXd> llt(Ky);
      if (llt.info() == Eigen::Success) {
        m.chol_[d] = llt.matrixL();
        m.alpha_[d] = llt.solve(m.targets_.col(d));
        m.effective_jitter_[d] = jit;
        break;
      }
      jit *= 10.0;
      if (jit > kMaxJitter)
        throw NumericalError(
            "GP Cholesky failed for output dim " + std::to_string(d) +
            " after jitter escalation to " + std::to_string(kMaxJitter));
    }
  }
  return m;
}

void GpModel::check_fitted() const {
  if (!fitted()) throw StateError("GP model is not fitted");
}

Eigen::VectorXd GpModel::kernel_vector(int dim,
                                       const Eigen::VectorXd& z) const {
  const Eigen::VectorXd ls = hypers_.length_scales.row(dim).transpose();
  Eigen::MatrixXd diff = inputs_.rowwise() - z.transpose();
  Eigen::ArrayXd d2 =
      (diff.array().rowwise() / ls.transpose().array()).square().rowwise().sum();
  return hypers_.signal_variance[dim] * (-0.5 * d2).exp().matrix();
}

GaussianPrediction GpModel::predict_input(const Eigen::VectorXd& z) const {
  check_fitted();
  if (z.size() != input_dim()) throw InvalidInput("query dimension mismatch");
  const int n_out = output_dim();
  GaussianPrediction p;
  p.mean_accel.resize(n_out);
  p.accel_variance.resize(n_out);
  for (int d = 0; d < n_out; ++d) {
    Eigen::VectorXd ks = kernel_vector(d, z);
    p.mean_accel[d] = ks.dot(alpha_[d]);
    Eigen::VectorXd v =
        chol_[d].triangularView<Eigen::Lower>().solve(ks);
    p.accel_variance[d] =
        std::max(0.0, hypers_.signal_variance[d] - v.squaredNorm());
  }
  return p;
}

GaussianPrediction GpModel::predict(const State& s, const Action& a) const {
  check_fitted();
  if (s.theta.size() != n_links() || s.theta_dot.size() != n_links() ||
      a.size() != n_links())
    throw InvalidInput("predict: dimension mismatch");
  Eigen::VectorXd z(input_dim());
  z << s.theta, s.theta_dot, a;
  return predict_input(z);
}

Eigen::VectorXd GpModel::predict_mean(const Eigen::VectorXd& z) const {
  check_fitted();
  if (z.size() != input_dim()) throw InvalidInput("query dimension mismatch");
  const int n_out = output_dim();
  Eigen::VectorXd mean(n_out);
  for (int d = 0; d < n_out; ++d) mean[d] = kernel_vector(d, z).dot(alpha_[d]);
  return mean;
}

void GpModel::predict_full(const Eigen::VectorXd& z, Eigen::VectorXd& mean,
                           Eigen::VectorXd& variance,
                           Eigen::MatrixXd& dmean_dz) const {
  check_fitted();
  if (z.size() != input_dim()) throw InvalidInput("query dimension mismatch");
  const int n_out = output_dim();
  const int n_in = input_dim();
  mean.resize(n_out);
  variance.resize(n_out);
  dmean_dz.resize(n_out, n_in);
  Eigen::MatrixXd diff = inputs_.rowwise() - z.transpose();  // z_i - z
  for (int d = 0; d < n_out; ++d) {
    const Eigen::VectorXd ls = hypers_.length_scales.row(d).transpose();
    Eigen::ArrayXd d2 = (diff.array().rowwise() / ls.transpose().array())
                            .square()
                            .rowwise()
                            .sum();
    Eigen::VectorXd ks =
        hypers_.signal_variance[d] * (-0.5 * d2).exp().matrix();
    mean[d] = ks.dot(alpha_[d]);
    Eigen::VectorXd w = ks.cwiseProduct(alpha_[d]);
    dmean_dz.row(d) =
        ((diff.transpose() * w).array() / ls.array().square()).transpose();
    Eigen::VectorXd v = chol_[d].triangularView<Eigen::Lower>().solve(ks);
    variance[d] =
        std::max(0.0, hypers_.signal_variance[d] - v.squaredNorm());
  }
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> GpModel::predict_gradients(
    const State& s, const Action& a) const {
  check_fitted();
  if (s.theta.size() != n_links() || s.theta_dot.size() != n_links() ||
      a.size() != n_links())
    throw InvalidInput("predict_gradients: dimension mismatch");
  Eigen::VectorXd z(input_dim());
  z << s.theta, s.theta_dot, a;

  const int n_out = output_dim();
  const int n = n_links();
  Eigen::MatrixXd dmean_dz(n_out, input_dim());
  Eigen::MatrixXd diff = inputs_.rowwise() - z.transpose();
  for (int d = 0; d < n_out; ++d) {
    Eigen::VectorXd ks = kernel_vector(d, z);
    Eigen::VectorXd w = ks.cwiseProduct(alpha_[d]);
    const Eigen::VectorXd ls = hypers_.length_scales.row(d).transpose();
    dmean_dz.row(d) =
        ((diff.transpose() * w).array() / ls.array().square()).transpose();
  }
  return {dmean_dz.leftCols(2 * n), dmean_dz.rightCols(n)};
}

StateDistribution integrate(const GaussianPrediction& pred, const State& s,
                            double dt) {
  if (!(dt > 0.0)) throw InvalidInput("dt must be positive");
  if (pred.mean_accel.size() != s.theta.size())
    throw InvalidInput("integrate: dimension mismatch");
  const int n = static_cast<int>(s.theta.size());

  StateDistribution out;
  out.mean_state.theta_dot = s.theta_dot + dt * pred.mean_accel;
  out.mean_state.theta = s.theta + dt * out.mean_state.theta_dot;

  // State = [theta; theta_dot]; the Jacobian of the chain w.r.t. the
  // acceleration is [dt^2 I; dt I].
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  Eigen::VectorXd v = pred.accel_variance;
  cov.topLeftCorner(n, n) = (dt * dt * dt * dt) * v.asDiagonal();
  cov.topRightCorner(n, n) = (dt * dt * dt) * v.asDiagonal();
  cov.bottomLeftCorner(n, n) = (dt * dt * dt) * v.asDiagonal();
  cov.bottomRightCorner(n, n) = (dt * dt) * v.asDiagonal();
  out.covariance = cov;
  return out;
}

MeanRollout rollout_mean(const GpModel& model, const State& s0,
                         const std::vector<Action>& controls, double dt,
                         double velocity_bound) {
  if (!model.fitted()) throw StateError("GP model is not fitted");
  MeanRollout r;
  r.states.reserve(controls.size() + 1);
  r.states.push_back(s0);
  const int n = model.n_links();
  Eigen::VectorXd z(model.input_dim());
  State s = s0;
  for (const Action& u : controls) {
    if (u.size() != n) throw InvalidInput("rollout control dimension mismatch");
    z << s.theta, s.theta_dot, u;
    Eigen::VectorXd a = model.predict_mean(z);
    State next;
    next.theta_dot = s.theta_dot + dt * a;
    next.theta = s.theta + dt * next.theta_dot;
    if (next.theta_dot.cwiseAbs().maxCoeff() > velocity_bound ||
        !next.theta.allFinite() || !next.theta_dot.allFinite()) {
      r.diverged = true;
      return r;
    }
    r.states.push_back(next);
    s = next;
  }
  return r;
}

double prediction_error(const GpModel& model, const TransitionDataset& data) {
  if (data.empty()) throw InvalidInput("prediction_error on empty dataset");
  if (data.input_dim() != model.input_dim() ||
      data.n_links != model.output_dim())
    throw InvalidInput("prediction_error: dataset does not match model");
  double sq = 0.0;
  for (int r = 0; r < data.size(); ++r) {
    Eigen::VectorXd m = model.predict_mean(data.inputs.row(r).transpose());
    sq += (m - data.targets.row(r).transpose()).squaredNorm();
  }
  return std::sqrt(sq / (static_cast<double>(data.size()) * data.n_links));
}

void GpModel::save(const std::string& path) const {
  check_fitted();
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot open " + path + " for writing");
  out << "curilqr-gp 1\n";
  out << "n_points " << n_points() << "\n";
  out << "input_dim " << input_dim() << "\n";
  out << "output_dim " << output_dim() << "\n";
  out << "jitter " << format_value(hypers_.jitter) << "\n";
  out << "effective_jitter";
  for (int d = 0; d < output_dim(); ++d)
    out << " " << format_value(effective_jitter_[d]);
  out << "\n";
  for (int d = 0; d < output_dim(); ++d) {
    out << "hypers " << d << " " << format_value(hypers_.signal_variance[d])
        << " " << format_value(hypers_.noise_variance[d]);
    for (int c = 0; c < input_dim(); ++c)
      out << " " << format_value(hypers_.length_scales(d, c));
    out << "\n";
  }
  out << "inputs\n";
  for (int r = 0; r < n_points(); ++r) {
    for (int c = 0; c < input_dim(); ++c)
      out << format_value(inputs_(r, c)) << (c + 1 < input_dim() ? " " : "\n");
  }
  out << "targets\n";
  for (int r = 0; r < n_points(); ++r) {
    for (int c = 0; c < output_dim(); ++c)
      out << format_value(targets_(r, c)) << (c + 1 < output_dim() ? " " : "\n");
  }
  out << "end\n";
  if (!out) throw InvalidInput("failed writing " + path);
}

GpModel GpModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path);
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "curilqr-gp" || version != 1)
    throw InvalidInput(path + ": not a curilqr-gp v1 model file");

  auto expect = [&](const char* key) {
    std::string word;
    in >> word;
    if (word != key)
      throw InvalidInput(path + ": expected '" + key + "', got '" + word + "'");
  };

  int n = 0, n_in = 0, n_out = 0;
  expect("n_points");
  in >> n;
  expect("input_dim");
  in >> n_in;
  expect("output_dim");
  in >> n_out;
  if (!in || n < 1 || n_in < 1 || n_out < 1 || n_in != 3 * n_out)
    throw InvalidInput(path + ": bad dimensions");

  GpHyperparams h;
  expect("jitter");
  in >> h.jitter;
  Eigen::VectorXd eff_jitter(n_out);
  expect("effective_jitter");
  for (int d = 0; d < n_out; ++d) in >> eff_jitter[d];

  h.signal_variance.resize(n_out);
  h.noise_variance.resize(n_out);
  h.length_scales.resize(n_out, n_in);
  for (int d = 0; d < n_out; ++d) {
    expect("hypers");
    int idx = -1;
    in >> idx;
    if (idx != d) throw InvalidInput(path + ": hypers lines out of order");
    in >> h.signal_variance[d] >> h.noise_variance[d];
    for (int c = 0; c < n_in; ++c) in >> h.length_scales(d, c);
  }

  TransitionDataset data;
  data.n_links = n_out;
  data.inputs.resize(n, n_in);
  data.targets.resize(n, n_out);
  expect("inputs");
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n_in; ++c) in >> data.inputs(r, c);
  expect("targets");
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n_out; ++c) in >> data.targets(r, c);
  expect("end");
  if (!in) throw InvalidInput(path + ": truncated model file");

  // Re-condition starting from the stored per-dim jitter so the factors match
  // the saved model exactly.
  GpModel m = fit(data, h);
  for (int d = 0; d < n_out; ++d) {
    if (eff_jitter[d] > m.effective_jitter_[d]) {
      GpHyperparams h2 = h;
      h2.jitter = eff_jitter[d];
      GpModel m2 = fit(data, h2);
      m.chol_[d] = m2.chol_[d];
      m.alpha_[d] = m2.alpha_[d];
      m.effective_jitter_[d] = m2.effective_jitter_[d];
    }
  }
  return m;
}

}  // namespace curilqr
