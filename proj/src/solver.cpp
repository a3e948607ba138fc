#include "curilqr/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "curilqr/errors.hpp"
#include "curilqr/rng.hpp"

namespace curilqr {

void SolverConfig::validate() const {
  if (horizon < 1) throw InvalidInput("horizon must be >= 1");
  if (!(dt > 0.0)) throw InvalidInput("dt must be positive");
  if (max_outer_iters < 1) throw InvalidInput("max_outer_iters must be >= 1");
  if (line_search_alphas.empty())
    throw InvalidInput("line_search_alphas must not be empty");
  for (double a : line_search_alphas)
    if (!(a > 0.0) || a > 1.0)
      throw InvalidInput("line search alphas must lie in (0, 1]");
  if (!(lambda_init > 0.0) || !(lambda_scale > 1.0) ||
      !(lambda_max >= lambda_init))
    throw InvalidInput("bad lambda schedule");
  if (!(convergence_tol > 0.0)) throw InvalidInput("bad convergence_tol");
  if (init_torque_std < 0.0) throw InvalidInput("bad init_torque_std");
  if (!(velocity_bound > 0.0)) throw InvalidInput("bad velocity_bound");
  if (!std::isfinite(sigma)) throw InvalidInput("sigma must be finite");
}

std::vector<LinearizedStep> linearize_trajectory(
    const GpModel& model, const std::vector<State>& nominal_states,
    const std::vector<Action>& nominal_controls, double dt) {
  if (!model.fitted()) throw StateError("GP model is not fitted");
  if (nominal_states.size() != nominal_controls.size() + 1)
    throw InvalidInput("nominal trajectory lengths inconsistent");
  const int n = model.n_links();
  const double dt2 = dt * dt;

  std::vector<LinearizedStep> steps(nominal_controls.size());
  Eigen::VectorXd z(model.input_dim());
  Eigen::VectorXd mean, var;
  Eigen::MatrixXd dmean;
  for (size_t t = 0; t < nominal_controls.size(); ++t) {
    z << nominal_states[t].theta, nominal_states[t].theta_dot,
        nominal_controls[t];
    model.predict_full(z, mean, var, dmean);
    // Acceleration Jacobians by input block.
    Eigen::MatrixXd Dq = dmean.leftCols(n);
    Eigen::MatrixXd Dv = dmean.middleCols(n, n);
    Eigen::MatrixXd Du = dmean.rightCols(n);

    // Compose with theta_dot' = theta_dot + a dt, theta' = theta +
    // theta_dot' dt. State is [theta; theta_dot].
    LinearizedStep st;
    st.A.resize(2 * n, 2 * n);
    st.A.topLeftCorner(n, n) =
        Eigen::MatrixXd::Identity(n, n) + dt2 * Dq;
    st.A.topRightCorner(n, n) =
        dt * Eigen::MatrixXd::Identity(n, n) + dt2 * Dv;
    st.A.bottomLeftCorner(n, n) = dt * Dq;
    st.A.bottomRightCorner(n, n) =
        Eigen::MatrixXd::Identity(n, n) + dt * Dv;
    st.B.resize(2 * n, n);
    st.B.topRows(n) = dt2 * Du;
    st.B.bottomRows(n) = dt * Du;
    st.C = Eigen::MatrixXd::Identity(2 * n, 2 * n);

    GaussianPrediction pred;
    pred.mean_accel = mean;
    pred.accel_variance = var;
    st.Sigma_next = integrate(pred, nominal_states[t], dt).covariance;
    steps[t] = std::move(st);
  }
  return steps;
}

BackwardPassResult backward_pass(const std::vector<LinearizedStep>& steps,
                                 const std::vector<CostExpansion>& costs,
                                 double sigma, double lambda) {
  if (costs.size() != steps.size() + 1)
    throw InvalidInput("cost expansions must have length T+1");
  if (steps.empty()) throw InvalidInput("empty horizon");
  if (lambda < 0.0) throw InvalidInput("lambda must be >= 0");
  const int T = static_cast<int>(steps.size());
  const int nx = static_cast<int>(steps[0].A.rows());
  const int nu = static_cast<int>(steps[0].B.cols());

  BackwardPassResult res;
  res.k.assign(T, Eigen::VectorXd::Zero(nu));
  res.K.assign(T, Eigen::MatrixXd::Zero(nu, nx));
  res.control_hessian.assign(T, Eigen::MatrixXd::Zero(nu, nu));
  res.value.resize(T + 1);
  res.value[T].S = 0.5 * (costs[T].Q_xx + costs[T].Q_xx.transpose());
  res.value[T].s_vec = costs[T].q_x;
  res.value[T].s0 = costs[T].q0;
  res.expected_improvement = 0.0;

  const Eigen::MatrixXd reg = lambda * Eigen::MatrixXd::Identity(nu, nu);

  for (int t = T - 1; t >= 0; --t) {
    const LinearizedStep& st = steps[t];
    const CostExpansion& c = costs[t];
    const Eigen::MatrixXd& W = res.value[t + 1].S;
    const Eigen::VectorXd& w = res.value[t + 1].s_vec;

    // M = C Sigma C'; with sigma != 0 the uncertainty enters every term.
    Eigen::MatrixXd M = st.C * st.Sigma_next * st.C.transpose();
    Eigen::MatrixXd WM = W * M;     // S_{t+1} C Sigma C'
    Eigen::MatrixXd WMW = WM * W;

    Eigen::MatrixXd H = c.R_uu + st.B.transpose() * W * st.B +
                        sigma * st.B.transpose() * WMW * st.B;
    H = 0.5 * (H + H.transpose()).eval();
    res.control_hessian[t] = H;
    Eigen::VectorXd g = c.r_u + st.B.transpose() * w +
                        sigma * st.B.transpose() * WM * w;
    Eigen::MatrixXd G = c.P_xu.transpose() + st.B.transpose() * W * st.A +
                        sigma * st.B.transpose() * WMW * st.A;

    Eigen::LLT<Eigen::MatrixXd> llt(H + reg);
    if (llt.info() != Eigen::Success) {
      res.ok = false;
      res.failed_step = t;
      return res;
    }
    Eigen::VectorXd k = -llt.solve(g);
    Eigen::MatrixXd K = -llt.solve(G);

    ValueExpansion& v = res.value[t];
    v.s_vec = c.q_x + st.A.transpose() * w + G.transpose() * k +
              K.transpose() * (H * k) + K.transpose() * g +
              sigma * st.A.transpose() * WM * w;
    Eigen::MatrixXd S = c.Q_xx + st.A.transpose() * W * st.A +
                        K.transpose() * H * K + G.transpose() * K +
                        K.transpose() * G +
                        sigma * st.A.transpose() * WMW * st.A;
    v.S = 0.5 * (S + S.transpose());
    v.s0 = c.q0 + res.value[t + 1].s0 + 0.5 * WM.trace() +
           0.5 * sigma * w.dot(M * w) + g.dot(k) + 0.5 * k.dot(H * k);

    res.expected_improvement -= g.dot(k);
    res.k[t] = std::move(k);
    res.K[t] = std::move(K);
  }
  res.ok = true;
  return res;
}

ForwardPassResult forward_pass(const GpModel& model,
                               const std::vector<State>& nominal_states,
                               const std::vector<Action>& nominal_controls,
                               const std::vector<Eigen::VectorXd>& k,
                               const std::vector<Eigen::MatrixXd>& K,
                               double alpha, double dt,
                               double velocity_bound) {
  if (!model.fitted()) throw StateError("GP model is not fitted");
  const size_t T = nominal_controls.size();
  if (nominal_states.size() != T + 1 || k.size() != T || K.size() != T)
    throw InvalidInput("forward pass inputs have inconsistent lengths");
  if (alpha < 0.0 || alpha > 1.0)
    throw InvalidInput("alpha must lie in [0, 1]");

  ForwardPassResult r;
  r.states.reserve(T + 1);
  r.controls.reserve(T);
  r.states.push_back(nominal_states[0]);
  Eigen::VectorXd z(model.input_dim());
  for (size_t t = 0; t < T; ++t) {
    const State& s = r.states.back();
    Eigen::VectorXd dx = s.to_vector() - nominal_states[t].to_vector();
    Action u = nominal_controls[t] + alpha * k[t] + K[t] * dx;
    z << s.theta, s.theta_dot, u;
    Eigen::VectorXd a = model.predict_mean(z);
    State next;
    next.theta_dot = s.theta_dot + dt * a;
    next.theta = s.theta + dt * next.theta_dot;
    if (!next.theta.allFinite() || !next.theta_dot.allFinite() ||
        next.theta_dot.cwiseAbs().maxCoeff() > velocity_bound) {
      r.diverged = true;
      return r;
    }
    r.controls.push_back(std::move(u));
    r.states.push_back(std::move(next));
  }
  return r;
}

double total_cost(const ReachingCost& cost, const std::vector<State>& states,
                  const std::vector<Action>& controls) {
  if (states.size() != controls.size() + 1)
    throw InvalidInput("trajectory lengths inconsistent");
  double J = 0.0;
  for (size_t t = 0; t < controls.size(); ++t)
    J += stage_cost(cost, states[t], controls[t]);
  return J + terminal_cost(cost, states.back());
}

std::vector<Action> random_init_controls(int horizon, int n_links, double std,
                                         std::uint64_t seed) {
  if (horizon < 1 || n_links < 1) throw InvalidInput("bad dimensions");
  if (std < 0.0) throw InvalidInput("std must be >= 0");
  Rng rng(seed);
  std::vector<Action> u(horizon);
  for (int t = 0; t < horizon; ++t) {
    u[t].resize(n_links);
    for (int j = 0; j < n_links; ++j) u[t][j] = rng.gaussian(0.0, std);
  }
  return u;
}

namespace {

std::vector<CostExpansion> expand_trajectory(
    const ReachingCost& cost, const std::vector<State>& states,
    const std::vector<Action>& controls) {
  std::vector<CostExpansion> c(states.size());
  for (size_t t = 0; t < controls.size(); ++t)
    c[t] = expand(cost, states[t], controls[t], false);
  c.back() = expand(cost, states.back(), Action::Zero(controls[0].size()),
                    true);
  return c;
}

}  // namespace

FeedbackPolicy solve(const GpModel& model, const ReachingCost& cost,
                     const State& s0, const std::vector<Action>& init_controls,
                     const SolverConfig& cfg, SolveTrace* trace) {
  cfg.validate();
  if (!model.fitted()) throw StateError("GP model is not fitted");
  const int n = model.n_links();
  cost.validate(n);
  if (static_cast<int>(init_controls.size()) != cfg.horizon)
    throw InvalidInput("init_controls length must equal horizon");
  if (s0.theta.size() != n || s0.theta_dot.size() != n)
    throw InvalidInput("initial state dimension mismatch");

  const int T = cfg.horizon;
  FeedbackPolicy pol;
  pol.nominal_controls = init_controls;
  pol.k.assign(T, Eigen::VectorXd::Zero(n));
  pol.K.assign(T, Eigen::MatrixXd::Zero(n, 2 * n));

  MeanRollout init = rollout_mean(model, s0, init_controls, cfg.dt,
                                  cfg.velocity_bound);
  if (init.diverged) {
    if (trace) trace->initial_rollout_diverged = true;
    pol.nominal_states.assign(T + 1, s0);
    pol.converged = false;
    pol.final_cost = std::numeric_limits<double>::infinity();
    return pol;
  }
  pol.nominal_states = std::move(init.states);
  double J = total_cost(cost, pol.nominal_states, pol.nominal_controls);

  double lambda = cfg.lambda_init;
  const double lambda_floor = cfg.lambda_init * 1e-3;
  bool converged = false;
  BackwardPassResult bp;

  for (int outer = 0; outer < cfg.max_outer_iters; ++outer) {
    std::vector<LinearizedStep> steps = linearize_trajectory(
        model, pol.nominal_states, pol.nominal_controls, cfg.dt);
    std::vector<CostExpansion> costs =
        expand_trajectory(cost, pol.nominal_states, pol.nominal_controls);

    // Escalate lambda until (H + lambda I) factors at every step.
    for (;;) {
      bp = backward_pass(steps, costs, cfg.sigma, lambda);
      if (bp.ok) break;
      lambda *= cfg.lambda_scale;
      if (lambda > cfg.lambda_max) break;
    }
    if (!bp.ok) break;
    const double lambda_used = lambda;

    bool accepted = false;
    double accepted_alpha = 0.0;
    for (double alpha : cfg.line_search_alphas) {
      ForwardPassResult fp =
          forward_pass(model, pol.nominal_states, pol.nominal_controls, bp.k,
                       bp.K, alpha, cfg.dt, cfg.velocity_bound);
      if (fp.diverged) continue;
      double J_new = total_cost(cost, fp.states, fp.controls);
      if (J_new < J) {
        const double rel_decrease = (J - J_new) / std::max(std::abs(J), 1e-12);
        pol.nominal_states = std::move(fp.states);
        pol.nominal_controls = std::move(fp.controls);
        J = J_new;
        accepted = true;
        accepted_alpha = alpha;
        lambda = std::max(lambda / cfg.lambda_scale, lambda_floor);
        if (rel_decrease < cfg.convergence_tol) converged = true;
        break;
      }
    }

    if (trace)
      trace->entries.push_back({outer, lambda_used, accepted_alpha, J,
                                bp.expected_improvement, accepted});

    if (accepted) {
      if (converged) break;
      continue;
    }
    // Nothing accepted: either we are at a local optimum or the model is
    // poorly conditioned here.
    if (std::abs(bp.expected_improvement) <
        cfg.convergence_tol * std::max(std::abs(J), 1.0)) {
      converged = true;
      break;
    }
    lambda *= cfg.lambda_scale;
    if (lambda > cfg.lambda_max) break;
  }

  // Gains for execution come from a final sweep around the final nominal.
  {
    std::vector<LinearizedStep> steps = linearize_trajectory(
        model, pol.nominal_states, pol.nominal_controls, cfg.dt);
    std::vector<CostExpansion> costs =
        expand_trajectory(cost, pol.nominal_states, pol.nominal_controls);
    double lam = std::min(std::max(lambda, lambda_floor), cfg.lambda_max);
    for (;;) {
      BackwardPassResult fin = backward_pass(steps, costs, cfg.sigma, lam);
      if (fin.ok) {
        pol.k = std::move(fin.k);
        pol.K = std::move(fin.K);
        break;
      }
      lam *= cfg.lambda_scale;
      if (lam > cfg.lambda_max) break;  // keep zero gains
    }
  }

  pol.converged = converged;
  pol.final_cost = J;
  return pol;
}

}  // namespace curilqr
