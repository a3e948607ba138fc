// Acceptance gate for the curious-iLQR stack. Each criterion prints one
// PASS/FAIL line; the exit code is nonzero when any criterion fails.
// Optional argv: a list of criterion numbers to run (default: all ten).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "curilqr/arm.hpp"
#include "curilqr/config.hpp"
#include "curilqr/cost.hpp"
#include "curilqr/dataset.hpp"
#include "curilqr/errors.hpp"
#include "curilqr/gp.hpp"
#include "curilqr/mbrl.hpp"
#include "curilqr/rng.hpp"
#include "curilqr/runner.hpp"
#include "curilqr/solver.hpp"
#include "finite_diff.hpp"
#include "lqr_oracle.hpp"
#include "lti_gp.hpp"

namespace fs = std::filesystem;
using namespace curilqr;
using testsupport::dp_riccati;
using testsupport::DpSolution;
using testsupport::fd_jacobian;
using testsupport::grid_model;
using testsupport::LinearAccelSystem;
using testsupport::random_lti;
using testsupport::RandomLti;
using testsupport::rel_err;

namespace {

const fs::path kOutRoot = "acceptance_out";

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

bool same_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  if (a.size() == 0) return true;
  return (a - b).cwiseAbs().maxCoeff() == 0.0;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---- accepted-cost monotonicity bookkeeping (criterion 6, second clause) --

struct LoggedTrace {
  std::string origin;
  std::vector<std::pair<double, bool>> cost_accepted;
  bool strict;  // in-memory traces check strict decrease on accepted steps
};

std::vector<LoggedTrace> g_traces;

void log_trace(const std::string& origin, const SolveTrace& trace) {
  LoggedTrace lt;
  lt.origin = origin;
  lt.strict = true;
  for (const SolveTraceEntry& e : trace.entries)
    lt.cost_accepted.push_back({e.cost, e.accepted});
  g_traces.push_back(std::move(lt));
}

// Trace CSVs round costs to 12 significant digits, so accepted steps there
// are only required to be non-increasing.
int collect_trace_csvs(const fs::path& root) {
  int n_files = 0;
  if (!fs::exists(root)) return 0;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.rfind("trace_seed", 0) != 0 || name.size() < 4 ||
        name.substr(name.size() - 4) != ".csv")
      continue;
    ++n_files;
    std::ifstream in(entry.path());
    std::string line;
    std::getline(in, line);  // header
    std::map<int, LoggedTrace> solves;
    int row = 1;
    while (std::getline(in, line)) {
      ++row;
      if (line.empty()) continue;
      const std::vector<std::string> f = split_csv(line);
      if (f.size() != 7)
        throw InvalidInput(entry.path().string() + ": bad row " +
                           std::to_string(row));
      const int solve_index = std::stoi(f[0]);
      LoggedTrace& lt = solves[solve_index];
      if (lt.origin.empty()) {
        lt.origin =
            entry.path().string() + " solve " + std::to_string(solve_index);
        lt.strict = false;
      }
      lt.cost_accepted.push_back({std::stod(f[4]), f[6] == "1"});
    }
    for (auto& kv : solves) g_traces.push_back(std::move(kv.second));
  }
  return n_files;
}

Outcome monotonicity_outcome() {
  size_t checked = 0;
  for (const LoggedTrace& lt : g_traces) {
    for (size_t i = 1; i < lt.cost_accepted.size(); ++i) {
      ++checked;
      const double prev = lt.cost_accepted[i - 1].first;
      const double cur = lt.cost_accepted[i].first;
      if (cur > prev)
        return {false, "cost rose in " + lt.origin + " (" + num(prev) +
                           " -> " + num(cur) + ")"};
      if (lt.strict && lt.cost_accepted[i].second && !(cur < prev))
        return {false, "accepted step without strict decrease in " + lt.origin};
    }
  }
  return {true, std::to_string(g_traces.size()) + " logged solves, " +
                    std::to_string(checked) + " transitions"};
}

// ---- criterion 1: backward pass vs independent DP oracle at sigma = 0 ----

Outcome criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int nx = 1 + static_cast<int>(rng.next_u64() % 4);
    const int nu = 1 + static_cast<int>(rng.next_u64() % 2);
    const int T = 3 + static_cast<int>(rng.next_u64() % 18);
    const RandomLti sys = random_lti(rng, nx, nu, T, trial % 2 == 1);
    const DpSolution dp = dp_riccati(sys.steps, sys.costs);
    const BackwardPassResult bp = backward_pass(sys.steps, sys.costs, 0.0, 0.0);
    if (!bp.ok)
      return {false, "factorization failed on trial " + std::to_string(trial)};
    for (int t = 0; t < T; ++t) {
      worst = std::max(worst, rel_err(bp.k[t], dp.k[t]));
      worst = std::max(worst, rel_err(bp.K[t], dp.K[t]));
    }
    for (int t = 0; t <= T; ++t) {
      worst = std::max(worst, rel_err(bp.value[t].S, dp.S[t]));
      worst = std::max(worst, rel_err(bp.value[t].s_vec, dp.s[t]));
    }
  }
  const double secs = seconds_since(t0);
  const bool pass = worst < 1e-8 && secs < 5.0;
  return {pass, "50 random LTI systems, max rel err " + num(worst) + ", " +
                    num(secs) + " s"};
}

// ---- criterion 2: zero covariance makes sigma irrelevant bit for bit ----

Outcome criterion2() {
  Rng rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const int nx = 1 + static_cast<int>(rng.next_u64() % 4);
    const int nu = 1 + static_cast<int>(rng.next_u64() % 2);
    const int T = 3 + static_cast<int>(rng.next_u64() % 18);
    RandomLti sys = random_lti(rng, nx, nu, T, trial % 2 == 1);
    for (LinearizedStep& st : sys.steps) st.Sigma_next.setZero();
    const BackwardPassResult base = backward_pass(sys.steps, sys.costs, 0.0, 0.0);
    if (!base.ok)
      return {false, "factorization failed on trial " + std::to_string(trial)};
    for (const double sigma : {-0.5, -0.05, 0.05}) {
      const BackwardPassResult bp =
          backward_pass(sys.steps, sys.costs, sigma, 0.0);
      for (int t = 0; t < T; ++t) {
        if (!same_matrix(bp.k[t], base.k[t]) || !same_matrix(bp.K[t], base.K[t]))
          return {false, "gain mismatch at sigma " + num(sigma) + ", trial " +
                             std::to_string(trial)};
      }
      for (int t = 0; t <= T; ++t) {
        if (!same_matrix(bp.value[t].S, base.value[t].S) ||
            !same_matrix(bp.value[t].s_vec, base.value[t].s_vec) ||
            bp.value[t].s0 != base.value[t].s0)
          return {false, "value mismatch at sigma " + num(sigma) + ", trial " +
                             std::to_string(trial)};
      }
    }
  }
  return {true,
          "50 systems identical across sigma in {-0.5, -0.05, 0, 0.05}"};
}

// ---- criterion 3: scalar probe of the risk-sensitive control Hessian ----

double probe_control_hessian(double sigma) {
  LinearizedStep st;
  st.A = Eigen::MatrixXd::Ones(1, 1);
  st.B = Eigen::MatrixXd::Ones(1, 1);
  st.C = Eigen::MatrixXd::Ones(1, 1);
  st.Sigma_next = Eigen::MatrixXd::Ones(1, 1);

  CostExpansion stage;
  stage.q0 = 0.0;
  stage.q_x = Eigen::VectorXd::Zero(1);
  stage.Q_xx = Eigen::MatrixXd::Ones(1, 1);
  stage.r_u = Eigen::VectorXd::Ones(1);
  stage.R_uu = Eigen::MatrixXd::Ones(1, 1);
  stage.P_xu = Eigen::MatrixXd::Zero(1, 1);

  CostExpansion terminal;
  terminal.q0 = 0.0;
  terminal.q_x = Eigen::VectorXd::Zero(1);
  terminal.Q_xx = Eigen::MatrixXd::Ones(1, 1);
  terminal.r_u = Eigen::VectorXd::Zero(1);
  terminal.R_uu = Eigen::MatrixXd::Zero(1, 1);
  terminal.P_xu = Eigen::MatrixXd::Zero(1, 1);

  const BackwardPassResult bp =
      backward_pass({st}, {stage, terminal}, sigma, 0.0);
  // All probe quantities are dyadic, so the recursion forms H in exact
  // arithmetic; reading it back through the gain would launder it through a
  // Cholesky solve and lose the last ulp.
  return bp.control_hessian[0](0, 0);
}

Outcome criterion3() {
  const double h_pos = probe_control_hessian(0.05);
  const double h_zero = probe_control_hessian(0.0);
  const double h_neg = probe_control_hessian(-0.05);
  const double h_deep = probe_control_hessian(-0.5);
  const bool decreasing = h_pos > h_zero && h_zero > h_neg && h_neg > h_deep;
  const bool exact = h_deep == 1.5;
  return {decreasing && exact,
          "H = " + num(h_pos) + ", " + num(h_zero) + ", " + num(h_neg) + ", " +
              num(h_deep) + " at sigma = 0.05, 0, -0.05, -0.5"};
}

// ---- criterion 4: Monte-Carlo check of the time-0 risk-sensitive gain ----

// Certainty equivalent of the exponentiated cost, (1/sigma) log E[exp(sigma
// J)], computed with a log-sum-exp shift; the sigma -> 0 limit is the mean.
double exp_cost_objective(const std::vector<double>& Js, double sigma) {
  const double n = static_cast<double>(Js.size());
  if (sigma == 0.0) {
    double acc = 0.0;
    for (double J : Js) acc += J;
    return acc / n;
  }
  double shift = -std::numeric_limits<double>::infinity();
  for (double J : Js) shift = std::max(shift, sigma * J);
  double acc = 0.0;
  for (double J : Js) acc += std::exp(sigma * J - shift);
  return (shift + std::log(acc / n)) / sigma;
}

Outcome criterion4() {
  const auto t0 = std::chrono::steady_clock::now();
  const int T = 10;
  const int N = 100000;
  const double noise_var = 0.5;

  auto time0_gain = [&](double sigma) {
    LinearizedStep st;
    st.A = Eigen::MatrixXd::Ones(1, 1);
    st.B = Eigen::MatrixXd::Ones(1, 1);
    st.C = Eigen::MatrixXd::Ones(1, 1);
    st.Sigma_next = noise_var * Eigen::MatrixXd::Ones(1, 1);
    CostExpansion stage;
    stage.q0 = 0.0;
    stage.q_x = Eigen::VectorXd::Zero(1);
    stage.Q_xx = Eigen::MatrixXd::Identity(1, 1);
    stage.r_u = Eigen::VectorXd::Zero(1);
    stage.R_uu = Eigen::MatrixXd::Identity(1, 1);
    stage.P_xu = Eigen::MatrixXd::Zero(1, 1);
    CostExpansion terminal = stage;
    terminal.R_uu = Eigen::MatrixXd::Zero(1, 1);
    terminal.P_xu = Eigen::MatrixXd::Zero(1, 1);
    std::vector<LinearizedStep> steps(T, st);
    std::vector<CostExpansion> costs(T, stage);
    costs.push_back(terminal);
    const BackwardPassResult bp = backward_pass(steps, costs, sigma, 0.0);
    return bp.K[0](0, 0);
  };

  // Common random numbers: one pool of noise shared by every gain and sigma,
  // so grid comparisons see the same sampled trajectories.
  Rng rng(31);
  std::vector<double> noise(static_cast<size_t>(N) * T);
  for (double& w : noise) w = rng.gaussian(0.0, std::sqrt(noise_var));

  std::vector<double> Js(N);
  std::string detail;
  bool pass = true;
  for (const double sigma : {-0.1, 0.0, 0.1}) {
    const double gain = time0_gain(sigma);
    const int half_cells = 25;
    double best_obj = std::numeric_limits<double>::infinity();
    int best_cell = 0;
    for (int cell = -half_cells; cell <= half_cells; ++cell) {
      const double kappa = gain + 0.01 * cell;
      for (int i = 0; i < N; ++i) {
        double x = 1.0;
        double J = 0.0;
        const double* w = &noise[static_cast<size_t>(i) * T];
        for (int t = 0; t < T; ++t) {
          const double u = kappa * x;
          J += 0.5 * (x * x + u * u);
          x = x + u + w[t];
        }
        J += 0.5 * x * x;
        Js[i] = J;
      }
      const double obj = exp_cost_objective(Js, sigma);
      if (obj < best_obj) {
        best_obj = obj;
        best_cell = cell;
      }
    }
    const bool interior = std::abs(best_cell) < half_cells;
    const bool close = std::abs(best_cell) <= 1;
    pass = pass && interior && close;
    if (!detail.empty()) detail += "; ";
    detail += "sigma " + num(sigma) + ": gain " + num(gain) + ", grid best " +
              num(gain + 0.01 * best_cell);
  }
  const double secs = seconds_since(t0);
  pass = pass && secs < 60.0;
  return {pass, detail + "; " + num(secs) + " s"};
}

// ---- criterion 5: GP posterior vs dense solve, gradients, variance box ----

struct DenseOracle {
  Eigen::MatrixXd Z;
  Eigen::MatrixXd Kinv;
  Eigen::VectorXd alpha;
  double sf2;
  Eigen::VectorXd ls;

  DenseOracle(const Eigen::MatrixXd& Zin, const Eigen::VectorXd& y,
              double sf2_in, const Eigen::VectorXd& ls_in, double sn2,
              double jitter)
      : Z(Zin), sf2(sf2_in), ls(ls_in) {
    const int n = static_cast<int>(Z.rows());
    Eigen::MatrixXd K(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) K(i, j) = kernel(Z.row(i), Z.row(j));
    K.diagonal().array() += sn2 + jitter;
    Kinv = K.inverse();
    alpha = Kinv * y;
  }

  double kernel(const Eigen::RowVectorXd& a,
                const Eigen::RowVectorXd& b) const {
    double d2 = 0.0;
    for (int d = 0; d < a.size(); ++d) {
      const double diff = (a(d) - b(d)) / ls(d);
      d2 += diff * diff;
    }
    return sf2 * std::exp(-0.5 * d2);
  }

  double mean(const Eigen::VectorXd& z) const {
    double m = 0.0;
    for (int i = 0; i < Z.rows(); ++i)
      m += alpha(i) * kernel(z.transpose(), Z.row(i));
    return m;
  }

  double variance(const Eigen::VectorXd& z) const {
    const int n = static_cast<int>(Z.rows());
    Eigen::VectorXd ks(n);
    for (int i = 0; i < n; ++i) ks(i) = kernel(z.transpose(), Z.row(i));
    return std::max(0.0, sf2 - ks.dot(Kinv * ks));
  }
};

Outcome criterion5() {
  const ArmParams arm = ArmParams::default_two_link();
  const TransitionDataset data =
      motor_babble(arm, State::zero(2), 45.0 * arm.dt, 0.01, 7);
  if (data.size() > 50)
    return {false, "oracle dataset has " + std::to_string(data.size()) +
                       " rows, wanted <= 50"};

  GpHyperparams hp = GpHyperparams::ones(2, 6);
  hp.signal_variance << 3.7, 12.0;
  hp.length_scales.row(0) << 0.8, 0.9, 1.1, 0.7, 0.05, 0.06;
  hp.length_scales.row(1) << 1.2, 0.6, 0.8, 1.0, 0.04, 0.07;
  hp.noise_variance << 0.01, 0.02;
  const GpModel model = GpModel::fit(data, hp);

  std::vector<DenseOracle> oracle;
  for (int d = 0; d < 2; ++d)
    oracle.emplace_back(data.inputs, data.targets.col(d),
                        hp.signal_variance(d), hp.length_scales.row(d),
                        hp.noise_variance(d), model.effective_jitter()(d));

  auto random_input = [](Rng& r) {
    Eigen::VectorXd z(6);
    for (int i = 0; i < 4; ++i) z(i) = r.gaussian() * 0.5;
    for (int i = 4; i < 6; ++i) z(i) = r.gaussian() * 0.02;
    return z;
  };

  Rng rng(99);
  double worst_posterior = 0.0;
  for (int q = 0; q < 25; ++q) {
    const Eigen::VectorXd z = random_input(rng);
    const GaussianPrediction pred = model.predict_input(z);
    for (int d = 0; d < 2; ++d) {
      worst_posterior = std::max(
          worst_posterior, rel_err(pred.mean_accel(d), oracle[d].mean(z)));
      worst_posterior =
          std::max(worst_posterior,
                   rel_err(pred.accel_variance(d), oracle[d].variance(z)));
    }
  }

  double worst_grad = 0.0;
  for (int q = 0; q < 100; ++q) {
    const Eigen::VectorXd z = random_input(rng);
    Eigen::VectorXd mean, var;
    Eigen::MatrixXd dmean;
    model.predict_full(z, mean, var, dmean);
    const Eigen::MatrixXd fd = fd_jacobian(
        [&](const Eigen::VectorXd& zz) { return model.predict_mean(zz); }, z,
        1e-6);
    worst_grad = std::max(worst_grad, rel_err(dmean, fd));
  }

  bool var_in_box = true;
  double worst_var = 0.0;
  for (int q = 0; q < 200; ++q) {
    Eigen::VectorXd z = random_input(rng);
    if (q % 2 == 1) z *= 50.0;  // far field reverts to the prior variance
    const GaussianPrediction pred = model.predict_input(z);
    for (int d = 0; d < 2; ++d) {
      const double v = pred.accel_variance(d);
      const double hi = hp.signal_variance(d) + hp.noise_variance(d) + 1e-8;
      var_in_box = var_in_box && v >= 0.0 && v <= hi;
      worst_var = std::max(worst_var, v);
    }
  }

  const bool pass = worst_posterior < 1e-8 && worst_grad < 1e-4 && var_in_box;
  return {pass, "posterior rel err " + num(worst_posterior) +
                    ", gradient rel err " + num(worst_grad) +
                    ", variance box held (max " + num(worst_var) + ")"};
}

// ---- criterion 6: solve on a GP of an LTI system vs the exact optimum ----

Outcome g_criterion6_solver{false, "not run"};

void run_criterion6_solver() {
  const LinearAccelSystem sys;
  const GpModel model = grid_model(sys, 1.0, 4.0, 6.0, 9);

  ReachingCost cost;
  cost.target_theta = Eigen::VectorXd::Constant(1, 0.4);
  cost.q_pos = 5.0;
  cost.q_vel = 0.1;
  cost.r_ctrl = 1e-3;
  cost.terminal_scale = 10.0;

  SolverConfig cfg;
  cfg.sigma = 0.0;
  cfg.horizon = 20;
  cfg.dt = sys.dt;
  cfg.max_outer_iters = 3;
  cfg.lambda_init = 1e-3;

  const State s0 = State::zero(1);
  const std::vector<Action> init(20, Action::Zero(1));
  SolveTrace trace;
  const FeedbackPolicy policy = solve(model, cost, s0, init, cfg, &trace);
  log_trace("criterion 6 solve", trace);

  LinearizedStep st;
  st.A = sys.Ad();
  st.B = sys.Bd();
  st.C = Eigen::MatrixXd::Identity(2, 2);
  st.Sigma_next = Eigen::MatrixXd::Zero(2, 2);
  std::vector<LinearizedStep> steps(20, st);
  std::vector<CostExpansion> costs;
  for (int t = 0; t < 20; ++t)
    costs.push_back(expand(cost, State::zero(1), Action::Zero(1), false));
  costs.push_back(expand(cost, State::zero(1), Action::Zero(1), true));
  const DpSolution dp = dp_riccati(steps, costs);
  const double exact = dp.s0[0];  // s0 sits at the expansion point

  const double rel = std::abs(policy.final_cost - exact) / std::abs(exact);
  g_criterion6_solver = {
      rel < 1e-3 && !trace.initial_rollout_diverged,
      "cost " + num(policy.final_cost) + " vs exact " + num(exact) +
          " (rel " + num(rel) + ") in " +
          std::to_string(trace.entries.size()) + " outer iterations"};
}

Outcome criterion6_final() {
  const int n_files = collect_trace_csvs(kOutRoot);
  const Outcome mono = monotonicity_outcome();
  const bool pass = g_criterion6_solver.pass && mono.pass;
  return {pass, g_criterion6_solver.detail + "; monotonicity: " + mono.detail +
                    " (" + std::to_string(n_files) + " trace files)"};
}

// ---- criterion 7: mass matrix PD, energy drift, mirror symmetry ----

Outcome criterion7() {
  ArmParams arm = ArmParams::default_two_link();

  Rng rng(5);
  double min_eig = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 1000; ++i) {
    Eigen::VectorXd theta(2);
    theta << rng.uniform(-M_PI, M_PI), rng.uniform(-M_PI, M_PI);
    const Eigen::MatrixXd M = mass_matrix(arm, theta);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(M);
    min_eig = std::min(min_eig, eig.eigenvalues().minCoeff());
  }
  const bool pd = min_eig > 0.0;

  const Action zero_tau = Action::Zero(2);
  auto rel_drift = [&](ArmParams p, const Eigen::Vector2d& theta,
                       const Eigen::Vector2d& theta_dot) {
    p.joint_damping = Eigen::VectorXd::Zero(2);
    State s;
    s.theta = theta;
    s.theta_dot = theta_dot;
    const double e0 = total_energy(p, s);
    double max_drift = 0.0;
    for (int i = 0; i < 120; ++i) {
      s = step(p, s, zero_tau);
      max_drift = std::max(max_drift, std::abs(total_energy(p, s) - e0));
    }
    return max_drift / std::abs(e0);
  };
  ArmParams swing = arm;
  swing.gravity = 9.81;
  const double drift_swing =
      rel_drift(swing, {-1.17, 0.2}, {1.0, -0.6});  // gravity pendulum
  const double drift_spin =
      rel_drift(arm, {0.3, -0.4}, {3.0, -2.0});  // torque-free rotation
  const double drift_frac = std::max(drift_swing, drift_spin);
  const bool energy_ok = drift_frac < 0.01;

  State a = State::zero(2);
  State b = State::zero(2);
  Action tau(2);
  tau << 0.05, -0.03;
  double mirror_gap = 0.0;
  for (int i = 0; i < 120; ++i) {
    a = step(arm, a, tau);
    b = step(arm, b, -tau);
    mirror_gap = std::max(mirror_gap, (a.theta + b.theta).cwiseAbs().maxCoeff());
    mirror_gap =
        std::max(mirror_gap, (a.theta_dot + b.theta_dot).cwiseAbs().maxCoeff());
  }
  const bool mirror_ok = mirror_gap < 1e-10;

  return {pd && energy_ok && mirror_ok,
          "min mass eigenvalue " + num(min_eig) + ", energy drift " +
              num(100.0 * drift_frac) + "%, mirror gap " + num(mirror_gap)};
}

// ---- criteria 8-9: learning and transfer trends on the 2-link arm ----

struct TrendData {
  std::vector<double> ee_final_curious, ee_final_normal;
  std::vector<double> ee_best_curious;  // best distance over the iterations
  std::vector<double> rmse_curious, rmse_normal;
  std::vector<std::string> models_curious, models_normal;
  ArmParams arm;
  ReachingCost cost;
  SolverConfig solver;
  double seconds = 0.0;
};

std::optional<TrendData> g_trend;

void ensure_trend_runs() {
  if (g_trend) return;
  const auto t0 = std::chrono::steady_clock::now();
  TrendData d;

  for (int ti = 0; ti < 2; ++ti) {
    ExperimentConfig cfg;
    cfg.mode = ExplorationMode::curious(-0.05);
    cfg.solver.sigma = -0.05;
    cfg.solver.horizon = 150;
    cfg.n_iterations = 5;
    cfg.n_seeds = 5;
    cfg.workers = 1;
    cfg.cost.target_theta =
        ti == 0 ? Eigen::Vector2d(0.9, 0.6) : Eigen::Vector2d(-0.4, 0.8);
    cfg.seed_base = ti == 0 ? 0 : 50;
    cfg.output_dir =
        (kOutRoot / (ti == 0 ? "target_a" : "target_b")).string();
    run_experiments(cfg, {ExplorationKind::curious, ExplorationKind::normal},
                    &std::cout);

    d.arm = cfg.arm;
    d.cost = cfg.cost;
    d.solver = cfg.solver;

    for (const std::string mode : {"curious", "normal"}) {
      for (int k = 0; k < cfg.n_seeds; ++k) {
        const fs::path dir = fs::path(cfg.output_dir) / mode;
        const std::string text =
            slurp((dir / ("metrics_seed" + std::to_string(k) + ".csv"))
                      .string());
        std::stringstream ss(text);
        std::string line;
        std::getline(ss, line);  // header
        std::vector<std::vector<std::string>> rows;
        while (std::getline(ss, line))
          if (!line.empty()) rows.push_back(split_csv(line));
        if (rows.size() != 5)
          throw InvalidInput("expected 5 metric rows in " + dir.string());
        const double ee_final = std::stod(rows.back()[1]);
        const double rmse_final = std::stod(rows.back()[3]);
        double ee_best = std::numeric_limits<double>::infinity();
        for (const auto& r : rows) ee_best = std::min(ee_best, std::stod(r[1]));
        const std::string model_path =
            (dir / ("model_seed" + std::to_string(k))).string();
        if (mode == std::string("curious")) {
          d.ee_final_curious.push_back(ee_final);
          d.ee_best_curious.push_back(ee_best);
          d.rmse_curious.push_back(rmse_final);
          d.models_curious.push_back(model_path);
        } else {
          d.ee_final_normal.push_back(ee_final);
          d.rmse_normal.push_back(rmse_final);
          d.models_normal.push_back(model_path);
        }
      }
    }
  }
  d.seconds = seconds_since(t0);
  g_trend = std::move(d);
}

Outcome criterion8() {
  ensure_trend_runs();
  const TrendData& d = *g_trend;
  const double med_cur = median(d.ee_final_curious);
  const double med_nor = median(d.ee_final_normal);
  int reached = 0;
  for (double e : d.ee_best_curious)
    if (e < 0.10) ++reached;
  const double med_rmse_cur = median(d.rmse_curious);
  const double med_rmse_nor = median(d.rmse_normal);

  const bool a = med_cur <= med_nor;
  const bool b = reached >= 7;
  const bool c = med_rmse_cur <= med_rmse_nor;
  const bool budget = d.seconds < 1200.0;
  return {a && b && c && budget,
          "median EE " + num(med_cur) + " vs " + num(med_nor) + " m, " +
              std::to_string(reached) + "/10 runs below 0.10 m, RMSE " +
              num(med_rmse_cur) + " vs " + num(med_rmse_nor) + ", " +
              num(d.seconds) + " s"};
}

Outcome criterion9() {
  ensure_trend_runs();
  const TrendData& d = *g_trend;
  std::vector<Eigen::VectorXd> targets;
  targets.push_back(Eigen::Vector2d(0.5, -0.3));
  targets.push_back(Eigen::Vector2d(-0.7, 0.4));
  targets.push_back(Eigen::Vector2d(1.1, -0.2));
  targets.push_back(Eigen::Vector2d(0.2, 1.0));

  auto distances = [&](const std::vector<std::string>& model_paths) {
    std::vector<double> all;
    for (const std::string& mp : model_paths) {
      const GpModel model = GpModel::load(mp);
      const std::vector<double> dist =
          evaluate_transfer(model, d.arm, targets, d.cost, d.solver, 7);
      all.insert(all.end(), dist.begin(), dist.end());
    }
    return all;
  };

  const std::vector<double> cur = distances(d.models_curious);
  const std::vector<double> nor = distances(d.models_normal);
  const double med_cur = median(cur);
  const double med_nor = median(nor);
  return {med_cur <= med_nor, "median transfer EE " + num(med_cur) + " vs " +
                                  num(med_nor) + " m over " +
                                  std::to_string(cur.size()) +
                                  " solves per mode"};
}

// ---- criterion 10: byte-identical reruns ----

Outcome criterion10() {
  ExperimentConfig base;
  base.solver.horizon = 16;
  base.solver.max_outer_iters = 6;
  base.n_iterations = 1;
  base.n_seeds = 1;
  base.seed_base = 3;
  base.fit.restarts = 1;
  base.fit.max_iters = 8;

  ExperimentConfig a = base;
  a.output_dir = (kOutRoot / "repro_a").string();
  ExperimentConfig b = base;
  b.output_dir = (kOutRoot / "repro_b").string();
  run_experiments(a, {ExplorationKind::curious, ExplorationKind::normal},
                  nullptr);
  run_experiments(b, {ExplorationKind::curious, ExplorationKind::normal},
                  nullptr);

  int compared = 0;
  for (const std::string rel :
       {"curious/metrics_seed0.csv", "normal/metrics_seed0.csv",
        "curious/trace_seed0.csv", "normal/trace_seed0.csv",
        "curious/dataset_seed0.csv", "normal/dataset_seed0.csv",
        "aggregate.csv"}) {
    ++compared;
    if (slurp((fs::path(a.output_dir) / rel).string()) !=
        slurp((fs::path(b.output_dir) / rel).string()))
      return {false, rel + " differs between identical reruns"};
  }
  return {true, std::to_string(compared) +
                    " CSV files byte-identical across reruns"};
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));
  auto want = [&](int n) {
    return wanted.empty() ||
           std::find(wanted.begin(), wanted.end(), n) != wanted.end();
  };

  std::error_code ec;
  fs::remove_all(kOutRoot, ec);
  fs::create_directories(kOutRoot);

  const std::vector<std::pair<int, std::string>> names = {
      {1, "backward pass matches the Riccati oracle"},
      {2, "zero covariance neutralizes sigma"},
      {3, "risk-seeking softens the control Hessian"},
      {4, "Monte-Carlo exponentiated cost recovers the gain"},
      {5, "GP posterior, gradients and variance bounds"},
      {6, "solver reaches the exact LQR optimum, costs monotone"},
      {7, "arm physics: PD mass matrix, energy, mirror symmetry"},
      {8, "curious learning trend on the 2-link arm"},
      {9, "transfer to unseen targets"},
      {10, "byte-identical reruns"},
  };

  std::map<int, Outcome> results;
  auto run = [&](int n, const std::function<Outcome()>& fn) {
    if (!want(n)) return;
    std::cout << "[acceptance] running criterion " << n << "...\n"
              << std::flush;
    try {
      results[n] = fn();
    } catch (const std::exception& e) {
      results[n] = {false, std::string("exception: ") + e.what()};
    }
  };

  run(1, criterion1);
  run(2, criterion2);
  run(3, criterion3);
  run(4, criterion4);
  run(5, criterion5);
  if (want(6)) {
    std::cout << "[acceptance] running criterion 6 (solver part)...\n"
              << std::flush;
    try {
      run_criterion6_solver();
    } catch (const std::exception& e) {
      g_criterion6_solver = {false, std::string("exception: ") + e.what()};
    }
  }
  run(7, criterion7);
  run(8, criterion8);
  run(9, criterion9);
  run(10, criterion10);
  // The monotonicity clause of criterion 6 sweeps every trace the suite
  // logged, so it settles only after the trend and rerun criteria.
  run(6, criterion6_final);

  bool all_pass = true;
  int n_run = 0;
  for (const auto& [n, name] : names) {
    auto it = results.find(n);
    if (it == results.end()) continue;
    ++n_run;
    all_pass = all_pass && it->second.pass;
    std::cout << (it->second.pass ? "PASS" : "FAIL") << " criterion " << n
              << ": " << name << " (" << it->second.detail << ")\n";
  }
  std::cout << "acceptance: "
            << std::count_if(results.begin(), results.end(),
                             [](const auto& kv) { return kv.second.pass; })
            << "/" << n_run << " criteria passed\n";
  return all_pass ? 0 : 1;
}
