#include "curilqr/mbrl.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "curilqr/errors.hpp"
#include "curilqr/rng.hpp"

namespace curilqr {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

}  // namespace

ExplorationMode ExplorationMode::curious(double sigma) {
  ExplorationMode m;
  m.kind = ExplorationKind::curious;
  m.sigma = sigma;
  return m;
}

ExplorationMode ExplorationMode::normal() {
  ExplorationMode m;
  m.kind = ExplorationKind::normal;
  m.sigma = 0.0;
  return m;
}

ExplorationMode ExplorationMode::random_torques(double noise_std) {
  ExplorationMode m;
  m.kind = ExplorationKind::random;
  m.sigma = 0.0;
  m.noise_std = noise_std;
  return m;
}

void ExplorationMode::validate() const {
  if (kind == ExplorationKind::curious && !(sigma < 0.0))
    throw InvalidInput("curious mode requires sigma < 0");
  if (kind == ExplorationKind::random && !(noise_std >= 0.0))
    throw InvalidInput("random mode requires noise_std >= 0");
  if (!std::isfinite(sigma) || !std::isfinite(noise_std))
    throw InvalidInput("exploration mode parameters must be finite");
}

double ee_distance(const ArmParams& sim, const Eigen::VectorXd& theta,
                   const Eigen::VectorXd& target_theta) {
  return (forward_kinematics(sim, theta) - forward_kinematics(sim, target_theta))
      .norm();
}

SystemRollout rollout_on_system(const ArmParams& sim,
                                const FeedbackPolicy& policy,
                                const ExplorationMode& mode,
                                std::uint64_t seed) {
  sim.validate();
  mode.validate();
  const size_t T = policy.nominal_controls.size();
  if (policy.nominal_states.size() != T + 1 || policy.K.size() != T)
    throw InvalidInput("policy has inconsistent lengths");

  Rng rng(seed);
  SystemRollout out;
  out.transitions.n_links = sim.n_links;
  out.transitions.inputs.resize(T, 3 * sim.n_links);
  out.transitions.targets.resize(T, sim.n_links);
  out.states.reserve(T + 1);
  out.controls.reserve(T);

  State s = policy.nominal_states[0];
  out.states.push_back(s);
  for (size_t t = 0; t < T; ++t) {
    Eigen::VectorXd dx = s.to_vector() - policy.nominal_states[t].to_vector();
    Action u = policy.nominal_controls[t] + policy.K[t] * dx;
    if (mode.kind == ExplorationKind::random && mode.noise_std > 0.0) {
      for (int j = 0; j < sim.n_links; ++j)
        u[j] += rng.gaussian(0.0, mode.noise_std);
    }
    u = clamp_torque(sim, u);  // throws on NaN torques
    State next = step(sim, s, u);
    out.transitions.inputs.row(t) << s.theta.transpose(),
        s.theta_dot.transpose(), u.transpose();
    out.transitions.targets.row(t) =
        ((next.theta_dot - s.theta_dot) / sim.dt).transpose();
    out.controls.push_back(u);
    out.states.push_back(next);
    s = next;
  }
  return out;
}

ExperimentResult run_experiment(const ArmParams& sim, const ReachingCost& cost,
                                const SolverConfig& cfg,
                                const ExplorationMode& mode, int n_iterations,
                                std::uint64_t seed, const MbrlOptions& opts,
                                std::vector<SolveTrace>* traces) {
  sim.validate();
  cost.validate(sim.n_links);
  cfg.validate();
  mode.validate();
  if (n_iterations < 0) throw InvalidInput("n_iterations must be >= 0");
  if (cfg.horizon < 1) throw InvalidInput("bad horizon");

  Rng root(seed);
  const State s0 = State::zero(sim.n_links);

  ExperimentResult result;
  result.seed = seed;
  result.dataset = motor_babble(sim, s0, opts.babble_duration,
                                opts.babble_torque_std, root.fork(1).seed());

  SolverConfig run_cfg = cfg;
  run_cfg.sigma = mode.solver_sigma();

  GpFitOptions fit_opts = opts.fit;
  result.final_model =
      GpModel::fit_optimized(result.dataset, root.fork(100).seed(), fit_opts);

  std::vector<Action> warm_controls;
  for (int it = 0; it < n_iterations; ++it) {
    const auto t0 = std::chrono::steady_clock::now();

    std::vector<Action> init_controls;
    if (!opts.cold_start && !warm_controls.empty()) {
      init_controls = warm_controls;
    } else {
      init_controls = random_init_controls(
          run_cfg.horizon, sim.n_links, run_cfg.init_torque_std,
          root.fork(10 + static_cast<std::uint64_t>(it)).seed());
    }

    IterationRecord rec;
    rec.iteration = it;
    try {
      SolveTrace trace;
      FeedbackPolicy policy = solve(result.final_model, cost, s0,
                                    init_controls, run_cfg, &trace);
      bool any_accepted = false;
      for (const SolveTraceEntry& e : trace.entries)
        if (e.accepted) any_accepted = true;
      if (traces) traces->push_back(std::move(trace));

      SystemRollout rollout = rollout_on_system(
          sim, policy, mode,
          root.fork(200 + static_cast<std::uint64_t>(it)).seed());
      bool rollout_wild = false;
      for (const State& st : rollout.states)
        if (st.theta_dot.cwiseAbs().maxCoeff() > run_cfg.velocity_bound)
          rollout_wild = true;

      rec.solver_converged = policy.converged;
      rec.final_ee_distance =
          ee_distance(sim, rollout.states.back().theta, cost.target_theta);
      rec.rollout_cost = total_cost(cost, rollout.states, rollout.controls);
      rec.model_rmse =
          prediction_error(result.final_model, rollout.transitions);

      result.dataset.append(rollout.transitions);
      rec.dataset_size = result.dataset.size();

      fit_opts.warm_start = result.final_model.hyperparams();
      result.final_model = GpModel::fit_optimized(
          result.dataset,
          root.fork(100 + static_cast<std::uint64_t>(it + 1)).seed(),
          fit_opts);

      result.final_policy = std::move(policy);
      if ((any_accepted || result.final_policy.converged) && !rollout_wild) {
        warm_controls = result.final_policy.nominal_controls;
      } else {
        // Two ways an iteration leaves nothing worth continuing from: the
        // solve returned its initialization untouched (warm-starting would
        // execute the identical rollout and append the same transitions
        // every remaining iteration), or the executed rollout blew past the
        // solver's own velocity bound, meaning the plan tracked so badly on
        // the real system that its controls are not a useful continuation.
        // Either way fall back to a fresh random sequence next iteration.
        warm_controls.clear();
      }
    } catch (const NumericalError&) {
      // Solve or rollout blew up; keep the current model and go around with
      // a fresh random initialization next iteration.
      rec.solver_converged = false;
      rec.final_ee_distance = ee_distance(sim, s0.theta, cost.target_theta);
      rec.rollout_cost = std::numeric_limits<double>::infinity();
      rec.model_rmse = 0.0;
      rec.dataset_size = result.dataset.size();
      warm_controls.clear();
    }
    rec.wall_time = seconds_since(t0);
    result.records.push_back(rec);
  }
  return result;
}

std::vector<double> evaluate_transfer(
    const GpModel& model, const ArmParams& sim,
    const std::vector<Eigen::VectorXd>& new_targets,
    const ReachingCost& base_cost, SolverConfig cfg, std::uint64_t seed) {
  if (!model.fitted()) throw StateError("GP model is not fitted");
  sim.validate();
  cfg.sigma = 0.0;  // transfer always plans risk-neutral
  cfg.validate();

  Rng root(seed);
  const State s0 = State::zero(sim.n_links);
  const ExplorationMode exec = ExplorationMode::normal();

  std::vector<double> distances;
  distances.reserve(new_targets.size());
  for (size_t i = 0; i < new_targets.size(); ++i) {
    ReachingCost cost = base_cost;
    cost.target_theta = new_targets[i];
    cost.validate(sim.n_links);

    std::vector<Action> init = random_init_controls(
        cfg.horizon, sim.n_links, cfg.init_torque_std,
        root.fork(10 + static_cast<std::uint64_t>(i)).seed());
    try {
      FeedbackPolicy policy = solve(model, cost, s0, init, cfg, nullptr);
      SystemRollout rollout = rollout_on_system(
          sim, policy, exec,
          root.fork(200 + static_cast<std::uint64_t>(i)).seed());
      distances.push_back(
          ee_distance(sim, rollout.states.back().theta, cost.target_theta));
    } catch (const NumericalError&) {
      // A policy that drives the integrator past floating-point range left
      // the arm nowhere in particular; rank it behind every finite outcome.
      distances.push_back(std::numeric_limits<double>::infinity());
    }
  }
  return distances;
}

}  // namespace curilqr
