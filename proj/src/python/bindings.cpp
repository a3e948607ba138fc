#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "curilqr/arm.hpp"
#include "curilqr/config.hpp"
#include "curilqr/cost.hpp"
#include "curilqr/dataset.hpp"
#include "curilqr/errors.hpp"
#include "curilqr/gp.hpp"
#include "curilqr/mbrl.hpp"
#include "curilqr/runner.hpp"
#include "curilqr/solver.hpp"

namespace py = pybind11;
using namespace curilqr;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Curiosity-driven iLQR on a learned arm model";

  py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError",
                                         PyExc_RuntimeError);
  py::register_exception<StateError>(m, "ModelStateError", PyExc_RuntimeError);

  py::class_<ArmParams>(m, "ArmParams")
      .def(py::init<>())
      .def_static("default_two_link", &ArmParams::default_two_link)
      .def_readwrite("n_links", &ArmParams::n_links)
      .def_readwrite("link_lengths", &ArmParams::link_lengths)
      .def_readwrite("link_masses", &ArmParams::link_masses)
      .def_readwrite("link_inertias", &ArmParams::link_inertias)
      .def_readwrite("com_offsets", &ArmParams::com_offsets)
      .def_readwrite("joint_damping", &ArmParams::joint_damping)
      .def_readwrite("torque_limits", &ArmParams::torque_limits)
      .def_readwrite("gravity", &ArmParams::gravity)
      .def_readwrite("dt", &ArmParams::dt)
      .def("validate", &ArmParams::validate);

  py::class_<State>(m, "State")
      .def(py::init<>())
      .def(py::init<Eigen::VectorXd, Eigen::VectorXd>(), py::arg("theta"),
           py::arg("theta_dot"))
      .def_static("zero", &State::zero)
      .def_static("from_vector", &State::from_vector)
      .def_readwrite("theta", &State::theta)
      .def_readwrite("theta_dot", &State::theta_dot)
      .def("to_vector", &State::to_vector);

  py::class_<TransitionDataset>(m, "TransitionDataset")
      .def(py::init<>())
      .def_readwrite("n_links", &TransitionDataset::n_links)
      .def_readwrite("inputs", &TransitionDataset::inputs)
      .def_readwrite("targets", &TransitionDataset::targets)
      .def("size", &TransitionDataset::size)
      .def("append", &TransitionDataset::append)
      .def("append_row", &TransitionDataset::append_row)
      .def("save_csv", &TransitionDataset::save_csv)
      .def_static("load_csv", &TransitionDataset::load_csv);

  m.def("mass_matrix", &mass_matrix);
  m.def("coriolis_torque", &coriolis_torque);
  m.def("gravity_torque", &gravity_torque);
  m.def("dynamics", &dynamics);
  m.def("step", &step);
  m.def("forward_kinematics", &forward_kinematics);
  m.def("clamp_torque", &clamp_torque);
  m.def("total_energy", &total_energy);
  m.def("motor_babble", &motor_babble, py::arg("arm"), py::arg("s0"),
        py::arg("duration"), py::arg("torque_std"), py::arg("seed"));

  py::class_<GpHyperparams>(m, "GpHyperparams")
      .def(py::init<>())
      .def_static("ones", &GpHyperparams::ones)
      .def_readwrite("signal_variance", &GpHyperparams::signal_variance)
      .def_readwrite("length_scales", &GpHyperparams::length_scales)
      .def_readwrite("noise_variance", &GpHyperparams::noise_variance)
      .def_readwrite("jitter", &GpHyperparams::jitter);

  py::class_<GaussianPrediction>(m, "GaussianPrediction")
      .def_readonly("mean_accel", &GaussianPrediction::mean_accel)
      .def_readonly("accel_variance", &GaussianPrediction::accel_variance)
      .def("accel_covariance", &GaussianPrediction::accel_covariance);

  py::class_<StateDistribution>(m, "StateDistribution")
      .def_readonly("mean_state", &StateDistribution::mean_state)
      .def_readonly("covariance", &StateDistribution::covariance);

  py::class_<GpFitOptions>(m, "GpFitOptions")
      .def(py::init<>())
      .def_readwrite("restarts", &GpFitOptions::restarts)
      .def_readwrite("max_iters", &GpFitOptions::max_iters)
      .def_readwrite("bound_lo", &GpFitOptions::bound_lo)
      .def_readwrite("bound_hi", &GpFitOptions::bound_hi)
      .def_readwrite("subset_cap", &GpFitOptions::subset_cap)
      .def_readwrite("grad_tol", &GpFitOptions::grad_tol)
      .def_readwrite("warm_start", &GpFitOptions::warm_start);

  py::class_<GpModel>(m, "GpModel")
      .def(py::init<>())
      .def_static("fit", &GpModel::fit, py::arg("data"), py::arg("hypers"))
      .def_static("fit_optimized", &GpModel::fit_optimized, py::arg("data"),
                  py::arg("seed"), py::arg("options") = GpFitOptions())
      .def("fitted", &GpModel::fitted)
      .def("predict", &GpModel::predict)
      .def("predict_input", &GpModel::predict_input)
      .def("predict_gradients", &GpModel::predict_gradients)
      .def("predict_mean", &GpModel::predict_mean)
      .def("hyperparams", &GpModel::hyperparams,
           py::return_value_policy::copy)
      .def("training_inputs", &GpModel::training_inputs,
           py::return_value_policy::copy)
      .def("training_targets", &GpModel::training_targets,
           py::return_value_policy::copy)
      .def("n_points", &GpModel::n_points)
      .def("save", &GpModel::save)
      .def_static("load", &GpModel::load);

  m.def("integrate", &integrate);
  m.def("rollout_mean", &rollout_mean, py::arg("model"), py::arg("s0"),
        py::arg("controls"), py::arg("dt"), py::arg("velocity_bound") = 100.0);
  m.def("prediction_error", &prediction_error);

  py::class_<MeanRollout>(m, "MeanRollout")
      .def_readonly("states", &MeanRollout::states)
      .def_readonly("diverged", &MeanRollout::diverged);

  py::class_<ReachingCost>(m, "ReachingCost")
      .def(py::init<>())
      .def_readwrite("target_theta", &ReachingCost::target_theta)
      .def_readwrite("q_pos", &ReachingCost::q_pos)
      .def_readwrite("q_vel", &ReachingCost::q_vel)
      .def_readwrite("r_ctrl", &ReachingCost::r_ctrl)
      .def_readwrite("terminal_scale", &ReachingCost::terminal_scale);

  py::class_<CostExpansion>(m, "CostExpansion")
      .def_readonly("q0", &CostExpansion::q0)
      .def_readonly("q_x", &CostExpansion::q_x)
      .def_readonly("Q_xx", &CostExpansion::Q_xx)
      .def_readonly("r_u", &CostExpansion::r_u)
      .def_readonly("R_uu", &CostExpansion::R_uu)
      .def_readonly("P_xu", &CostExpansion::P_xu);

  m.def("stage_cost", &stage_cost);
  m.def("terminal_cost", &terminal_cost);
  m.def("expand", &expand, py::arg("cost"), py::arg("state"), py::arg("action"),
        py::arg("is_terminal"));

  py::class_<LinearizedStep>(m, "LinearizedStep")
      .def(py::init<>())
      .def_readwrite("A", &LinearizedStep::A)
      .def_readwrite("B", &LinearizedStep::B)
      .def_readwrite("C", &LinearizedStep::C)
      .def_readwrite("Sigma_next", &LinearizedStep::Sigma_next);

  py::class_<ValueExpansion>(m, "ValueExpansion")
      .def_readonly("S", &ValueExpansion::S)
      .def_readonly("s_vec", &ValueExpansion::s_vec)
      .def_readonly("s0", &ValueExpansion::s0);

  py::class_<SolverConfig>(m, "SolverConfig")
      .def(py::init<>())
      .def_readwrite("sigma", &SolverConfig::sigma)
      .def_readwrite("horizon", &SolverConfig::horizon)
      .def_readwrite("dt", &SolverConfig::dt)
      .def_readwrite("max_outer_iters", &SolverConfig::max_outer_iters)
      .def_readwrite("line_search_alphas", &SolverConfig::line_search_alphas)
      .def_readwrite("lambda_init", &SolverConfig::lambda_init)
      .def_readwrite("lambda_scale", &SolverConfig::lambda_scale)
      .def_readwrite("lambda_max", &SolverConfig::lambda_max)
      .def_readwrite("convergence_tol", &SolverConfig::convergence_tol)
      .def_readwrite("init_torque_std", &SolverConfig::init_torque_std)
      .def_readwrite("velocity_bound", &SolverConfig::velocity_bound);

  py::class_<FeedbackPolicy>(m, "FeedbackPolicy")
      .def_readonly("nominal_states", &FeedbackPolicy::nominal_states)
      .def_readonly("nominal_controls", &FeedbackPolicy::nominal_controls)
      .def_readonly("k", &FeedbackPolicy::k)
      .def_readonly("K", &FeedbackPolicy::K)
      .def_readonly("converged", &FeedbackPolicy::converged)
      .def_readonly("final_cost", &FeedbackPolicy::final_cost);

  py::class_<BackwardPassResult>(m, "BackwardPassResult")
      .def_readonly("ok", &BackwardPassResult::ok)
      .def_readonly("failed_step", &BackwardPassResult::failed_step)
      .def_readonly("k", &BackwardPassResult::k)
      .def_readonly("K", &BackwardPassResult::K)
      .def_readonly("value", &BackwardPassResult::value)
      .def_readonly("control_hessian", &BackwardPassResult::control_hessian)
      .def_readonly("expected_improvement",
                    &BackwardPassResult::expected_improvement);

  py::class_<ForwardPassResult>(m, "ForwardPassResult")
      .def_readonly("states", &ForwardPassResult::states)
      .def_readonly("controls", &ForwardPassResult::controls)
      .def_readonly("diverged", &ForwardPassResult::diverged);

  py::class_<SolveTraceEntry>(m, "SolveTraceEntry")
      .def_readonly("outer_iter", &SolveTraceEntry::outer_iter)
      .def_readonly("lambda_", &SolveTraceEntry::lambda)
      .def_readonly("alpha", &SolveTraceEntry::alpha)
      .def_readonly("cost", &SolveTraceEntry::cost)
      .def_readonly("expected_improvement",
                    &SolveTraceEntry::expected_improvement)
      .def_readonly("accepted", &SolveTraceEntry::accepted);

  py::class_<SolveTrace>(m, "SolveTrace")
      .def(py::init<>())
      .def_readonly("entries", &SolveTrace::entries)
      .def_readonly("initial_rollout_diverged",
                    &SolveTrace::initial_rollout_diverged);

  m.def("linearize_trajectory", &linearize_trajectory);
  m.def("backward_pass", &backward_pass, py::arg("steps"), py::arg("costs"),
        py::arg("sigma"), py::arg("lambda_"));
  m.def("forward_pass", &forward_pass, py::arg("model"),
        py::arg("nominal_states"), py::arg("nominal_controls"), py::arg("k"),
        py::arg("K"), py::arg("alpha"), py::arg("dt"),
        py::arg("velocity_bound") = 100.0);
  m.def("total_cost", &total_cost);
  m.def("random_init_controls", &random_init_controls);
  m.def(
      "solve",
      [](const GpModel& model, const ReachingCost& cost, const State& s0,
         const std::vector<Action>& init_controls, const SolverConfig& cfg,
         bool want_trace) {
        SolveTrace trace;
        FeedbackPolicy pol =
            solve(model, cost, s0, init_controls, cfg,
                  want_trace ? &trace : nullptr);
        return py::make_tuple(pol, trace);
      },
      py::arg("model"), py::arg("cost"), py::arg("s0"),
      py::arg("init_controls"), py::arg("config"),
      py::arg("want_trace") = false);

  py::enum_<ExplorationKind>(m, "ExplorationKind")
      .value("curious", ExplorationKind::curious)
      .value("normal", ExplorationKind::normal)
      .value("random", ExplorationKind::random);

  py::class_<ExplorationMode>(m, "ExplorationMode")
      .def(py::init<>())
      .def_static("curious", &ExplorationMode::curious,
                  py::arg("sigma") = -0.05)
      .def_static("normal", &ExplorationMode::normal)
      .def_static("random_torques", &ExplorationMode::random_torques)
      .def_readwrite("kind", &ExplorationMode::kind)
      .def_readwrite("sigma", &ExplorationMode::sigma)
      .def_readwrite("noise_std", &ExplorationMode::noise_std)
      .def("solver_sigma", &ExplorationMode::solver_sigma);

  py::class_<IterationRecord>(m, "IterationRecord")
      .def_readonly("iteration", &IterationRecord::iteration)
      .def_readonly("final_ee_distance", &IterationRecord::final_ee_distance)
      .def_readonly("rollout_cost", &IterationRecord::rollout_cost)
      .def_readonly("model_rmse", &IterationRecord::model_rmse)
      .def_readonly("dataset_size", &IterationRecord::dataset_size)
      .def_readonly("solver_converged", &IterationRecord::solver_converged)
      .def_readonly("wall_time", &IterationRecord::wall_time);

  py::class_<ExperimentResult>(m, "ExperimentResult")
      .def_readonly("records", &ExperimentResult::records)
      .def_readonly("final_policy", &ExperimentResult::final_policy)
      .def_readonly("final_model", &ExperimentResult::final_model)
      .def_readonly("dataset", &ExperimentResult::dataset)
      .def_readonly("seed", &ExperimentResult::seed);

  py::class_<SystemRollout>(m, "SystemRollout")
      .def_readonly("transitions", &SystemRollout::transitions)
      .def_readonly("states", &SystemRollout::states)
      .def_readonly("controls", &SystemRollout::controls);

  py::class_<MbrlOptions>(m, "MbrlOptions")
      .def(py::init<>())
      .def_readwrite("babble_duration", &MbrlOptions::babble_duration)
      .def_readwrite("babble_torque_std", &MbrlOptions::babble_torque_std)
      .def_readwrite("cold_start", &MbrlOptions::cold_start)
      .def_readwrite("fit", &MbrlOptions::fit);

  m.def("rollout_on_system", &rollout_on_system, py::arg("sim"),
        py::arg("policy"), py::arg("mode"), py::arg("seed"));
  m.def(
      "run_experiment",
      [](const ArmParams& sim, const ReachingCost& cost,
         const SolverConfig& cfg, const ExplorationMode& mode,
         int n_iterations, std::uint64_t seed, const MbrlOptions& opts) {
        return run_experiment(sim, cost, cfg, mode, n_iterations, seed, opts,
                              nullptr);
      },
      py::arg("sim"), py::arg("cost"), py::arg("config"), py::arg("mode"),
      py::arg("n_iterations"), py::arg("seed"),
      py::arg("options") = MbrlOptions());
  m.def("evaluate_transfer", &evaluate_transfer, py::arg("model"),
        py::arg("sim"), py::arg("new_targets"), py::arg("base_cost"),
        py::arg("config"), py::arg("seed"));
  m.def("ee_distance", &ee_distance);

  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def(py::init<>())
      .def_readwrite("arm", &ExperimentConfig::arm)
      .def_readwrite("cost", &ExperimentConfig::cost)
      .def_readwrite("solver", &ExperimentConfig::solver)
      .def_readwrite("mode", &ExperimentConfig::mode)
      .def_readwrite("fit", &ExperimentConfig::fit)
      .def_readwrite("n_iterations", &ExperimentConfig::n_iterations)
      .def_readwrite("n_seeds", &ExperimentConfig::n_seeds)
      .def_readwrite("seed_base", &ExperimentConfig::seed_base)
      .def_readwrite("output_dir", &ExperimentConfig::output_dir)
      .def_readwrite("babble_duration", &ExperimentConfig::babble_duration)
      .def_readwrite("babble_torque_std", &ExperimentConfig::babble_torque_std)
      .def_readwrite("cold_start", &ExperimentConfig::cold_start)
      .def_readwrite("workers", &ExperimentConfig::workers)
      .def_static("parse_file", &ExperimentConfig::parse_file)
      .def_static("parse_string", &ExperimentConfig::parse_string)
      .def("serialize", &ExperimentConfig::serialize)
      .def("validate", &ExperimentConfig::validate);

  m.def("mode_name", &mode_name);
  m.def("mode_from_name", &mode_from_name);
  m.def(
      "run_experiments",
      [](const ExperimentConfig& cfg, const std::vector<ExplorationKind>& modes) {
        run_experiments(cfg, modes, nullptr);
      },
      py::arg("config"), py::arg("modes"));
  m.def(
      "run_transfer",
      [](const ExperimentConfig& cfg, const std::vector<std::string>& models,
         const std::string& targets) {
        run_transfer(cfg, models, targets, nullptr);
      },
      py::arg("config"), py::arg("model_paths"), py::arg("targets_path"));
  m.def(
      "run_babble_only",
      [](const ExperimentConfig& cfg) { run_babble_only(cfg, nullptr); },
      py::arg("config"));
}
