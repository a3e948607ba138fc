#include "curilqr/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "curilqr/errors.hpp"
#include "curilqr/rng.hpp"

namespace fs = std::filesystem;

namespace curilqr {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double quantile(std::vector<double> v, double p) {
  if (v.empty()) throw InvalidInput("quantile of empty set");
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const size_t lo = static_cast<size_t>(h);
  if (lo + 1 >= v.size()) return v.back();
  return v[lo] + (v[lo + 1] - v[lo]) * (h - static_cast<double>(lo));
}

void write_metrics_csv(const std::string& path,
                       const std::vector<IterationRecord>& records) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot open " + path + " for writing");
  out << "iteration,final_ee_distance,rollout_cost,model_rmse,dataset_size,"
         "solver_converged\n";
  for (const IterationRecord& r : records) {
    out << r.iteration << "," << fmt(r.final_ee_distance) << ","
        << fmt(r.rollout_cost) << "," << fmt(r.model_rmse) << ","
        << r.dataset_size << "," << (r.solver_converged ? 1 : 0) << "\n";
  }
  if (!out) throw InvalidInput("failed writing " + path);
}

void write_timing_csv(const std::string& path,
                      const std::vector<IterationRecord>& records) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot open " + path + " for writing");
  out << "iteration,wall_time\n";
  for (const IterationRecord& r : records)
    out << r.iteration << "," << fmt(r.wall_time) << "\n";
}

void write_trace_csv(const std::string& path,
                     const std::vector<SolveTrace>& traces) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot open " + path + " for writing");
  out << "solve_index,outer_iter,lambda,alpha,cost,expected_improvement,"
         "accepted\n";
  for (size_t i = 0; i < traces.size(); ++i) {
    for (const SolveTraceEntry& e : traces[i].entries) {
      out << i << "," << e.outer_iter << "," << fmt(e.lambda) << ","
          << fmt(e.alpha) << "," << fmt(e.cost) << ","
          << fmt(e.expected_improvement) << "," << (e.accepted ? 1 : 0)
          << "\n";
    }
  }
}

struct Job {
  ExplorationKind mode;
  int seed_index = 0;
};

ExplorationMode make_mode(const ExperimentConfig& cfg, ExplorationKind kind) {
  switch (kind) {
    case ExplorationKind::curious:
      return ExplorationMode::curious(cfg.mode.sigma < 0.0 ? cfg.mode.sigma
                                                           : -0.05);
    case ExplorationKind::normal:
      return ExplorationMode::normal();
    case ExplorationKind::random:
      return ExplorationMode::random_torques(cfg.mode.noise_std);
  }
  throw InvalidInput("unknown exploration kind");
}

void write_manifest(const ExperimentConfig& cfg, const std::string& command,
                    const std::vector<std::string>& mode_names,
                    const nlohmann::json& extra) {
  nlohmann::json m;
  m["format"] = "curilqr-manifest";
  m["version"] = 1;
  m["code_version"] = kCodeVersion;
  m["command"] = command;
  m["config"] = cfg.serialize();
  m["modes"] = mode_names;
  std::vector<std::uint64_t> seeds;
  for (int k = 0; k < cfg.n_seeds; ++k)
    seeds.push_back(cfg.seed_base + static_cast<std::uint64_t>(k));
  m["seeds"] = seeds;
  for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = *it;
  std::ofstream out(fs::path(cfg.output_dir) / "manifest");
  if (!out) throw InvalidInput("cannot write manifest");
  out << m.dump(2) << "\n";
}

void run_jobs(int workers, int n_jobs,
              const std::function<void(int)>& run_one) {
  if (workers <= 1 || n_jobs <= 1) {
    for (int j = 0; j < n_jobs; ++j) run_one(j);
    return;
  }
  std::atomic<int> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;
  auto worker = [&]() {
    for (;;) {
      const int j = next.fetch_add(1);
      if (j >= n_jobs) return;
      try {
        run_one(j);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const int n_threads = std::min(workers, n_jobs);
  pool.reserve(static_cast<size_t>(n_threads));
  for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace

void run_experiments(const ExperimentConfig& cfg,
                     const std::vector<ExplorationKind>& modes,
                     std::ostream* progress) {
  cfg.validate();
  if (modes.empty()) throw InvalidInput("no modes to run");
  fs::create_directories(cfg.output_dir);

  std::vector<std::string> mode_names;
  for (ExplorationKind m : modes) {
    mode_names.push_back(mode_name(m));
    fs::create_directories(fs::path(cfg.output_dir) / mode_name(m));
  }

  std::vector<Job> jobs;
  for (ExplorationKind m : modes)
    for (int k = 0; k < cfg.n_seeds; ++k) jobs.push_back({m, k});

  std::vector<std::vector<IterationRecord>> all_records(jobs.size());
  std::mutex progress_mutex;

  auto run_one = [&](int j) {
    const Job& job = jobs[static_cast<size_t>(j)];
    const std::uint64_t seed =
        cfg.seed_base + static_cast<std::uint64_t>(job.seed_index);
    const ExplorationMode mode = make_mode(cfg, job.mode);

    SolverConfig scfg = cfg.solver;
    scfg.sigma = mode.solver_sigma();

    std::vector<SolveTrace> traces;
    ExperimentResult res =
        run_experiment(cfg.arm, cfg.cost, scfg, mode, cfg.n_iterations, seed,
                       cfg.mbrl_options(), &traces);

    const fs::path dir = fs::path(cfg.output_dir) / mode_name(job.mode);
    const std::string k = std::to_string(job.seed_index);
    write_metrics_csv((dir / ("metrics_seed" + k + ".csv")).string(),
                      res.records);
    write_timing_csv((dir / ("timing_seed" + k + ".csv")).string(),
                     res.records);
    write_trace_csv((dir / ("trace_seed" + k + ".csv")).string(), traces);
    res.dataset.save_csv((dir / ("dataset_seed" + k + ".csv")).string());
    res.final_model.save((dir / ("model_seed" + k)).string());
    all_records[static_cast<size_t>(j)] = res.records;

    if (progress) {
      std::lock_guard<std::mutex> lock(progress_mutex);
      *progress << mode_name(job.mode) << " seed " << job.seed_index
                << ": done";
      if (!res.records.empty()) {
        *progress << ", final EE distance "
                  << fmt(res.records.back().final_ee_distance) << " m";
      }
      *progress << "\n" << std::flush;
    }
  };

  run_jobs(cfg.workers, static_cast<int>(jobs.size()), run_one);

  // Aggregate in fixed (mode, iteration) order so the bytes do not depend on
  // worker scheduling.
  std::ofstream agg(fs::path(cfg.output_dir) / "aggregate.csv");
  if (!agg) throw InvalidInput("cannot write aggregate.csv");
  agg << "mode,iteration,n_seeds,"
         "ee_distance_median,ee_distance_q25,ee_distance_q75,"
         "rollout_cost_median,rollout_cost_q25,rollout_cost_q75,"
         "model_rmse_median,model_rmse_q25,model_rmse_q75,"
         "converged_fraction\n";
  for (size_t mi = 0; mi < modes.size(); ++mi) {
    for (int it = 0; it < cfg.n_iterations; ++it) {
      std::vector<double> dist, cost, rmse;
      int converged = 0;
      for (int k = 0; k < cfg.n_seeds; ++k) {
        const auto& recs = all_records[mi * cfg.n_seeds + k];
        dist.push_back(recs[it].final_ee_distance);
        cost.push_back(recs[it].rollout_cost);
        rmse.push_back(recs[it].model_rmse);
        converged += recs[it].solver_converged ? 1 : 0;
      }
      agg << mode_names[mi] << "," << it << "," << cfg.n_seeds << ","
          << fmt(quantile(dist, 0.5)) << "," << fmt(quantile(dist, 0.25))
          << "," << fmt(quantile(dist, 0.75)) << ","
          << fmt(quantile(cost, 0.5)) << "," << fmt(quantile(cost, 0.25))
          << "," << fmt(quantile(cost, 0.75)) << ","
          << fmt(quantile(rmse, 0.5)) << "," << fmt(quantile(rmse, 0.25))
          << "," << fmt(quantile(rmse, 0.75)) << ","
          << fmt(static_cast<double>(converged) / cfg.n_seeds) << "\n";
    }
  }

  write_manifest(cfg, "run", mode_names, nlohmann::json::object());
}

std::vector<Eigen::VectorXd> load_targets_csv(const std::string& path,
                                              int n_links) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open targets file " + path);
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput(path + ": missing header");
  {
    std::stringstream ss(line);
    std::string field;
    int col = 0;
    while (std::getline(ss, field, ',')) {
      if (field != "theta_" + std::to_string(col))
        throw InvalidInput(path + ": expected header theta_0..theta_" +
                           std::to_string(n_links - 1));
      ++col;
    }
    if (col != n_links)
      throw InvalidInput(path + ": expected " + std::to_string(n_links) +
                         " columns, got " + std::to_string(col));
  }
  std::vector<Eigen::VectorXd> targets;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    Eigen::VectorXd t(n_links);
    int col = 0;
    while (std::getline(ss, field, ',')) {
      if (col >= n_links)
        throw InvalidInput(path + ": too many fields on line " +
                           std::to_string(lineno));
      size_t pos = 0;
      try {
        t[col] = std::stod(field, &pos);
      } catch (const std::exception&) {
        throw InvalidInput(path + ": bad number '" + field + "' on line " +
                           std::to_string(lineno));
      }
      if (pos != field.size())
        throw InvalidInput(path + ": bad number '" + field + "' on line " +
                           std::to_string(lineno));
      ++col;
    }
    if (col != n_links)
      throw InvalidInput(path + ": wrong field count on line " +
                         std::to_string(lineno));
    targets.push_back(t);
  }
  if (targets.empty()) throw InvalidInput(path + ": no targets");
  return targets;
}

void save_targets_csv(const std::string& path,
                      const std::vector<Eigen::VectorXd>& targets) {
  if (targets.empty()) throw InvalidInput("no targets to save");
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot open " + path + " for writing");
  const int n = static_cast<int>(targets[0].size());
  for (int c = 0; c < n; ++c)
    out << "theta_" << c << (c + 1 < n ? "," : "\n");
  for (const Eigen::VectorXd& t : targets) {
    for (int c = 0; c < n; ++c)
      out << fmt17(t[c]) << (c + 1 < n ? "," : "\n");
  }
}

void run_transfer(const ExperimentConfig& cfg,
                  const std::vector<std::string>& model_paths,
                  const std::string& targets_path, std::ostream* progress) {
  cfg.validate();
  if (model_paths.empty()) throw InvalidInput("no model files given");
  std::vector<Eigen::VectorXd> targets =
      load_targets_csv(targets_path, cfg.arm.n_links);
  fs::create_directories(cfg.output_dir);

  std::ofstream out(fs::path(cfg.output_dir) / "transfer.csv");
  if (!out) throw InvalidInput("cannot write transfer.csv");
  out << "model,target_index";
  for (int c = 0; c < cfg.arm.n_links; ++c) out << ",theta_" << c;
  out << ",final_ee_distance\n";

  for (const std::string& mp : model_paths) {
    GpModel model = GpModel::load(mp);
    if (model.n_links() != cfg.arm.n_links)
      throw InvalidInput(mp + ": model n_links does not match config");
    std::vector<double> dist = evaluate_transfer(
        model, cfg.arm, targets, cfg.cost, cfg.solver, cfg.seed_base);
    const std::string name = fs::path(mp).filename().string();
    for (size_t i = 0; i < targets.size(); ++i) {
      out << name << "," << i;
      for (int c = 0; c < cfg.arm.n_links; ++c)
        out << "," << fmt(targets[i][c]);
      out << "," << fmt(dist[i]) << "\n";
    }
    if (progress)
      *progress << name << ": " << targets.size() << " targets done\n"
                << std::flush;
  }

  nlohmann::json extra;
  extra["model_files"] = model_paths;
  extra["targets_file"] = targets_path;
  write_manifest(cfg, "transfer", {}, extra);
}

void run_babble_only(const ExperimentConfig& cfg, std::ostream* progress) {
  cfg.validate();
  fs::create_directories(cfg.output_dir);
  const State s0 = State::zero(cfg.arm.n_links);
  for (int k = 0; k < cfg.n_seeds; ++k) {
    const std::uint64_t seed = cfg.seed_base + static_cast<std::uint64_t>(k);
    // Same derivation as run_experiment so the datasets match a full run.
    TransitionDataset data =
        motor_babble(cfg.arm, s0, cfg.babble_duration, cfg.babble_torque_std,
                     Rng(seed).fork(1).seed());
    data.save_csv(
        (fs::path(cfg.output_dir) / ("dataset_seed" + std::to_string(k) + ".csv"))
            .string());
    if (progress)
      *progress << "seed " << k << ": " << data.size() << " transitions\n"
                << std::flush;
  }
  write_manifest(cfg, "babble-only", {}, nlohmann::json::object());
}

}  // namespace curilqr
