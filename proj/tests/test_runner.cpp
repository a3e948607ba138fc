#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <json.hpp>

#include "curilqr/arm.hpp"
#include "curilqr/config.hpp"
#include "curilqr/dataset.hpp"
#include "curilqr/errors.hpp"
#include "curilqr/gp.hpp"
#include "curilqr/mbrl.hpp"
#include "curilqr/rng.hpp"
#include "curilqr/runner.hpp"
#include "temp_dir.hpp"

using namespace curilqr;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  CAPTURE(path);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line))
    if (!line.empty()) out.push_back(line);
  return out;
}

int count_fields(const std::string& line) {
  int n = 1;
  for (char c : line)
    if (c == ',') ++n;
  return n;
}

ExperimentConfig tiny_cfg(const std::string& out_dir) {
  ExperimentConfig cfg;
  cfg.solver.horizon = 16;
  cfg.solver.max_outer_iters = 6;
  cfg.n_iterations = 1;
  cfg.n_seeds = 1;
  cfg.seed_base = 4;
  cfg.output_dir = out_dir;
  cfg.fit.restarts = 1;
  cfg.fit.max_iters = 8;
  return cfg;
}

const char* kMetricsHeader =
    "iteration,final_ee_distance,rollout_cost,model_rmse,dataset_size,"
    "solver_converged";
const char* kTraceHeader =
    "solve_index,outer_iter,lambda,alpha,cost,expected_improvement,accepted";
const char* kAggregateHeader =
    "mode,iteration,n_seeds,"
    "ee_distance_median,ee_distance_q25,ee_distance_q75,"
    "rollout_cost_median,rollout_cost_q25,rollout_cost_q75,"
    "model_rmse_median,model_rmse_q25,model_rmse_q75,"
    "converged_fraction";

#ifdef CURILQR_CLI_PATH

int run_cli(const std::string& args, const std::string& capture_path) {
  const std::string cmd =
      std::string(CURILQR_CLI_PATH) + " " + args + " > " + capture_path +
      " 2>&1";
  const int raw = std::system(cmd.c_str());
  if (raw == -1) return -1;
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -2;
}

std::string write_tiny_config(testsupport::TempDir& td) {
  std::ofstream out(td.str("exp.cfg"));
  out << "config_version = 1\n"
         "horizon = 12\n"
         "max_outer_iters = 5\n"
         "n_iterations = 1\n"
         "n_seeds = 1\n"
         "seed_base = 11\n"
         "mode = curious\n"
         "sigma = -0.05\n"
         "gp_restarts = 1\n"
         "gp_max_iters = 6\n";
  return td.str("exp.cfg");
}

#endif  // CURILQR_CLI_PATH

}  // namespace

TEST_SUITE("runner") {

TEST_CASE("tiny experiment writes the full file layout") {
  testsupport::TempDir td("runner_layout");
  ExperimentConfig cfg = tiny_cfg(td.str("out"));
  run_experiments(cfg, {ExplorationKind::curious, ExplorationKind::normal},
                  nullptr);

  for (const std::string mode : {"curious", "normal"}) {
    const fs::path dir = fs::path(cfg.output_dir) / mode;
    CAPTURE(mode);

    const std::string metrics = slurp((dir / "metrics_seed0.csv").string());
    auto mlines = lines_of(metrics);
    REQUIRE(mlines.size() == 2);
    CHECK(mlines[0] == kMetricsHeader);
    CHECK(count_fields(mlines[1]) == 6);

    const std::string timing = slurp((dir / "timing_seed0.csv").string());
    auto tlines = lines_of(timing);
    REQUIRE(tlines.size() == 2);
    CHECK(tlines[0] == "iteration,wall_time");

    const std::string trace = slurp((dir / "trace_seed0.csv").string());
    auto trlines = lines_of(trace);
    REQUIRE(trlines.size() >= 2);
    CHECK(trlines[0] == kTraceHeader);
    for (size_t i = 1; i < trlines.size(); ++i)
      CHECK(count_fields(trlines[i]) == 7);

    const TransitionDataset data =
        TransitionDataset::load_csv((dir / "dataset_seed0.csv").string());
    CHECK(data.size() >= 120);

    GpModel model = GpModel::load((dir / "model_seed0").string());
    CHECK(model.fitted());
    CHECK(model.n_links() == 2);
  }

  auto agg = lines_of(slurp((fs::path(cfg.output_dir) / "aggregate.csv").string()));
  REQUIRE(agg.size() == 3);
  CHECK(agg[0] == kAggregateHeader);
  CHECK(agg[1].rfind("curious,0,1,", 0) == 0);
  CHECK(agg[2].rfind("normal,0,1,", 0) == 0);
  for (size_t i = 1; i < agg.size(); ++i) CHECK(count_fields(agg[i]) == 13);
}

TEST_CASE("manifest records the run and its config round trips") {
  testsupport::TempDir td("runner_manifest");
  ExperimentConfig cfg = tiny_cfg(td.str("out"));
  run_experiments(cfg, {ExplorationKind::curious}, nullptr);

  nlohmann::json m =
      nlohmann::json::parse(slurp((fs::path(cfg.output_dir) / "manifest").string()));
  CHECK(m.at("format").get<std::string>() == "curilqr-manifest");
  CHECK(m.at("version").get<int>() == 1);
  CHECK(m.at("code_version").get<std::string>() == kCodeVersion);
  CHECK(m.at("command").get<std::string>() == "run");
  REQUIRE(m.at("modes").size() == 1);
  CHECK(m.at("modes")[0].get<std::string>() == "curious");
  REQUIRE(m.at("seeds").size() == 1);
  CHECK(m.at("seeds")[0].get<std::uint64_t>() == 4);

  const std::string cfg_text = m.at("config").get<std::string>();
  ExperimentConfig back = ExperimentConfig::parse_string(cfg_text);
  CHECK(back.serialize() == cfg_text);
  CHECK(back.solver.horizon == 16);
  CHECK(back.seed_base == 4);
}

TEST_CASE("reruns with the same config are byte identical") {
  testsupport::TempDir td("runner_rerun");
  ExperimentConfig a = tiny_cfg(td.str("one"));
  ExperimentConfig b = tiny_cfg(td.str("two"));
  run_experiments(a, {ExplorationKind::curious}, nullptr);
  run_experiments(b, {ExplorationKind::curious}, nullptr);

  for (const std::string rel :
       {"curious/metrics_seed0.csv", "curious/trace_seed0.csv",
        "curious/dataset_seed0.csv", "curious/model_seed0", "aggregate.csv"}) {
    CAPTURE(rel);
    CHECK(slurp((fs::path(a.output_dir) / rel).string()) ==
          slurp((fs::path(b.output_dir) / rel).string()));
  }
}

TEST_CASE("babble-only datasets match the babble a full run would use") {
  testsupport::TempDir td("runner_babble");
  ExperimentConfig cfg = tiny_cfg(td.str("out"));
  cfg.seed_base = 21;
  run_babble_only(cfg, nullptr);

  TransitionDataset expected =
      motor_babble(cfg.arm, State::zero(cfg.arm.n_links), cfg.babble_duration,
                   cfg.babble_torque_std, Rng(21).fork(1).seed());
  expected.save_csv(td.str("expected.csv"));

  CHECK(slurp((fs::path(cfg.output_dir) / "dataset_seed0.csv").string()) ==
        slurp(td.str("expected.csv")));

  nlohmann::json m =
      nlohmann::json::parse(slurp((fs::path(cfg.output_dir) / "manifest").string()));
  CHECK(m.at("command").get<std::string>() == "babble-only");
}

TEST_CASE("transfer writes one row per model and target") {
  testsupport::TempDir td("runner_transfer");
  ExperimentConfig cfg = tiny_cfg(td.str("out"));
  cfg.solver.horizon = 10;
  cfg.solver.max_outer_iters = 4;

  TransitionDataset data = motor_babble(cfg.arm, State::zero(2), 0.5, 0.01, 5);
  GpModel model = GpModel::fit_optimized(data, 3, cfg.fit);
  const std::string model_a = td.str("model_a");
  const std::string model_b = td.str("model_b");
  model.save(model_a);
  model.save(model_b);

  std::vector<Eigen::VectorXd> targets;
  targets.push_back(Eigen::Vector2d(0.2, 0.1));
  targets.push_back(Eigen::Vector2d(0.5, -0.2));
  const std::string targets_path = td.str("targets.csv");
  save_targets_csv(targets_path, targets);

  run_transfer(cfg, {model_a, model_b}, targets_path, nullptr);

  auto rows = lines_of(slurp((fs::path(cfg.output_dir) / "transfer.csv").string()));
  REQUIRE(rows.size() == 5);
  CHECK(rows[0] == "model,target_index,theta_0,theta_1,final_ee_distance");
  CHECK(rows[1].rfind("model_a,0,", 0) == 0);
  CHECK(rows[2].rfind("model_a,1,", 0) == 0);
  CHECK(rows[3].rfind("model_b,0,", 0) == 0);
  CHECK(rows[4].rfind("model_b,1,", 0) == 0);
  for (size_t i = 1; i < rows.size(); ++i) {
    const std::string dist = rows[i].substr(rows[i].rfind(',') + 1);
    CHECK(std::stod(dist) >= 0.0);
    CHECK(std::isfinite(std::stod(dist)));
  }

  nlohmann::json m =
      nlohmann::json::parse(slurp((fs::path(cfg.output_dir) / "manifest").string()));
  CHECK(m.at("command").get<std::string>() == "transfer");
  CHECK(m.at("modes").empty());
  REQUIRE(m.at("model_files").size() == 2);
  CHECK(m.at("targets_file").get<std::string>() == targets_path);
}

TEST_CASE("targets csv round trips and rejects malformed files") {
  testsupport::TempDir td("runner_targets");
  std::vector<Eigen::VectorXd> targets;
  targets.push_back(Eigen::Vector2d(0.9, -0.6));
  targets.push_back(Eigen::Vector2d(-1.2345678901234567e-3, 2.5));
  const std::string path = td.str("t.csv");
  save_targets_csv(path, targets);

  std::vector<Eigen::VectorXd> back = load_targets_csv(path, 2);
  REQUIRE(back.size() == 2);
  for (size_t i = 0; i < 2; ++i)
    CHECK((back[i] - targets[i]).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(load_targets_csv(td.str("missing.csv"), 2), InvalidInput);
  CHECK_THROWS_AS(save_targets_csv(td.str("e.csv"), {}), InvalidInput);

  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream out(td.str(name));
    out << text;
    return td.str(name);
  };
  CHECK_THROWS_AS(load_targets_csv(write("h.csv", "a,b\n0,0\n"), 2),
                  InvalidInput);
  CHECK_THROWS_AS(load_targets_csv(write("n.csv", "theta_0\n0.1\n"), 2),
                  InvalidInput);
  CHECK_THROWS_AS(
      load_targets_csv(write("w.csv", "theta_0,theta_1\n0.1,0.2,0.3\n"), 2),
      InvalidInput);
  CHECK_THROWS_AS(
      load_targets_csv(write("b.csv", "theta_0,theta_1\n0.1,zap\n"), 2),
      InvalidInput);
  CHECK_THROWS_AS(load_targets_csv(write("o.csv", "theta_0,theta_1\n"), 2),
                  InvalidInput);
}

#ifdef CURILQR_CLI_PATH

TEST_CASE("cli validate-config prints the canonical form") {
  testsupport::TempDir td("cli_validate");
  const std::string cap = td.str("stdout.txt");
  REQUIRE(run_cli("validate-config", cap) == 0);
  CHECK(slurp(cap) == ExperimentConfig().serialize());

  const std::string cfg_path = write_tiny_config(td);
  REQUIRE(run_cli("--config " + cfg_path + " validate-config", cap) == 0);
  const std::string text = slurp(cap);
  CHECK(text.find("seed_base = 11") != std::string::npos);
  CHECK(text.find("horizon = 12") != std::string::npos);
  ExperimentConfig parsed = ExperimentConfig::parse_string(text);
  CHECK(parsed.solver.horizon == 12);
}

TEST_CASE("cli run, babble-only and transfer execute end to end") {
  testsupport::TempDir td("cli_run");
  const std::string cfg_path = write_tiny_config(td);
  const std::string cap = td.str("log.txt");

  REQUIRE(run_cli("--config " + cfg_path + " --out " + td.str("run_out") +
                      " run",
                  cap) == 0);
  CHECK(fs::exists(td.path() / "run_out" / "curious" / "metrics_seed0.csv"));
  CHECK(fs::exists(td.path() / "run_out" / "aggregate.csv"));
  CHECK(fs::exists(td.path() / "run_out" / "manifest"));

  REQUIRE(run_cli("--config " + cfg_path + " --out " + td.str("babble_out") +
                      " babble-only",
                  cap) == 0);
  const TransitionDataset data =
      TransitionDataset::load_csv(td.str("babble_out") + "/dataset_seed0.csv");
  CHECK(data.size() == 120);

  std::vector<Eigen::VectorXd> targets;
  targets.push_back(Eigen::Vector2d(0.3, 0.2));
  save_targets_csv(td.str("targets.csv"), targets);
  REQUIRE(run_cli("--config " + cfg_path + " --out " + td.str("tx_out") +
                      " transfer --model " + td.str("run_out") +
                      "/curious/model_seed0 --targets " + td.str("targets.csv"),
                  cap) == 0);
  auto rows = lines_of(slurp(td.str("tx_out") + "/transfer.csv"));
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].rfind("model_seed0,0,", 0) == 0);
}

TEST_CASE("cli rejects bad invocations") {
  testsupport::TempDir td("cli_bad");
  const std::string cap = td.str("err.txt");
  CHECK(run_cli("--nonsense", cap) != 0);
  CHECK(run_cli("", cap) != 0);
  CHECK(run_cli("transfer", cap) != 0);
  CHECK(run_cli("--config " + td.str("missing.cfg") + " run", cap) != 0);
  CHECK(slurp(cap).find("error:") != std::string::npos);
}

#endif  // CURILQR_CLI_PATH

}  // TEST_SUITE("runner")
