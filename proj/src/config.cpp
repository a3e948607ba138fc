#include "curilqr/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "curilqr/errors.hpp"

namespace curilqr {

namespace {

std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  size_t pos = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw InvalidInput("config key '" + key + "': bad number '" + v + "'");
  }
  if (pos != v.size())
    throw InvalidInput("config key '" + key + "': bad number '" + v + "'");
  return x;
}

long long parse_int(const std::string& key, const std::string& v) {
  size_t pos = 0;
  long long x = 0;
  try {
    x = std::stoll(v, &pos);
  } catch (const std::exception&) {
    throw InvalidInput("config key '" + key + "': bad integer '" + v + "'");
  }
  if (pos != v.size())
    throw InvalidInput("config key '" + key + "': bad integer '" + v + "'");
  return x;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw InvalidInput("config key '" + key + "': expected true/false, got '" +
                     v + "'");
}

std::vector<double> parse_vector(const std::string& key,
                                 const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty())
      throw InvalidInput("config key '" + key + "': empty vector entry");
    out.push_back(parse_double(key, item));
  }
  if (out.empty())
    throw InvalidInput("config key '" + key + "': empty vector");
  return out;
}

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  Eigen::VectorXd x(static_cast<int>(v.size()));
  for (size_t i = 0; i < v.size(); ++i) x[static_cast<int>(i)] = v[i];
  return x;
}

std::string join(const Eigen::VectorXd& v) {
  std::string s;
  for (int i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += format_value(v[i]);
  }
  return s;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += format_value(v[i]);
  }
  return s;
}

}  // namespace

std::string mode_name(ExplorationKind kind) {
  switch (kind) {
    case ExplorationKind::curious:
      return "curious";
    case ExplorationKind::normal:
      return "normal";
    case ExplorationKind::random:
      return "random";
  }
  throw InvalidInput("unknown exploration kind");
}

ExplorationKind mode_from_name(const std::string& name) {
  if (name == "curious") return ExplorationKind::curious;
  if (name == "normal") return ExplorationKind::normal;
  if (name == "random") return ExplorationKind::random;
  throw InvalidInput("unknown mode '" + name +
                     "' (expected curious, normal, or random)");
}

ExperimentConfig::ExperimentConfig() {
  cost.target_theta = Eigen::Vector2d(0.9, 0.6);
  mode.noise_std = std::sqrt(0.2);
}

MbrlOptions ExperimentConfig::mbrl_options() const {
  MbrlOptions o;
  o.babble_duration = babble_duration;
  o.babble_torque_std = babble_torque_std;
  o.cold_start = cold_start;
  o.fit = fit;
  return o;
}

ExperimentConfig ExperimentConfig::parse_string(const std::string& text) {
  ExperimentConfig c;
  std::map<std::string, std::string> kv;
  std::vector<std::string> unknown;

  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InvalidInput("config line " + std::to_string(lineno) +
                         ": expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw InvalidInput("config line " + std::to_string(lineno) +
                         ": empty key or value");
    if (kv.count(key))
      throw InvalidInput("config key '" + key + "' given twice");
    kv[key] = value;
  }

  auto take = [&](const char* key) -> std::string {
    auto it = kv.find(key);
    if (it == kv.end()) return "";
    std::string v = it->second;
    kv.erase(it);
    return v;
  };
  auto take_double = [&](const char* key, double& out) {
    std::string v = take(key);
    if (!v.empty()) out = parse_double(key, v);
  };
  auto take_int = [&](const char* key, int& out) {
    std::string v = take(key);
    if (!v.empty()) out = static_cast<int>(parse_int(key, v));
  };
  auto take_bool = [&](const char* key, bool& out) {
    std::string v = take(key);
    if (!v.empty()) out = parse_bool(key, v);
  };
  auto take_vec = [&](const char* key, Eigen::VectorXd& out) {
    std::string v = take(key);
    if (!v.empty()) out = to_eigen(parse_vector(key, v));
  };

  std::string ver = take("config_version");
  if (!ver.empty() && ver != "1")
    throw InvalidInput("unsupported config_version '" + ver + "'");

  take_int("n_links", c.arm.n_links);
  take_vec("link_lengths", c.arm.link_lengths);
  take_vec("link_masses", c.arm.link_masses);
  take_vec("link_inertias", c.arm.link_inertias);
  take_vec("com_offsets", c.arm.com_offsets);
  take_vec("joint_damping", c.arm.joint_damping);
  take_vec("torque_limits", c.arm.torque_limits);
  take_double("gravity", c.arm.gravity);
  double dt = c.arm.dt;
  take_double("dt", dt);
  c.arm.dt = dt;
  c.solver.dt = dt;

  take_vec("target_theta", c.cost.target_theta);
  take_double("q_pos", c.cost.q_pos);
  take_double("q_vel", c.cost.q_vel);
  take_double("r_ctrl", c.cost.r_ctrl);
  take_double("terminal_scale", c.cost.terminal_scale);

  take_double("sigma", c.mode.sigma);
  take_int("horizon", c.solver.horizon);
  take_int("max_outer_iters", c.solver.max_outer_iters);
  {
    std::string v = take("line_search_alphas");
    if (!v.empty()) c.solver.line_search_alphas = parse_vector("line_search_alphas", v);
  }
  take_double("lambda_init", c.solver.lambda_init);
  take_double("lambda_scale", c.solver.lambda_scale);
  take_double("lambda_max", c.solver.lambda_max);
  take_double("convergence_tol", c.solver.convergence_tol);
  take_double("init_torque_std", c.solver.init_torque_std);
  take_double("velocity_bound", c.solver.velocity_bound);

  {
    std::string v = take("mode");
    if (!v.empty()) c.mode.kind = mode_from_name(v);
  }
  take_double("mode_noise_std", c.mode.noise_std);

  take_int("n_iterations", c.n_iterations);
  take_int("n_seeds", c.n_seeds);
  {
    std::string v = take("seed_base");
    if (!v.empty())
      c.seed_base = static_cast<std::uint64_t>(parse_int("seed_base", v));
  }
  {
    std::string v = take("output_dir");
    if (!v.empty()) c.output_dir = v;
  }
  take_double("babble_duration", c.babble_duration);
  take_double("babble_torque_std", c.babble_torque_std);
  take_bool("cold_start", c.cold_start);
  take_int("workers", c.workers);

  take_int("gp_restarts", c.fit.restarts);
  take_int("gp_max_iters", c.fit.max_iters);
  take_double("gp_bound_lo", c.fit.bound_lo);
  take_double("gp_bound_hi", c.fit.bound_hi);
  take_int("gp_subset_cap", c.fit.subset_cap);

  if (!kv.empty()) {
    std::string msg = "unknown config keys:";
    for (const auto& [k, v] : kv) msg += " " + k;
    throw InvalidInput(msg);
  }

  c.solver.sigma = c.mode.solver_sigma();
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_string(buf.str());
}

std::string ExperimentConfig::serialize() const {
  std::ostringstream o;
  o << "config_version = 1\n";
  o << "n_links = " << arm.n_links << "\n";
  o << "link_lengths = " << join(arm.link_lengths) << "\n";
  o << "link_masses = " << join(arm.link_masses) << "\n";
  o << "link_inertias = " << join(arm.link_inertias) << "\n";
  o << "com_offsets = " << join(arm.com_offsets) << "\n";
  o << "joint_damping = " << join(arm.joint_damping) << "\n";
  o << "torque_limits = " << join(arm.torque_limits) << "\n";
  o << "gravity = " << format_value(arm.gravity) << "\n";
  o << "dt = " << format_value(arm.dt) << "\n";
  o << "target_theta = " << join(cost.target_theta) << "\n";
  o << "q_pos = " << format_value(cost.q_pos) << "\n";
  o << "q_vel = " << format_value(cost.q_vel) << "\n";
  o << "r_ctrl = " << format_value(cost.r_ctrl) << "\n";
  o << "terminal_scale = " << format_value(cost.terminal_scale) << "\n";
  o << "sigma = " << format_value(mode.sigma) << "\n";
  o << "horizon = " << solver.horizon << "\n";
  o << "max_outer_iters = " << solver.max_outer_iters << "\n";
  o << "line_search_alphas = " << join(solver.line_search_alphas) << "\n";
  o << "lambda_init = " << format_value(solver.lambda_init) << "\n";
  o << "lambda_scale = " << format_value(solver.lambda_scale) << "\n";
  o << "lambda_max = " << format_value(solver.lambda_max) << "\n";
  o << "convergence_tol = " << format_value(solver.convergence_tol) << "\n";
  o << "init_torque_std = " << format_value(solver.init_torque_std) << "\n";
  o << "velocity_bound = " << format_value(solver.velocity_bound) << "\n";
  o << "mode = " << mode_name(mode.kind) << "\n";
  o << "mode_noise_std = " << format_value(mode.noise_std) << "\n";
  o << "n_iterations = " << n_iterations << "\n";
  o << "n_seeds = " << n_seeds << "\n";
  o << "seed_base = " << seed_base << "\n";
  o << "output_dir = " << output_dir << "\n";
  o << "babble_duration = " << format_value(babble_duration) << "\n";
  o << "babble_torque_std = " << format_value(babble_torque_std) << "\n";
  o << "cold_start = " << (cold_start ? "true" : "false") << "\n";
  o << "workers = " << workers << "\n";
  o << "gp_restarts = " << fit.restarts << "\n";
  o << "gp_max_iters = " << fit.max_iters << "\n";
  o << "gp_bound_lo = " << format_value(fit.bound_lo) << "\n";
  o << "gp_bound_hi = " << format_value(fit.bound_hi) << "\n";
  o << "gp_subset_cap = " << fit.subset_cap << "\n";
  return o.str();
}

void ExperimentConfig::validate() const {
  arm.validate();
  cost.validate(arm.n_links);
  SolverConfig s = solver;
  s.sigma = mode.solver_sigma();
  s.validate();
  mode.validate();
  if (std::abs(arm.dt - solver.dt) > 0.0)
    throw InvalidInput("solver dt must equal arm dt");
  if (n_iterations < 0) throw InvalidInput("n_iterations must be >= 0");
  if (n_seeds < 1) throw InvalidInput("n_seeds must be >= 1");
  if (output_dir.empty()) throw InvalidInput("output_dir must not be empty");
  if (!(babble_duration > 0.0))
    throw InvalidInput("babble_duration must be positive");
  if (babble_torque_std < 0.0)
    throw InvalidInput("babble_torque_std must be >= 0");
  if (workers < 1) throw InvalidInput("workers must be >= 1");
  if (fit.restarts < 0 || fit.max_iters < 1 || fit.subset_cap < 0)
    throw InvalidInput("bad gp fit options");
  if (!(fit.bound_lo > 0.0) || !(fit.bound_hi > fit.bound_lo))
    throw InvalidInput("bad gp hyperparameter bounds");
}

}  // namespace curilqr
