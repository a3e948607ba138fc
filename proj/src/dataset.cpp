#include "curilqr/dataset.hpp"

#include <cstdio>
#include <fstream>
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

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  return fields;
}

}  // namespace

void TransitionDataset::append_row(const Eigen::VectorXd& z,
                                   const Eigen::VectorXd& y) {
  if (n_links == 0) throw InvalidInput("dataset n_links not set");
  if (z.size() != 3 * n_links || y.size() != n_links)
    throw InvalidInput("transition row has wrong dimensions");
  const int r = size();
  inputs.conservativeResize(r + 1, 3 * n_links);
  targets.conservativeResize(r + 1, n_links);
  inputs.row(r) = z.transpose();
  targets.row(r) = y.transpose();
}

void TransitionDataset::append(const TransitionDataset& other) {
  if (other.empty()) return;
  if (n_links == 0 && empty()) {
    *this = other;
    return;
  }
  if (other.n_links != n_links)
    throw InvalidInput("appending dataset with different n_links");
  const int r = size();
  inputs.conservativeResize(r + other.size(), 3 * n_links);
  targets.conservativeResize(r + other.size(), n_links);
  inputs.bottomRows(other.size()) = other.inputs;
  targets.bottomRows(other.size()) = other.targets;
}

void TransitionDataset::save_csv(const std::string& path) const {
  if (n_links == 0) throw InvalidInput("dataset n_links not set");
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot open " + path + " for writing");
  for (int j = 0; j < n_links; ++j) out << "theta_" << j << ",";
  for (int j = 0; j < n_links; ++j) out << "theta_dot_" << j << ",";
  for (int j = 0; j < n_links; ++j) out << "tau_" << j << ",";
  for (int j = 0; j < n_links; ++j)
    out << "accel_" << j << (j + 1 < n_links ? "," : "");
  out << "\n";
  for (int r = 0; r < size(); ++r) {
    for (int c = 0; c < inputs.cols(); ++c)
      out << format_value(inputs(r, c)) << ",";
    for (int c = 0; c < targets.cols(); ++c)
      out << format_value(targets(r, c)) << (c + 1 < targets.cols() ? "," : "");
    out << "\n";
  }
  if (!out) throw InvalidInput("failed writing " + path);
}

TransitionDataset TransitionDataset::load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput(path + ": missing header");
  std::vector<std::string> header = split_csv_line(line);
  if (header.size() < 4 || header.size() % 4 != 0)
    throw InvalidInput(path + ": header must have 4*n_links columns");
  const int n = static_cast<int>(header.size()) / 4;
  for (int j = 0; j < n; ++j) {
    if (header[j] != "theta_" + std::to_string(j) ||
        header[n + j] != "theta_dot_" + std::to_string(j) ||
        header[2 * n + j] != "tau_" + std::to_string(j) ||
        header[3 * n + j] != "accel_" + std::to_string(j))
      throw InvalidInput(path + ": unexpected header column " + header[j]);
  }

  std::vector<double> values;
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw InvalidInput(path + ": row " + std::to_string(rows + 1) +
                         " has wrong field count");
    for (const std::string& f : fields) {
      size_t pos = 0;
      double v = 0.0;
      try {
        v = std::stod(f, &pos);
      } catch (const std::exception&) {
        throw InvalidInput(path + ": bad numeric field '" + f + "'");
      }
      if (pos != f.size())
        throw InvalidInput(path + ": bad numeric field '" + f + "'");
      values.push_back(v);
    }
    ++rows;
  }

  TransitionDataset data;
  data.n_links = n;
  data.inputs.resize(rows, 3 * n);
  data.targets.resize(rows, n);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < 3 * n; ++c) data.inputs(r, c) = values[r * 4 * n + c];
    for (int c = 0; c < n; ++c)
      data.targets(r, c) = values[r * 4 * n + 3 * n + c];
  }
  return data;
}

}  // namespace curilqr
