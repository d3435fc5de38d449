// vbridge - variational bridge models for time-coarsened stochastic dynamics
// Copyright 2026 The vbridge Authors
// SPDX-License-Identifier: Apache-2.0

#include "vbridge/io.hpp"

#include "vbridge/errors.hpp"

#include "json_detail.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace vbridge {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_cell(const std::string& cell, const std::string& origin, std::size_t line_no) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  std::size_t end = used;
  while (end < cell.size() && (cell[end] == ' ' || cell[end] == '\r')) ++end;
  if (used == 0 || end != cell.size()) {
    throw DataError(origin + ":" + std::to_string(line_no) + ": cannot parse number '" + cell + "'");
  }
  return v;
}

// Data rows of a headed CSV; every row must match the header width.
std::vector<std::vector<double>> read_rows(const std::string& text, const std::string& origin,
                                           std::vector<std::string>& header) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw DataError(origin + ": missing CSV header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  header = split_csv_line(line);
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw DataError(origin + ":" + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                      " columns, found " + std::to_string(cells.size()));
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(parse_cell(c, origin, line_no));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

NumericCsv read_numeric_csv(const fs::path& path) {
  NumericCsv out;
  out.rows = read_rows(read_text_file(path), path.string(), out.header);
  return out;
}

void write_text_atomic(const fs::path& path, const std::string& contents) {
  const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  std::error_code ec;
  fs::create_directories(dir, ec);
  const fs::path tmp = dir / ("." + path.filename().string() + ".tmp" + std::to_string(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open '" + tmp.string() + "' for writing");
    out << contents;
    out.flush();
    if (!out) throw DataError("failed writing '" + tmp.string() + "'");
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw DataError("cannot move temporary file into '" + path.string() + "'");
  }
}

std::string trajectory_to_csv(const Trajectory& traj) {
  std::string out = "step";
  const Eigen::Index d = traj.empty() ? 0 : traj.front().size();
  for (Eigen::Index i = 0; i < d; ++i) out += ",x_" + std::to_string(i);
  out += '\n';
  for (std::size_t n = 0; n < traj.size(); ++n) {
    if (traj[n].size() != d) throw ShapeError("trajectory frames differ in dimension");
    out += std::to_string(n);
    for (Eigen::Index i = 0; i < d; ++i) out += "," + fmt17(traj[n][i]);
    out += '\n';
  }
  return out;
}

Trajectory trajectory_from_csv(const std::string& text, const std::string& origin) {
  std::vector<std::string> header;
  const auto rows = read_rows(text, origin, header);
  if (header.size() < 2 || header.front() != "step") {
    throw DataError(origin + ": trajectory header must be `step,x_0,...`");
  }
  Trajectory traj;
  traj.reserve(rows.size());
  for (const auto& r : rows) traj.push_back(Eigen::Map<const Vector>(r.data() + 1, static_cast<Eigen::Index>(r.size() - 1)));
  return traj;
}

void write_trajectory_csv(const fs::path& path, const Trajectory& traj) {
  write_text_atomic(path, trajectory_to_csv(traj));
}

Trajectory read_trajectory_csv(const fs::path& path) {
  return trajectory_from_csv(read_text_file(path), path.string());
}

void write_pairs_csv(const fs::path& path, const PairDataset& data) {
  const Eigen::Index d = data.pairs.empty() ? 0 : data.pairs.front().first.size();
  std::string out;
  for (Eigen::Index i = 0; i < d; ++i) out += (i ? ",x_t_" : "x_t_") + std::to_string(i);
  for (Eigen::Index i = 0; i < d; ++i) out += ",x_tau_" + std::to_string(i);
  out += '\n';
  for (const auto& [a, b] : data.pairs) {
    if (a.size() != d || b.size() != d) throw ShapeError("pair members differ in dimension");
    for (Eigen::Index i = 0; i < d; ++i) out += (i ? "," : "") + fmt17(a[i]);
    for (Eigen::Index i = 0; i < d; ++i) out += "," + fmt17(b[i]);
    out += '\n';
  }
  write_text_atomic(path, out);
}

PairDataset read_pairs_csv(const fs::path& path, std::size_t tau_frames) {
  std::vector<std::string> header;
  const auto rows = read_rows(read_text_file(path), path.string(), header);
  if (header.empty() || header.size() % 2 != 0 || header.front() != "x_t_0") {
    throw DataError(path.string() + ": pair header must be `x_t_0,...,x_tau_0,...`");
  }
  const auto d = static_cast<Eigen::Index>(header.size() / 2);
  PairDataset data;
  data.tau_frames = tau_frames;
  for (const auto& r : rows) {
    data.pairs.emplace_back(Eigen::Map<const Vector>(r.data(), d), Eigen::Map<const Vector>(r.data() + d, d));
  }
  return data;
}

std::string net_to_json_text(const Net& net) {
  json layers = json::array();
  for (const auto& l : net.layers()) {
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(l.weight.size()));
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) w.push_back(l.weight(r, c));
    }
    layers.push_back({{"rows", l.weight.rows()},
                      {"cols", l.weight.cols()},
                      {"weight", w},
                      {"bias", std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size())}});
  }
  return json{{"spec", detail::net_spec_json(net.spec())}, {"layers", layers}}.dump();
}

Net net_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("malformed network JSON: ") + e.what());
  }
  try {
    if (!j.is_object() || !j.contains("spec") || !j.contains("layers")) {
      throw DataError("network JSON needs `spec` and `layers`");
    }
    NetSpec spec;
    detail::read_net_spec(j.at("spec"), "spec", spec);
    spec.validate();
    std::vector<Layer> layers;
    for (const auto& lj : j.at("layers")) {
      const auto rows = lj.at("rows").get<Eigen::Index>();
      const auto cols = lj.at("cols").get<Eigen::Index>();
      const auto w = lj.at("weight").get<std::vector<double>>();
      const auto b = lj.at("bias").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(w.size()) != rows * cols || static_cast<Eigen::Index>(b.size()) != rows) {
        throw DataError("network JSON layer sizes are inconsistent");
      }
      Layer l;
      l.weight = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(w.data(), rows, cols);
      l.bias = Eigen::Map<const Vector>(b.data(), rows);
      layers.push_back(std::move(l));
    }
    return Net(std::move(spec), std::move(layers));
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed network JSON: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("malformed network JSON: ") + e.what());
  }
}

fs::path sidecar_path(const fs::path& artifact) {
  return fs::path(artifact.string() + ".meta.json");
}

}  // namespace vbridge
