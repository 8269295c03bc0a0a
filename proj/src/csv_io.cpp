#include "reluflow/csv_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "reluflow/dataset_io.hpp"

namespace reluflow {

using nlohmann::json;

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

[[noreturn]] void fail(const std::string& source, std::size_t row, const std::string& what) {
  std::ostringstream msg;
  msg << source << ": row " << row << ": " << what;
  throw DomainError(msg.str());
}

double parse_double(const std::string& s, const std::string& source, std::size_t row) {
  if (s == "nan") return std::nan("");
  char* end = nullptr;
  const double x = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) fail(source, row, "not a number: '" + s + "'");
  return x;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

Table read_table(std::istream& in, const std::string& source) {
  Table t;
  std::string line;
  if (!std::getline(in, line) || line.empty()) fail(source, 0, "missing header");
  if (line.back() == '\r') line.pop_back();
  t.header = split(line);
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != t.header.size()) {
      fail(source, row, "expected " + std::to_string(t.header.size()) + " fields, found " +
                            std::to_string(cells.size()));
    }
    t.rows.push_back(std::move(cells));
  }
  return t;
}

// Number of indexed columns prefix1..prefixk starting at `first`.
std::size_t count_indexed(const std::vector<std::string>& header, std::size_t first, char prefix) {
  std::size_t k = 0;
  while (first + k < header.size() && header[first + k] == std::string(1, prefix) + std::to_string(k + 1)) ++k;
  return k;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DomainError("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open " + path.string());
  return in;
}

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  const Eigen::Index d = traj.samples.empty() ? 0 : traj.samples.front().w.size();
  out << "t";
  for (Eigen::Index j = 1; j <= d; ++j) out << ",w" << j;
  out << ",loss,pattern\n";
  for (const auto& s : traj.samples) {
    out << format_double(s.t);
    for (Eigen::Index j = 0; j < d; ++j) out << ',' << format_double(s.w(j));
    out << ',' << format_double(s.loss) << ',' << s.pattern.str() << '\n';
  }
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
  auto out = open_out(path);
  write_trajectory_csv(out, traj);
}

Trajectory read_trajectory_csv(std::istream& in, const std::string& source) {
  const Table t = read_table(in, source);
  const std::size_t d = count_indexed(t.header, 1, 'w');
  if (t.header.empty() || t.header[0] != "t" || d == 0 || t.header.size() != d + 3 ||
      t.header[d + 1] != "loss" || t.header[d + 2] != "pattern") {
    fail(source, 0, "expected header t,w1,...,wd,loss,pattern");
  }
  Trajectory traj;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    TrajectorySample s;
    s.t = parse_double(row[0], source, r + 1);
    s.w.resize(static_cast<Eigen::Index>(d));
    for (std::size_t j = 0; j < d; ++j) s.w(static_cast<Eigen::Index>(j)) = parse_double(row[j + 1], source, r + 1);
    s.loss = parse_double(row[d + 1], source, r + 1);
    try {
      s.pattern = RegimePattern::parse(row[d + 2]);
    } catch (const DomainError& e) {
      fail(source, r + 1, e.what());
    }
    traj.samples.push_back(std::move(s));
  }
  return traj;
}

Trajectory read_trajectory_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_trajectory_csv(in, path.string());
}

void write_hidden_csv(std::ostream& out, const std::vector<HiddenSample>& trace) {
  const Eigen::Index d = trace.empty() ? 0 : trace.front().w.size();
  out << "t";
  for (Eigen::Index j = 1; j <= d; ++j) out << ",u" << j;
  out << ",v,loss\n";
  for (const auto& s : trace) {
    const Vector u = s.u();
    out << format_double(s.t);
    for (Eigen::Index j = 0; j < d; ++j) out << ',' << format_double(u(j));
    out << ',' << format_double(s.v) << ',' << format_double(s.loss) << '\n';
  }
}

void write_hidden_csv(const std::filesystem::path& path, const std::vector<HiddenSample>& trace) {
  auto out = open_out(path);
  write_hidden_csv(out, trace);
}

std::vector<HiddenSample> read_hidden_csv(std::istream& in, const std::string& source) {
  const Table t = read_table(in, source);
  const std::size_t d = count_indexed(t.header, 1, 'u');
  if (t.header.empty() || t.header[0] != "t" || d == 0 || t.header.size() != d + 3 ||
      t.header[d + 1] != "v" || t.header[d + 2] != "loss") {
    fail(source, 0, "expected header t,u1,...,ud,v,loss");
  }
  std::vector<HiddenSample> trace;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    HiddenSample s;
    s.t = parse_double(row[0], source, r + 1);
    Vector u(static_cast<Eigen::Index>(d));
    for (std::size_t j = 0; j < d; ++j) u(static_cast<Eigen::Index>(j)) = parse_double(row[j + 1], source, r + 1);
    s.v = parse_double(row[d + 1], source, r + 1);
    s.loss = parse_double(row[d + 2], source, r + 1);
    s.w = s.v != 0 ? Vector(u / s.v) : Vector::Zero(u.size());
    trace.push_back(std::move(s));
  }
  return trace;
}

void write_sweep_csv(std::ostream& out, const EpsilonSweep& sweep) {
  const Eigen::Index d = sweep.cells.empty() ? 3 : sweep.cells.front().u_final.size();
  out << "epsilon";
  for (Eigen::Index j = 1; j <= d; ++j) out << ",u" << j;
  out << ",final_loss,iters\n";
  for (const auto& c : sweep.cells) {
    out << format_double(c.epsilon);
    for (Eigen::Index j = 0; j < d; ++j) out << ',' << format_double(c.u_final(j));
    out << ',' << format_double(c.final_loss) << ',' << c.iters << '\n';
  }
}

void write_sweep_csv(const std::filesystem::path& path, const EpsilonSweep& sweep) {
  auto out = open_out(path);
  write_sweep_csv(out, sweep);
}

EpsilonSweep read_sweep_csv(std::istream& in, const std::string& source) {
  const Table t = read_table(in, source);
  const std::size_t d = count_indexed(t.header, 1, 'u');
  if (t.header.empty() || t.header[0] != "epsilon" || d == 0 || t.header.size() != d + 3 ||
      t.header[d + 1] != "final_loss" || t.header[d + 2] != "iters") {
    fail(source, 0, "expected header epsilon,u1,...,ud,final_loss,iters");
  }
  EpsilonSweep sweep;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    SweepCell c;
    c.epsilon = parse_double(row[0], source, r + 1);
    c.u_final.resize(static_cast<Eigen::Index>(d));
    for (std::size_t j = 0; j < d; ++j) c.u_final(static_cast<Eigen::Index>(j)) = parse_double(row[j + 1], source, r + 1);
    c.final_loss = parse_double(row[d + 1], source, r + 1);
    const double iters = parse_double(row[d + 2], source, r + 1);
    if (iters < 0 || iters != std::floor(iters)) fail(source, r + 1, "iters must be a non-negative integer");
    c.iters = static_cast<std::size_t>(iters);
    c.diverged = std::isnan(c.final_loss);
    sweep.cells.push_back(std::move(c));
  }
  return sweep;
}

json flow_result_to_json(const FlowResult& r) {
  json w = json::array();
  for (Eigen::Index i = 0; i < r.w_inf.size(); ++i) w.push_back(number_or_null(r.w_inf(i)));
  return json{{"w_inf", w},
              {"converged", r.converged},
              {"final_loss", number_or_null(r.final_loss)},
              {"final_grad_norm", number_or_null(r.final_grad_norm)},
              {"t_end", r.t_end},
              {"steps", r.steps}};
}

FlowResult flow_result_from_json(const json& j) {
  static const char* const keys[] = {"w_inf", "converged", "final_loss", "final_grad_norm", "t_end", "steps"};
  if (!j.is_object()) throw DomainError("FlowResult JSON must be an object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(std::begin(keys), std::end(keys), key) == std::end(keys)) {
      throw DomainError("FlowResult JSON: unknown key \"" + key + "\"");
    }
  }
  for (const char* k : keys) {
    if (!j.contains(k)) throw DomainError(std::string("FlowResult JSON: missing key \"") + k + "\"");
  }
  auto num = [](const json& v) { return v.is_null() ? std::nan("") : v.get<double>(); };
  FlowResult r;
  const json& w = j.at("w_inf");
  if (!w.is_array()) throw DomainError("FlowResult JSON: \"w_inf\" must be an array");
  r.w_inf.resize(static_cast<Eigen::Index>(w.size()));
  for (std::size_t i = 0; i < w.size(); ++i) r.w_inf(static_cast<Eigen::Index>(i)) = num(w[i]);
  r.converged = j.at("converged").get<bool>();
  r.final_loss = num(j.at("final_loss"));
  r.final_grad_norm = num(j.at("final_grad_norm"));
  r.t_end = j.at("t_end").get<double>();
  r.steps = j.at("steps").get<std::size_t>();
  return r;
}

json events_to_json(const std::vector<RegimeEvent>& events) {
  json out = json::array();
  for (const auto& e : events) {
    out.push_back({{"t", e.t},
                   {"example", e.example + 1},
                   {"from", std::string(1, static_cast<char>(e.from))},
                   {"to", std::string(1, static_cast<char>(e.to))}});
  }
  return out;
}

void write_json(const std::filesystem::path& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

}  // namespace reluflow
