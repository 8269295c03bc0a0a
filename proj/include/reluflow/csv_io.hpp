#pragma once

// Artifact formats. Numbers are written with %.17g so they read back exactly.
//   trajectory:        t,w1,...,wd,loss,pattern
//   hidden trajectory: t,u1,...,ud,v,loss
//   sweep:             epsilon,u1,...,ud,final_loss,iters

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "reluflow/hidden_lab.hpp"

namespace reluflow {

std::string format_double(double x);

void write_trajectory_csv(std::ostream& out, const Trajectory& traj);
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj);
/// Samples only; events are not part of the CSV.
Trajectory read_trajectory_csv(std::istream& in, const std::string& source = "<stream>");
Trajectory read_trajectory_csv(const std::filesystem::path& path);

void write_hidden_csv(std::ostream& out, const std::vector<HiddenSample>& trace);
void write_hidden_csv(const std::filesystem::path& path, const std::vector<HiddenSample>& trace);
/// Rows as (t, u, v, loss); w is reconstructed as u / v.
std::vector<HiddenSample> read_hidden_csv(std::istream& in, const std::string& source = "<stream>");

void write_sweep_csv(std::ostream& out, const EpsilonSweep& sweep);
void write_sweep_csv(const std::filesystem::path& path, const EpsilonSweep& sweep);
EpsilonSweep read_sweep_csv(std::istream& in, const std::string& source = "<stream>");

nlohmann::json flow_result_to_json(const FlowResult& r);
FlowResult flow_result_from_json(const nlohmann::json& j);

nlohmann::json events_to_json(const std::vector<RegimeEvent>& events);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace reluflow
