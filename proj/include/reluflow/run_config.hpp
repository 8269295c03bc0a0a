#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "reluflow/flow.hpp"

namespace reluflow {

/// Parameters shared by all CLI commands. Every field is serialized; on
/// input, absent keys keep their defaults and unknown keys are rejected.
struct RunConfig {
  double gamma = 2.0;
  double alpha = 1.0;
  std::vector<double> epsilon_grid{1.0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5};
  double lr = 1e-5;
  double step = 1e-4;
  double t_max = 50.0;
  double loss_tol = 1e-14;
  double grad_tol = 1e-10;
  double grid_dt = 1e-2;  // closed-form sampling grid
  std::uint64_t seed = 20240601;
  std::string out = ".";
  std::string format = "csv";  // csv | json
  std::string filter;
  std::string dataset;          // path; empty selects (X_gamma, y_alpha)
  std::string activation = "relu";
  std::string mode = "flow";    // flow | gd
  bool fast = false;
  bool inject_fault = false;

  void validate() const;

  FlowConfig flow_config() const;
  /// GD settings; `loss_tol` of the hidden-neuron experiments is 1e-15.
  GdConfig gd_config() const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

nlohmann::json run_config_to_json(const RunConfig& c);
/// Overlays `j` onto `base`.
RunConfig run_config_from_json(const nlohmann::json& j, RunConfig base = {});
/// Parse errors are reported with the byte position.
RunConfig read_run_config(const std::filesystem::path& path);

}  // namespace reluflow
