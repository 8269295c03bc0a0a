#include "reluflow/run_config.hpp"

#include <fstream>
#include <iterator>
#include <sstream>

#include "reluflow/model.hpp"

namespace reluflow {

using nlohmann::json;

void RunConfig::validate() const {
  if (!(alpha > 0)) throw DomainError("config: alpha must be positive");
  if (!(gamma >= 0)) throw DomainError("config: gamma must be non-negative");
  if (!(lr > 0)) throw DomainError("config: lr must be positive");
  if (!(grid_dt > 0)) throw DomainError("config: grid_dt must be positive");
  if (format != "csv" && format != "json") throw DomainError("config: format must be csv or json");
  if (mode != "flow" && mode != "gd") throw DomainError("config: mode must be flow or gd");
  if (epsilon_grid.empty()) throw DomainError("config: epsilon grid is empty");
  for (std::size_t k = 0; k < epsilon_grid.size(); ++k) {
    if (!(epsilon_grid[k] > 0)) throw DomainError("config: epsilon grid entries must be positive");
    if (k > 0 && !(epsilon_grid[k] < epsilon_grid[k - 1])) {
      throw DomainError("config: epsilon grid must be strictly decreasing");
    }
  }
  (void)Activation<double>::parse(activation);
  flow_config().validate();
}

FlowConfig RunConfig::flow_config() const {
  FlowConfig f;
  f.step = step;
  f.t_max = t_max;
  f.loss_tol = loss_tol;
  f.grad_tol = grad_tol;
  return f;
}

GdConfig RunConfig::gd_config() const {
  GdConfig g;
  g.lr = lr;
  return g;
}

json run_config_to_json(const RunConfig& c) {
  return json{{"gamma", c.gamma},       {"alpha", c.alpha},         {"epsilon_grid", c.epsilon_grid},
              {"lr", c.lr},             {"step", c.step},           {"t_max", c.t_max},
              {"loss_tol", c.loss_tol}, {"grad_tol", c.grad_tol},   {"grid_dt", c.grid_dt},
              {"seed", c.seed},         {"out", c.out},             {"format", c.format},
              {"filter", c.filter},     {"dataset", c.dataset},     {"activation", c.activation},
              {"mode", c.mode},         {"fast", c.fast},           {"inject_fault", c.inject_fault}};
}

RunConfig run_config_from_json(const json& j, RunConfig c) {
  if (!j.is_object()) throw DomainError("config: top level must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "gamma") c.gamma = value.get<double>();
      else if (key == "alpha") c.alpha = value.get<double>();
      else if (key == "epsilon_grid") c.epsilon_grid = value.get<std::vector<double>>();
      else if (key == "lr") c.lr = value.get<double>();
      else if (key == "step") c.step = value.get<double>();
      else if (key == "t_max") c.t_max = value.get<double>();
      else if (key == "loss_tol") c.loss_tol = value.get<double>();
      else if (key == "grad_tol") c.grad_tol = value.get<double>();
      else if (key == "grid_dt") c.grid_dt = value.get<double>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "out") c.out = value.get<std::string>();
      else if (key == "format") c.format = value.get<std::string>();
      else if (key == "filter") c.filter = value.get<std::string>();
      else if (key == "dataset") c.dataset = value.get<std::string>();
      else if (key == "activation") c.activation = value.get<std::string>();
      else if (key == "mode") c.mode = value.get<std::string>();
      else if (key == "fast") c.fast = value.get<bool>();
      else if (key == "inject_fault") c.inject_fault = value.get<bool>();
      else throw DomainError("config: unknown key \"" + key + "\"");
    } catch (const json::type_error&) {
      throw DomainError("config: key \"" + key + "\" has the wrong type");
    }
  }
  return c;
}

RunConfig read_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open config " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    std::ostringstream msg;
    msg << path.string() << ": malformed JSON at byte " << e.byte << ": " << e.what();
    throw DomainError(msg.str());
  }
  return run_config_from_json(j);
}

}  // namespace reluflow
