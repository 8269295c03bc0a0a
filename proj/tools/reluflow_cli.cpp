// reluflow: simulate, closed-form, sweep-epsilon, verify.
// Exit codes: 0 success, 1 input error, 2 non-convergence or failed criteria.

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "reluflow/acceptance.hpp"
#include "reluflow/closed_form.hpp"
#include "reluflow/csv_io.hpp"
#include "reluflow/dataset_io.hpp"
#include "reluflow/hidden_lab.hpp"
#include "reluflow/run_config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace reluflow;

namespace {

constexpr int kOk = 0;
constexpr int kInputError = 1;
constexpr int kNotConverged = 2;

// Flags parsed into `flags`; each explicitly given one is later copied onto
// the config loaded from --config.
struct FlagSet {
  RunConfig flags;
  std::string config_path;
  std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> appliers;

  template <typename T>
  void add(CLI::App* app, const std::string& name, T RunConfig::*field, const std::string& help) {
    CLI::Option* opt = app->add_option(name, flags.*field, help);
    appliers.emplace_back(opt, [this, field](RunConfig& c) { c.*field = flags.*field; });
  }
  void add_flag(CLI::App* app, const std::string& name, bool RunConfig::*field, const std::string& help) {
    CLI::Option* opt = app->add_flag(name, flags.*field, help);
    appliers.emplace_back(opt, [this, field](RunConfig& c) { c.*field = flags.*field; });
  }

  RunConfig resolve() const {
    RunConfig c = config_path.empty() ? RunConfig{} : read_run_config(config_path);
    for (const auto& [opt, apply] : appliers) {
      if (opt->count() > 0) apply(c);
    }
    c.validate();
    return c;
  }
};

void add_common(CLI::App* app, FlagSet& f) {
  app->add_option("--config", f.config_path, "JSON run configuration");
  f.add(app, "--gamma", &RunConfig::gamma, "family parameter gamma >= 0");
  f.add(app, "--alpha", &RunConfig::alpha, "target scale alpha > 0");
  f.add(app, "--epsilon-grid", &RunConfig::epsilon_grid, "decreasing epsilon values");
  f.add(app, "--lr", &RunConfig::lr, "gradient descent learning rate");
  f.add(app, "--step", &RunConfig::step, "RK4 step");
  f.add(app, "--t-max", &RunConfig::t_max, "time horizon");
  f.add(app, "--loss-tol", &RunConfig::loss_tol, "flow stopping loss");
  f.add(app, "--grad-tol", &RunConfig::grad_tol, "flow stopping gradient norm");
  f.add(app, "--grid-dt", &RunConfig::grid_dt, "closed-form sampling interval");
  f.add(app, "--seed", &RunConfig::seed, "random seed");
  f.add(app, "--out", &RunConfig::out, "output directory");
  f.add(app, "--format", &RunConfig::format, "csv or json");
  f.add(app, "--filter", &RunConfig::filter, "acceptance criterion name filter");
  f.add(app, "--dataset", &RunConfig::dataset, "dataset JSON {\"X\": [[...]], \"y\": [...]}");
  f.add(app, "--activation", &RunConfig::activation, "relu, identity, leaky or leaky:<slope>");
  f.add(app, "--mode", &RunConfig::mode, "flow (RK4) or gd");
  f.add_flag(app, "--fast", &RunConfig::fast, "hidden-neuron experiments at lr 1e-4");
  f.add_flag(app, "--inject-fault", &RunConfig::inject_fault, "perturb the golden eigenvalue table");
}

json trajectory_to_json(const Trajectory& traj) {
  json samples = json::array();
  for (const auto& s : traj.samples) {
    samples.push_back({{"t", s.t}, {"w", vector_to_json(s.w)}, {"loss", s.loss}, {"pattern", s.pattern.str()}});
  }
  return {{"samples", samples}, {"events", events_to_json(traj.events)}};
}

void emit_trajectory(const RunConfig& c, const std::string& stem, const Trajectory& traj) {
  if (c.format == "csv") {
    write_trajectory_csv(fs::path(c.out) / (stem + ".csv"), traj);
  } else {
    write_json(fs::path(c.out) / (stem + ".json"), trajectory_to_json(traj));
  }
}

int cmd_simulate(const RunConfig& c) {
  fs::create_directories(c.out);
  const Dataset<double> ds = c.dataset.empty() ? family_dataset(c.gamma, c.alpha) : read_dataset(c.dataset);
  const Activation<double> act = Activation<double>::parse(c.activation);
  const Vector w0 = Vector::Zero(ds.d());

  FlowRun run;
  if (c.mode == "flow") {
    run = integrate_flow(ds, act, w0, c.flow_config());
  } else {
    GdConfig g;
    g.lr = c.lr;
    g.loss_tol = c.loss_tol;
    const GdRun gd = run_gd(ds, act, w0, g);
    run.trajectory = gd.trace;
    run.result.w_inf = gd.w_final;
    run.result.converged = gd.converged;
    run.result.final_loss = gd.final_loss;
    run.result.final_grad_norm = grad(ds, act, gd.w_final).norm();
    run.result.t_end = static_cast<double>(gd.iters) * c.lr;
    run.result.steps = gd.iters;
  }
  emit_trajectory(c, "trajectory", run.trajectory);
  json result = flow_result_to_json(run.result);
  write_json(fs::path(c.out) / "result.json", result);
  json summary = result;
  summary["events"] = events_to_json(run.trajectory.events);
  std::cout << summary.dump(2) << '\n';
  return run.result.converged ? kOk : kNotConverged;
}

int cmd_closed_form(const RunConfig& c) {
  fs::create_directories(c.out);
  const FamilyInstance inst(c.gamma, c.alpha);
  const PiecewiseTrajectory traj(inst);
  emit_trajectory(c, "closed_form", sample_closed_form(traj, uniform_grid(0.0, c.t_max, c.grid_dt)));
  json out{{"gamma", c.gamma}, {"alpha", c.alpha}, {"limit", vector_to_json(traj.limit())}};
  out["t1"] = traj.t1() ? json(*traj.t1()) : json(nullptr);
  out["w_t1"] = traj.t1() ? vector_to_json(traj.w_t1()) : json(nullptr);
  write_json(fs::path(c.out) / "limit.json", out);
  std::cout << out.dump(2) << '\n';
  return kOk;
}

int cmd_sweep_epsilon(const RunConfig& c) {
  fs::create_directories(c.out);
  const Dataset<double> ds = c.dataset.empty() ? family_dataset(c.gamma, c.alpha) : read_dataset(c.dataset);
  const EpsilonSweep sweep = epsilon_sweep(ds, c.epsilon_grid, c.gd_config());
  if (c.format == "csv") {
    write_sweep_csv(fs::path(c.out) / "sweep.csv", sweep);
  } else {
    json cells = json::array();
    for (const auto& cell : sweep.cells) {
      cells.push_back({{"epsilon", cell.epsilon},
                       {"u", vector_to_json(cell.u_final)},
                       {"v", cell.v_final},
                       {"final_loss", cell.final_loss},
                       {"iters", cell.iters},
                       {"converged", cell.converged},
                       {"diverged", cell.diverged}});
    }
    write_json(fs::path(c.out) / "sweep.json", cells);
  }
  write_sweep_csv(std::cout, sweep);
  bool ok = true;
  for (const auto& cell : sweep.cells) ok = ok && cell.converged;
  return ok ? kOk : kNotConverged;
}

int cmd_verify(const RunConfig& c, bool write_artifacts) {
  AcceptanceOptions opt;
  opt.filter = c.filter;
  opt.fast = c.fast;
  opt.inject_fault = c.inject_fault;
  if (write_artifacts) opt.artifact_dir = c.out;
  const AcceptanceReport report = run_acceptance(opt);
  if (report.results.empty()) {
    std::cerr << "error: no acceptance criterion matches filter '" << c.filter << "'\n";
    return kInputError;
  }
  for (const auto& r : report.results) {
    std::cout << (r.passed ? "[PASS] " : "[FAIL] ") << r.name << " (" << r.seconds << " s): " << r.detail << '\n';
  }
  if (write_artifacts) write_json(fs::path(c.out) / "verdict.json", report.to_json());
  return report.all_passed() ? kOk : kNotConverged;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gradient-flow experiments for single ReLU neurons"};
  app.require_subcommand(1);
  FlagSet sim, cf, sweep, verify;
  CLI::App* sim_cmd = app.add_subcommand("simulate", "integrate gradient flow or run GD from w = 0");
  CLI::App* cf_cmd = app.add_subcommand("closed-form", "analytic trajectory of (X_gamma, y_alpha)");
  CLI::App* sweep_cmd = app.add_subcommand("sweep-epsilon", "hidden-neuron training over an epsilon grid");
  CLI::App* verify_cmd = app.add_subcommand("verify", "run the acceptance suite");
  add_common(sim_cmd, sim);
  add_common(cf_cmd, cf);
  add_common(sweep_cmd, sweep);
  add_common(verify_cmd, verify);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (*sim_cmd) return cmd_simulate(sim.resolve());
    if (*cf_cmd) return cmd_closed_form(cf.resolve());
    if (*sweep_cmd) return cmd_sweep_epsilon(sweep.resolve());
    const bool artifacts = verify_cmd->get_option("--out")->count() > 0;
    return cmd_verify(verify.resolve(), artifacts);
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNotConverged;
  } catch (const IllConditionedError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNotConverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  }
}
