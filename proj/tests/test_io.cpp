#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "reluflow/csv_io.hpp"
#include "reluflow/dataset_io.hpp"
#include "reluflow/run_config.hpp"

using namespace reluflow;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Fresh scratch directory per test.
fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("reluflow_test_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun cli(const std::string& args, const fs::path& dir) {
  const fs::path out = dir / "stdout.txt";
  const fs::path err = dir / "stderr.txt";
  const std::string cmd =
      std::string("\"") + RELUFLOW_CLI + "\" " + args + " > \"" + out.string() + "\" 2> \"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return {code, slurp(out), slurp(err)};
}

std::size_t count_lines(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

}  // namespace

TEST(Csv, FormatDouble) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(std::nan("")), "nan");
  EXPECT_EQ(format_double(-2.0), "-2");
}

TEST(Csv, TrajectoryRoundTripIsExact) {
  const FlowRun run = integrate_flow(family_dataset(5.0, 1.0), Activation<double>::relu(), Vector::Zero(3));
  std::stringstream buf;
  write_trajectory_csv(buf, run.trajectory);
  const Trajectory back = read_trajectory_csv(buf);
  ASSERT_EQ(back.samples.size(), run.trajectory.samples.size());
  for (std::size_t k = 0; k < back.samples.size(); ++k) {
    EXPECT_EQ(back.samples[k].t, run.trajectory.samples[k].t);
    EXPECT_EQ(back.samples[k].w, run.trajectory.samples[k].w);
    EXPECT_EQ(back.samples[k].loss, run.trajectory.samples[k].loss);
    EXPECT_EQ(back.samples[k].pattern, run.trajectory.samples[k].pattern);
  }
  EXPECT_TRUE(back.events.empty());
}

TEST(Csv, HiddenRoundTrip) {
  std::vector<HiddenSample> trace;
  Vector w(2);
  w << 0.3, -1.7;
  trace.push_back({0.0, w, 0.5, 1.25});
  trace.push_back({1e-5, 2 * w, 0.25, 0.125});
  std::stringstream buf;
  write_hidden_csv(buf, trace);
  EXPECT_EQ(buf.str().substr(0, buf.str().find('\n')), "t,u1,u2,v,loss");
  const std::vector<HiddenSample> back = read_hidden_csv(buf);
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t k = 0; k < 2; ++k) {
    EXPECT_EQ(back[k].t, trace[k].t);
    EXPECT_EQ(back[k].v, trace[k].v);
    EXPECT_EQ(back[k].loss, trace[k].loss);
    EXPECT_LE((back[k].u() - trace[k].u()).norm(), 1e-15);
  }
}

TEST(Csv, SweepRoundTripKeepsNan) {
  EpsilonSweep sweep;
  SweepCell ok{0.1, Vector::Ones(3), 1.0, 1e-16, 1234, true, false};
  SweepCell bad{0.01, Vector::Constant(3, std::nan("")), std::nan(""), std::nan(""), 7, false, true};
  sweep.cells = {ok, bad};
  std::stringstream buf;
  write_sweep_csv(buf, sweep);
  const EpsilonSweep back = read_sweep_csv(buf);
  ASSERT_EQ(back.cells.size(), 2u);
  EXPECT_EQ(back.cells[0].epsilon, 0.1);
  EXPECT_EQ(back.cells[0].u_final, Vector::Ones(3));
  EXPECT_EQ(back.cells[0].final_loss, 1e-16);
  EXPECT_EQ(back.cells[0].iters, 1234u);
  EXPECT_TRUE(std::isnan(back.cells[1].u_final(0)));
  EXPECT_TRUE(std::isnan(back.cells[1].final_loss));
}

TEST(Csv, MalformedRowsNameTheRow) {
  const auto message = [](const std::string& text) {
    std::istringstream in(text);
    try {
      read_trajectory_csv(in, "traj.csv");
    } catch (const Error& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(message("t,w1,loss,pattern\n0,1,2,+\n0.1,1,2\n").find("traj.csv: row 2"), std::string::npos);
  EXPECT_NE(message("t,w1,loss,pattern\n0,abc,2,+\n").find("row 1"), std::string::npos);
  EXPECT_NE(message("t,w1,loss,pattern\n0,1,2,x\n").find("row 1"), std::string::npos);
  EXPECT_NE(message("time,w1,loss,pattern\n").find("header"), std::string::npos);
  EXPECT_NE(message("").find("missing header"), std::string::npos);
  std::istringstream sweep("epsilon,u1,final_loss,iters\n0.1,1,0,2.5\n");
  EXPECT_THROW(read_sweep_csv(sweep), DomainError);
}

TEST(Json, FlowResultRoundTrip) {
  FlowResult r;
  r.w_inf = Vector::LinSpaced(3, 0.1, 0.3);
  r.converged = true;
  r.final_loss = 1e-15;
  r.final_grad_norm = std::nan("");
  r.t_end = 12.5;
  r.steps = 125000;
  const json j = flow_result_to_json(r);
  EXPECT_TRUE(j.at("final_grad_norm").is_null());
  const FlowResult back = flow_result_from_json(j);
  EXPECT_EQ(back.w_inf, r.w_inf);
  EXPECT_EQ(back.converged, r.converged);
  EXPECT_EQ(back.final_loss, r.final_loss);
  EXPECT_TRUE(std::isnan(back.final_grad_norm));
  EXPECT_EQ(back.steps, r.steps);

  json extra = j;
  extra["bogus"] = 1;
  EXPECT_THROW(flow_result_from_json(extra), DomainError);
  json missing = j;
  missing.erase("steps");
  EXPECT_THROW(flow_result_from_json(missing), DomainError);
}

TEST(Json, EventsUseOneBasedExamples) {
  const FlowRun run = integrate_flow(family_dataset(1.0, 1.0), Activation<double>::relu(), Vector::Zero(3));
  const json ev = events_to_json(run.trajectory.events);
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].at("example"), 3);
  EXPECT_EQ(ev[0].at("from"), "+");
  EXPECT_EQ(ev[0].at("to"), "-");
}

TEST(RunConfigIo, RoundTrip) {
  RunConfig c;
  c.gamma = 5.0;
  c.epsilon_grid = {0.5, 0.05};
  c.seed = 17;
  c.activation = "leaky:0.5";
  c.fast = true;
  EXPECT_EQ(run_config_from_json(run_config_to_json(c)), c);
  EXPECT_EQ(run_config_from_json(json::object()), RunConfig{});
}

TEST(RunConfigIo, OverlayKeepsBase) {
  RunConfig base;
  base.alpha = 3.0;
  const RunConfig c = run_config_from_json(json{{"gamma", 1.0}}, base);
  EXPECT_EQ(c.gamma, 1.0);
  EXPECT_EQ(c.alpha, 3.0);
}

TEST(RunConfigIo, Rejections) {
  EXPECT_THROW(run_config_from_json(json{{"gama", 1.0}}), DomainError);
  EXPECT_THROW(run_config_from_json(json{{"gamma", "two"}}), DomainError);
  EXPECT_THROW(run_config_from_json(json{{"fast", 1}}), DomainError);
  EXPECT_THROW(run_config_from_json(json::array()), DomainError);
  RunConfig bad;
  bad.step = -1;
  EXPECT_THROW(bad.validate(), DomainError);
  bad = {};
  bad.epsilon_grid = {0.1, 1.0};
  EXPECT_THROW(bad.validate(), DomainError);
  bad = {};
  bad.format = "xml";
  EXPECT_THROW(bad.validate(), DomainError);
}

TEST(RunConfigIo, MalformedFileReportsBytePosition) {
  const fs::path dir = scratch("malformed");
  std::ofstream(dir / "c.json") << "{\"gamma\": 2,, }";
  try {
    read_run_config(dir / "c.json");
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("byte"), std::string::npos) << e.what();
  }
  EXPECT_THROW(read_run_config(dir / "absent.json"), DomainError);
}

TEST(Cli, SimulateDefault) {
  const fs::path dir = scratch("simulate");
  const CliRun r = cli("simulate --gamma 2 --out \"" + dir.string() + "\"", dir);
  ASSERT_EQ(r.code, 0) << r.err;
  const FlowResult res = flow_result_from_json(read_json(dir / "result.json"));
  EXPECT_TRUE(res.converged);
  EXPECT_GT(res.w_inf(2), -0.12);
  EXPECT_LT(res.w_inf(2), -0.1);
  const Trajectory traj = read_trajectory_csv(dir / "trajectory.csv");
  EXPECT_EQ(traj.samples.back().w, res.w_inf);
  EXPECT_EQ(json::parse(r.out).at("events").size(), 1u);
}

TEST(Cli, SimulateDatasetFileWithLeaky) {
  const fs::path dir = scratch("simulate_leaky");
  write_dataset(dir / "ds.json", family_dataset(5.0, 1.0));
  const CliRun r = cli("simulate --dataset \"" + (dir / "ds.json").string() + "\" --activation leaky:0.5 --format json --out \"" +
                           dir.string() + "\"",
                       dir);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "trajectory.json"));
  const FlowResult res = flow_result_from_json(read_json(dir / "result.json"));
  // Leaky ReLU is invertible, so the limit solves X w = y exactly: (5, -1, 1).
  EXPECT_NEAR(res.w_inf(2), 1.0, 1e-4);
}

TEST(Cli, ConfigFileAndFlagPrecedence) {
  const fs::path dir = scratch("config");
  std::ofstream(dir / "c.json") << json{{"gamma", 0.0}, {"t_max", 3.0}}.dump();
  const CliRun r = cli("closed-form --config \"" + (dir / "c.json").string() + "\" --gamma 1 --out \"" + dir.string() + "\"", dir);
  ASSERT_EQ(r.code, 0) << r.err;
  const json lim = read_json(dir / "limit.json");
  EXPECT_EQ(lim.at("gamma"), 1.0);
  EXPECT_EQ(read_trajectory_csv(dir / "closed_form.csv").samples.size(), 301u);
}

TEST(Cli, MalformedConfigExitsOne) {
  const fs::path dir = scratch("bad_config");
  std::ofstream(dir / "c.json") << "{\"gamma\": }";
  const CliRun r = cli("simulate --config \"" + (dir / "c.json").string() + "\" --out \"" + dir.string() + "\"", dir);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("byte"), std::string::npos) << r.err;
}

TEST(Cli, BadArgumentsExitOne) {
  const fs::path dir = scratch("bad_args");
  EXPECT_EQ(cli("simulate --step -1 --out \"" + dir.string() + "\"", dir).code, 1);
  EXPECT_EQ(cli("simulate --no-such-flag", dir).code, 1);
  EXPECT_EQ(cli("", dir).code, 1);
}

TEST(Cli, ClosedFormLimits) {
  const fs::path dir = scratch("closed_form");
  CliRun r = cli("closed-form --gamma 0 --out \"" + dir.string() + "\"", dir);
  ASSERT_EQ(r.code, 0) << r.err;
  json lim = read_json(dir / "limit.json");
  EXPECT_TRUE(lim.at("t1").is_null());
  EXPECT_TRUE(lim.at("w_t1").is_null());
  EXPECT_EQ(lim.at("limit")[2], 0.0);
  r = cli("closed-form --gamma 1 --out \"" + dir.string() + "\"", dir);
  ASSERT_EQ(r.code, 0) << r.err;
  lim = read_json(dir / "limit.json");
  EXPECT_GT(lim.at("t1").get<double>(), 0.169);
  EXPECT_LT(lim.at("t1").get<double>(), 0.17);
  EXPECT_EQ(read_trajectory_csv(dir / "closed_form.csv").samples.size(), 5001u);
}

TEST(Cli, SweepCustomGrid) {
  const fs::path dir = scratch("sweep_custom");
  const CliRun r = cli("sweep-epsilon --gamma 0 --lr 1e-4 --epsilon-grid 0.5 0.05 0.005 --out \"" + dir.string() + "\"", dir);
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream in(dir / "sweep.csv");
  const EpsilonSweep sweep = read_sweep_csv(in);
  ASSERT_EQ(sweep.cells.size(), 3u);
  for (const auto& c : sweep.cells) EXPECT_EQ(c.u_final(2), 0.0);
  EXPECT_EQ(count_lines(r.out), 4u);
}

TEST(Cli, SweepDefaultGrid) {
  const fs::path dir = scratch("sweep_default");
  const CliRun r = cli("sweep-epsilon --gamma 5 --lr 1e-4 --out \"" + dir.string() + "\"", dir);
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream in(dir / "sweep.csv");
  const EpsilonSweep sweep = read_sweep_csv(in);
  ASSERT_EQ(sweep.cells.size(), 6u);
  for (const auto& c : sweep.cells) EXPECT_LT(c.u_final(2), 0.0);
}

TEST(Cli, Deterministic) {
  const fs::path a = scratch("det_a");
  const fs::path b = scratch("det_b");
  ASSERT_EQ(cli("simulate --gamma 5 --out \"" + a.string() + "\"", a).code, 0);
  ASSERT_EQ(cli("simulate --gamma 5 --out \"" + b.string() + "\"", b).code, 0);
  EXPECT_EQ(slurp(a / "trajectory.csv"), slurp(b / "trajectory.csv"));
  EXPECT_EQ(slurp(a / "result.json"), slurp(b / "result.json"));
}

TEST(Cli, VerifyFilterPasses) {
  const fs::path dir = scratch("verify");
  const CliRun r = cli("verify --filter balancedness", dir);
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_NE(r.out.find("[PASS] balancedness"), std::string::npos);
  EXPECT_EQ(count_lines(r.out), 1u);
}

TEST(Cli, VerifyInjectedFaultFails) {
  const fs::path dir = scratch("verify_fault");
  const CliRun r = cli("verify --inject-fault --filter spectral", dir);
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.out.find("[FAIL] spectral_goldens"), std::string::npos) << r.out;
}

TEST(Cli, VerifyUnknownFilter) {
  const fs::path dir = scratch("verify_none");
  const CliRun r = cli("verify --filter no_such_criterion", dir);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("no acceptance criterion"), std::string::npos);
}

TEST(Cli, VerifyWritesVerdictAndArtifacts) {
  const fs::path dir = scratch("verify_out");
  const CliRun r = cli("verify --filter single_neuron --out \"" + dir.string() + "\"", dir);
  ASSERT_EQ(r.code, 0) << r.out << r.err;
  const json verdict = read_json(dir / "verdict.json");
  EXPECT_TRUE(verdict.dump().find("single_neuron_limits") != std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "flow_gamma5.csv"));
  EXPECT_TRUE(fs::exists(dir / "flow_gamma5.json"));
}
