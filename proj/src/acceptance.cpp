#include "reluflow/acceptance.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <sstream>

#include "reluflow/closed_form.hpp"
#include "reluflow/csv_io.hpp"
#include "reluflow/hidden_lab.hpp"
#include "reluflow/minnorm.hpp"
#include "reluflow/witness.hpp"

namespace reluflow {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Accumulates named checks; a criterion passes when all of them do.
class Checks {
 public:
  void require(bool ok, const std::string& what) {
    if (!ok) {
      passed_ = false;
      if (!failures_.empty()) failures_ += "; ";
      failures_ += what;
    }
  }
  void note(const std::string& s) {
    if (!notes_.empty()) notes_ += "; ";
    notes_ += s;
  }
  bool passed() const { return passed_; }
  std::string detail() const { return passed_ ? notes_ : "FAILED: " + failures_ + (notes_.empty() ? "" : " | " + notes_); }

 private:
  bool passed_ = true;
  std::string failures_;
  std::string notes_;
};

std::string fmt(double x) {
  std::ostringstream s;
  s << std::setprecision(6) << x;
  return s.str();
}

std::string gamma_tag(double g) {
  std::ostringstream s;
  s << g;
  return s.str();
}

struct Interval {
  double lo, hi;
  bool contains(double x) const { return x > lo && x < hi; }
  std::string str() const { return "(" + fmt(lo) + ", " + fmt(hi) + ")"; }
};

constexpr double kGammas[] = {0.0, 1.0, 2.0, 5.0};

Interval limit_interval(double gamma) {
  if (gamma == 1.0) return {-0.045, -0.035};
  if (gamma == 2.0) return {-0.12, -0.1};
  return {-0.22, -0.2};
}

void check_family_limit(Checks& c, double gamma, const Vector& w, const std::string& method) {
  const std::string tag = method + " gamma=" + gamma_tag(gamma);
  if (gamma == 0) {
    Vector target(3);
    target << 5, -1, 0;
    c.require((w - target).norm() <= 1e-3, tag + " limit " + fmt((w - target).norm()) + " from (5,-1,0)");
    return;
  }
  const Interval iv = limit_interval(gamma);
  c.require(iv.contains(w(2)), tag + " s=" + fmt(w(2)) + " outside " + iv.str());
  c.require(std::abs(w(0) - 5) <= 1e-3 && std::abs(w(1) + 1) <= 1e-3, tag + " leading coordinates off (5,-1)");
}

GdConfig hidden_gd(const AcceptanceOptions& opt) {
  GdConfig g;
  g.lr = opt.fast ? 1e-4 : 1e-5;
  g.loss_tol = 1e-15;
  return g;
}

void single_neuron_limits(const AcceptanceOptions& opt, Checks& c) {
  const auto start = Clock::now();
  const auto relu = Activation<double>::relu();
  for (double g : kGammas) {
    const FamilyInstance inst(g, 1.0);
    const Vector cf = closed_form_limit(inst);
    const FlowRun run = integrate_flow(inst.dataset(), relu, Vector::Zero(3));
    c.require(run.result.converged, "flow gamma=" + gamma_tag(g) + " did not converge");
    check_family_limit(c, g, cf, "closed form");
    check_family_limit(c, g, run.result.w_inf, "flow");
    const double gap = (cf - run.result.w_inf).norm();
    c.require(gap <= 1e-3, "gamma=" + gamma_tag(g) + " methods differ by " + fmt(gap));
    c.note("s(" + gamma_tag(g) + ")=" + fmt(run.result.w_inf(2)));
    if (!opt.artifact_dir.empty()) {
      write_trajectory_csv(opt.artifact_dir / ("flow_gamma" + gamma_tag(g) + ".csv"), run.trajectory);
      write_json(opt.artifact_dir / ("flow_gamma" + gamma_tag(g) + ".json"), flow_result_to_json(run.result));
    }
  }
  const double elapsed = seconds_since(start);
  c.require(elapsed < 10.0, "runtime " + fmt(elapsed) + " s exceeds 10 s");
}

void switch_times(const AcceptanceOptions&, Checks& c) {
  const auto start = Clock::now();
  const std::pair<double, Interval> cases[] = {{1.0, {0.169, 0.17}}, {2.0, {0.138, 0.139}}, {5.0, {0.086, 0.087}}};
  for (const auto& [g, iv] : cases) {
    const double t1 = find_t1(FamilyInstance(g, 1.0));
    c.require(iv.contains(t1), "gamma=" + gamma_tag(g) + " t1=" + fmt(t1) + " outside " + iv.str());
    c.note("t1(" + gamma_tag(g) + ")=" + fmt(t1));
  }
  const double elapsed = seconds_since(start);
  c.require(elapsed < 1.0, "runtime " + fmt(elapsed) + " s exceeds 1 s");
}

void spectral_goldens(const AcceptanceOptions& opt, Checks& c) {
  struct Golden {
    std::string label;
    Matrix gram;
    std::vector<double> values;
  };
  std::vector<Golden> table;
  {
    const Matrix x2 = x_gamma(0.0).topLeftCorner(2, 2);
    table.push_back({"2x2 block", x2.transpose() * x2, {15 + 5 * std::sqrt(5.0), 15 - 5 * std::sqrt(5.0)}});
  }
  const Matrix x1 = x_gamma(1.0), x2 = x_gamma(2.0), x5 = x_gamma(5.0);
  table.push_back({"gamma=1", x1.transpose() * x1, {13.5 + std::sqrt(649.0) / 2, 5.0, 13.5 - std::sqrt(649.0) / 2}});
  table.push_back({"gamma=2", x2.transpose() * x2, {14 + 2 * std::sqrt(39.0), 10.0, 14 - 2 * std::sqrt(39.0)}});
  table.push_back({"gamma=5", x5.transpose() * x5,
                   {27.5 + 2.5 * std::sqrt(105.0), 25.0, 27.5 - 2.5 * std::sqrt(105.0)}});
  if (opt.inject_fault) table[1].values[0] += 1e-6;

  for (const auto& gold : table) {
    const SymEig<double> eig = sym_eig(gold.gram);
    double worst = 0;
    for (std::size_t k = 0; k < gold.values.size(); ++k) {
      worst = std::max(worst, std::abs(eig.eigenvalues(static_cast<Eigen::Index>(k)) - gold.values[k]));
    }
    c.require(worst <= 1e-10, gold.label + " eigenvalue error " + fmt(worst));
    c.note(gold.label + " err=" + fmt(worst));
  }
}

void alpha_scaling(const AcceptanceOptions&, Checks& c) {
  double worst = 0;
  for (double g : kGammas) {
    const Vector base = closed_form_limit(FamilyInstance(g, 1.0));
    for (double a : {0.5, 1.0, 3.0}) {
      const double gap = (closed_form_limit(FamilyInstance(g, a)) - a * base).norm();
      worst = std::max(worst, gap);
      c.require(gap <= 1e-10, "gamma=" + gamma_tag(g) + " alpha=" + fmt(a) + " gap " + fmt(gap));
    }
  }
  c.note("max gap " + fmt(worst));
}

void closed_form_agreement(const AcceptanceOptions& opt, Checks& c) {
  const std::vector<double> grid = uniform_grid(0.0, 10.0, 0.01);
  FlowConfig cfg;
  cfg.t_max = 10.0;
  cfg.loss_tol = 1e-300;  // run the full window
  cfg.grad_tol = 1e-300;
  cfg.checkpoints = grid;
  const auto relu = Activation<double>::relu();
  for (double g : kGammas) {
    const FamilyInstance inst(g, 1.0);
    const PiecewiseTrajectory cf(inst);
    const FlowRun run = integrate_flow(inst.dataset(), relu, Vector::Zero(3), cfg);
    double sup = 0;
    std::size_t missing = 0;
    for (double t : grid) {
      const TrajectorySample* s = run.trajectory.at(t);
      if (!s) {
        ++missing;
        continue;
      }
      sup = std::max(sup, (s->w - cf.at(t)).norm());
    }
    c.require(missing == 0, "gamma=" + gamma_tag(g) + " missing " + std::to_string(missing) + " checkpoints");
    c.require(sup <= 1e-3, "gamma=" + gamma_tag(g) + " sup gap " + fmt(sup));
    const double res = residual_check(inst, grid);
    c.require(res <= 1e-5, "gamma=" + gamma_tag(g) + " residual " + fmt(res));
    c.note("gamma=" + gamma_tag(g) + " gap=" + fmt(sup) + " res=" + fmt(res));
    if (!opt.artifact_dir.empty()) {
      write_trajectory_csv(opt.artifact_dir / ("closed_form_gamma" + gamma_tag(g) + ".csv"),
                           sample_closed_form(cf, grid));
    }
  }
}

void kkt_min_norm(const AcceptanceOptions&, Checks& c) {
  const auto leaky = Activation<double>::leaky(0.5);
  FlowConfig cfg;
  cfg.step = 1e-3;
  cfg.t_max = 500.0;
  cfg.stride = 1000;
  std::mt19937_64 rng(31);
  std::normal_distribution<double> normal(0.0, 1.0);
  int done = 0;
  int rejected = 0;
  double worst = 0;
  while (done < 50) {
    const Eigen::Index n = 1 + done % 2;
    const PlantedInstance inst = planted_instance(rng, n, 3, leaky);
    const Matrix gram = inst.ds.X * inst.ds.X.transpose();
    const double smallest = Eigen::SelfAdjointEigenSolver<Matrix>(gram).eigenvalues().minCoeff();
    const double largest = gram.trace();
    if (smallest < 0.25 || largest > 25.0) {  // keep the flow fast and the KKT solve well posed
      ++rejected;
      continue;
    }
    Vector w0(3);
    for (Eigen::Index j = 0; j < 3; ++j) w0(j) = 0.3 * normal(rng);
    const FlowRun run = integrate_flow(inst.ds, leaky, w0, cfg);
    const MinNormSolution sol = min_norm_interpolant(inst.ds, leaky, w0);
    const double gap = (run.result.w_inf - sol.w_star).norm();
    worst = std::max(worst, gap);
    c.require(run.result.converged, "instance " + std::to_string(done) + " did not converge");
    c.require(gap <= 1e-4, "instance " + std::to_string(done) + " gap " + fmt(gap));
    ++done;
  }
  c.note("50 instances, max gap " + fmt(worst) + ", resampled " + std::to_string(rejected));
}

void factor2_property(const AcceptanceOptions& opt, Checks& c) {
  FlowConfig census_cfg;  // longer horizon so slow, poorly conditioned instances still count
  census_cfg.step = 1e-3;
  census_cfg.t_max = 500.0;
  census_cfg.stride = 1000;
  const CensusReport census = factor2_census(200, 1000, census_cfg);
  c.require(census.converged_count > 0, "no converged instance");
  c.require(census.max_ratio <= 2 + 1e-6, "max ratio " + fmt(census.max_ratio));
  c.note("max ratio " + fmt(census.max_ratio) + " over " + std::to_string(census.converged_count) +
         " converged, " + std::to_string(census.excluded_count) + " excluded");

  const auto relu = Activation<double>::relu();
  Vector on_ray(3);
  on_ray << 5, -1, -0.21;
  double worst = 0;
  for (double g : kGammas) {
    const FamilyInstance inst(g, 1.0);
    const FlowRun run = integrate_flow(inst.dataset(), relu, Vector::Zero(3));
    for (const Vector& ref : {closed_form_limit(inst), relu_family_min_norm(inst), on_ray}) {
      worst = std::max(worst, monotone_distance_check(run.trajectory, ref));
    }
  }
  c.require(worst <= 1e-6, "distance to a zero-loss point increased by " + fmt(worst));
  c.note("max distance increase " + fmt(worst));
  if (!opt.artifact_dir.empty()) write_json(opt.artifact_dir / "census.json", census_to_json(census));
}

void balancedness(const AcceptanceOptions& opt, Checks& c) {
  const Dataset<double> ds = family_dataset(5.0, 1.0);
  const HiddenParams<double> start{Vector::Zero(3), 0.01};

  const HiddenRun flow = integrate_hidden_flow(ds, start);
  const double flow_drift = balancedness_drift(flow.trace);
  c.require(flow.converged, "RK4 hidden flow did not converge");
  c.require(flow_drift <= 1e-8, "RK4 drift " + fmt(flow_drift));

  GdConfig gd;
  gd.lr = 1e-5;
  gd.stride = 1;
  const HiddenRun full = run_gd_hidden(ds, start, gd);
  gd.lr = 5e-6;
  const HiddenRun half = run_gd_hidden(ds, start, gd);
  const double d_full = balancedness_drift(full.trace);
  const double d_half = balancedness_drift(half.trace);
  const double ratio = d_half / d_full;
  c.require(full.converged && half.converged, "GD did not converge");
  c.require(d_full <= 1e-4, "GD drift " + fmt(d_full) + " at lr 1e-5");
  c.require(std::abs(ratio - 0.5) <= 0.05, "halving lr scales drift by " + fmt(ratio));
  c.note("RK4 drift " + fmt(flow_drift) + ", GD drift " + fmt(d_full) + " (lr 1e-5), ratio " + fmt(ratio));

  if (!opt.artifact_dir.empty()) {
    GdConfig trace_cfg = hidden_gd(opt);
    for (double g : {0.0, 5.0}) {
      const HiddenRun run = run_gd_hidden(family_dataset(g, 1.0), start, trace_cfg);
      write_hidden_csv(opt.artifact_dir / ("hidden_gamma" + gamma_tag(g) + ".csv"), run.trace);
    }
  }
}

void epsilon_sweep_check(const AcceptanceOptions& opt, Checks& c) {
  const GdConfig gd = hidden_gd(opt);
  const std::vector<double> grid = default_epsilon_grid();
  for (double g : {0.0, 5.0}) {
    const EpsilonSweep sweep = epsilon_sweep(family_dataset(g, 1.0), grid, gd);
    const std::string tag = "gamma=" + gamma_tag(g);
    for (const auto& cell : sweep.cells) {
      const std::string at = tag + " eps=" + fmt(cell.epsilon);
      c.require(!cell.diverged && cell.final_loss < 1e-15, at + " loss " + fmt(cell.final_loss));
      if (cell.diverged) continue;
      if (g == 0) c.require(cell.u_final(2) == 0.0, at + " u3=" + fmt(cell.u_final(2)));
      if (g == 5) c.require(cell.u_final(2) < 0, at + " u3=" + fmt(cell.u_final(2)) + " not negative");
      c.require(std::abs(cell.u_final(0) - 5) <= 1e-3 && std::abs(cell.u_final(1) + 1) <= 1e-3,
                at + " leading coordinates off (5,-1)");
    }
    if (g == 5) {
      const std::size_t m = sweep.cells.size();
      const double jump = std::abs(sweep.cells[m - 2].u_final(2) - sweep.cells[m - 1].u_final(2));
      c.require(jump < 0.01, "u3 not stabilized: |u3(1e-4) - u3(1e-5)| = " + fmt(jump));
      c.note("u3 limit " + fmt(sweep.cells.back().u_final(2)) + ", last jump " + fmt(jump));
    }
    if (!opt.artifact_dir.empty()) {
      write_sweep_csv(opt.artifact_dir / ("sweep_gamma" + gamma_tag(g) + ".csv"), sweep);
    }
  }
  c.note(std::string("lr ") + (opt.fast ? "1e-4" : "1e-5"));
}

void equivariance(const AcceptanceOptions& opt, Checks& c) {
  const GdConfig gd = hidden_gd(opt);
  std::mt19937_64 rng(7);
  for (double g : {0.0, 5.0}) {
    const Dataset<double> ds = family_dataset(g, 1.0);
    const Matrix m = random_rotation(rng, 3);
    const RotationCheck rot = check_rotation_equivariance(ds, m, 0.01, gd);
    const ScalingCheck sc = check_scaling_equivariance(ds, 3.0, 0.01, gd);
    const double scale_dev = std::max(sc.theta_deviation, sc.u_deviation);
    const std::string tag = "gamma=" + gamma_tag(g);
    c.require(rot.u_deviation <= 1e-6 && rot.v_deviation <= 1e-6,
              tag + " rotation deviation " + fmt(std::max(rot.u_deviation, rot.v_deviation)));
    c.require(scale_dev <= 1e-3, tag + " scaling deviation " + fmt(scale_dev));
    c.note(tag + " rot=" + fmt(rot.u_deviation) + " scale=" + fmt(scale_dev));
  }
}

void witness_records(const AcceptanceOptions& opt, Checks& c) {
  const WitnessRecord single = single_neuron_witness(1.0, {0.0, 1.0, 2.0, 5.0}, true);
  const double sep = std::abs(single.limits[1](2) - single.limits[2](2));
  c.require(sep >= 0.055, "|s(1) - s(2)| = " + fmt(sep));
  c.require(single.complete(), "single-neuron record incomplete (ray membership or distinctness)");

  const WitnessRecord hidden = hidden_neuron_witness(default_epsilon_grid(), hidden_gd(opt));
  c.require(!hidden.inconclusive, "hidden-neuron sweep did not stabilize");
  c.require(hidden.orthogonality <= 1e-3, "|<u*, u'>| / (|u*||u'|) = " + fmt(hidden.orthogonality));
  c.require(hidden.offset_norm > kDistinctTol, "|u'| = " + fmt(hidden.offset_norm));
  c.require(hidden.complete(), "hidden-neuron record incomplete");
  c.note("separation " + fmt(sep) + ", orthogonality " + fmt(hidden.orthogonality) + ", |u'| " +
         fmt(hidden.offset_norm));
  if (!opt.artifact_dir.empty()) {
    write_json(opt.artifact_dir / "witness_single.json", single.to_json());
    write_json(opt.artifact_dir / "witness_hidden.json", hidden.to_json());
  }
}

using CriterionFn = std::function<void(const AcceptanceOptions&, Checks&)>;

const std::vector<std::pair<std::string, CriterionFn>>& registry() {
  static const std::vector<std::pair<std::string, CriterionFn>> r = {
      {"single_neuron_limits", single_neuron_limits},
      {"switch_times", switch_times},
      {"spectral_goldens", spectral_goldens},
      {"alpha_scaling", alpha_scaling},
      {"closed_form_agreement", closed_form_agreement},
      {"kkt_min_norm", kkt_min_norm},
      {"factor2_property", factor2_property},
      {"balancedness", balancedness},
      {"epsilon_sweep", epsilon_sweep_check},
      {"equivariance", equivariance},
      {"witness_records", witness_records},
  };
  return r;
}

}  // namespace

bool AcceptanceReport::all_passed() const {
  for (const auto& r : results) {
    if (!r.passed) return false;
  }
  return true;
}

nlohmann::json AcceptanceReport::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : results) {
    arr.push_back({{"name", r.name}, {"passed", r.passed}, {"detail", r.detail}, {"seconds", r.seconds}});
  }
  return {{"passed", all_passed()}, {"criteria", arr}};
}

std::vector<std::string> acceptance_criteria() {
  std::vector<std::string> names;
  for (const auto& [name, _] : registry()) names.push_back(name);
  return names;
}

AcceptanceReport run_acceptance(const AcceptanceOptions& options) {
  if (!options.artifact_dir.empty()) std::filesystem::create_directories(options.artifact_dir);
  AcceptanceReport report;
  for (const auto& [name, fn] : registry()) {
    if (!options.filter.empty() && name.find(options.filter) == std::string::npos) continue;
    CriterionResult result;
    result.name = name;
    const auto start = Clock::now();
    Checks checks;
    try {
      fn(options, checks);
    } catch (const std::exception& e) {
      checks.require(false, std::string("exception: ") + e.what());
    }
    result.seconds = seconds_since(start);
    result.passed = checks.passed();
    result.detail = checks.detail();
    report.results.push_back(std::move(result));
  }
  return report;
}

}  // namespace reluflow
