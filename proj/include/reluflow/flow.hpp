#pragma once

#include <cstddef>
#include <vector>

#include "reluflow/model.hpp"

namespace reluflow {

using Vector = Vec<double>;
using Matrix = Mat<double>;

struct FlowConfig {
  double step = 1e-4;
  double t_max = 50.0;
  double grad_tol = 1e-10;
  double loss_tol = 1e-14;
  double event_refine_tol = 1e-10;
  std::size_t stride = 100;  // record every stride-th step
  double divergence_bound = 1e12;
  /// Times the integrator lands on exactly and records.
  std::vector<double> checkpoints;

  void validate() const;
};

struct TrajectorySample {
  double t = 0;
  Vector w;
  double loss = 0;
  RegimePattern pattern;
};

struct RegimeEvent {
  double t = 0;
  Eigen::Index example = 0;
  Sign from = Sign::zero;
  Sign to = Sign::zero;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  std::vector<RegimeEvent> events;

  /// Sample recorded at exactly time t (checkpoint), or nullptr.
  const TrajectorySample* at(double t) const;
};

struct FlowResult {
  Vector w_inf;
  bool converged = false;
  double final_loss = 0;
  double final_grad_norm = 0;
  double t_end = 0;
  std::size_t steps = 0;
};

struct FlowRun {
  Trajectory trajectory;
  FlowResult result;
};

/// Gradient flow w' = -grad L(w) by classical RK4. Steps across which some
/// x_i.w changes sign are bisected to localize the switch and split there.
FlowRun integrate_flow(const Dataset<double>& ds, const Activation<double>& act, const Vector& w0,
                       const FlowConfig& cfg = {});

/// max_k (|w(t_{k+1}) - ref| - |w(t_k) - ref|), floored at 0.
double monotone_distance_check(const Trajectory& traj, const Vector& ref);

struct GdConfig {
  double lr = 1e-5;
  std::size_t max_iters = 20'000'000;
  double loss_tol = 1e-15;
  std::size_t stride = 100;
  double divergence_bound = 1e12;

  void validate() const;
};

struct GdRun {
  Trajectory trace;  // t = iteration * lr
  Vector w_final;
  double final_loss = 0;
  std::size_t iters = 0;
  bool converged = false;
};

/// Full-batch gradient descent on the single-neuron objective.
GdRun run_gd(const Dataset<double>& ds, const Activation<double>& act, const Vector& w0,
             const GdConfig& cfg = {});

struct HiddenSample {
  double t = 0;
  Vector w;
  double v = 0;
  double loss = 0;

  Vector u() const { return v * w; }
};

struct HiddenRun {
  std::vector<HiddenSample> trace;
  HiddenParams<double> final;
  double final_loss = 0;
  std::size_t iters = 0;
  bool converged = false;
  double t_end = 0;
};

/// Full-batch gradient descent on the hidden-neuron objective.
HiddenRun run_gd_hidden(const Dataset<double>& ds, const HiddenParams<double>& start,
                        const GdConfig& cfg = {});

struct HiddenFlowConfig {
  double step = 1e-4;
  double t_max = 10.0;
  double loss_tol = 1e-15;
  std::size_t stride = 100;
};

/// RK4 gradient flow on the hidden-neuron objective (conservation checks).
HiddenRun integrate_hidden_flow(const Dataset<double>& ds, const HiddenParams<double>& start,
                                const HiddenFlowConfig& cfg = {});

}  // namespace reluflow
