#include "reluflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace reluflow {

void FlowConfig::validate() const {
  if (!(step > 0 && t_max > 0 && grad_tol > 0 && loss_tol > 0 && event_refine_tol > 0)) {
    throw DomainError("FlowConfig: step, t_max, grad_tol, loss_tol and event_refine_tol must be positive");
  }
  if (!(event_refine_tol < step)) throw DomainError("FlowConfig: event_refine_tol must be below step");
  if (stride == 0) throw DomainError("FlowConfig: stride must be at least 1");
  if (!std::is_sorted(checkpoints.begin(), checkpoints.end())) {
    throw DomainError("FlowConfig: checkpoints must be sorted");
  }
}

void GdConfig::validate() const {
  if (!(lr >= 0) || !std::isfinite(lr)) throw DomainError("GdConfig: learning rate must be non-negative");
  if (!(loss_tol > 0)) throw DomainError("GdConfig: loss_tol must be positive");
  if (stride == 0) throw DomainError("GdConfig: stride must be at least 1");
}

const TrajectorySample* Trajectory::at(double t) const {
  auto it = std::lower_bound(samples.begin(), samples.end(), t,
                             [](const TrajectorySample& s, double v) { return s.t < v; });
  if (it != samples.end() && it->t == t) return &*it;
  return nullptr;
}

namespace {

/// Classical RK4 with preallocated stage storage.
class Rk4Stepper {
 public:
  Rk4Stepper(const Dataset<double>& ds, const Activation<double>& act)
      : ds_(ds), act_(act), k1_(ds.d()), k2_(ds.d()), k3_(ds.d()), k4_(ds.d()), tmp_(ds.d()) {}

  /// out = w advanced by h. k1 must already hold grad L(w) (see prime()).
  void step(const Vector& w, double h, Vector& out) {
    tmp_.noalias() = w - (h / 2) * k1_;
    grad_into(ds_, act_, tmp_, k2_);
    tmp_.noalias() = w - (h / 2) * k2_;
    grad_into(ds_, act_, tmp_, k3_);
    tmp_.noalias() = w - h * k3_;
    grad_into(ds_, act_, tmp_, k4_);
    out.noalias() = w - (h / 6) * (k1_ + 2 * k2_ + 2 * k3_ + k4_);
  }

  /// Evaluates grad at w into k1; returns the loss.
  double prime(const Vector& w) { return grad_into(ds_, act_, w, k1_); }
  const Vector& gradient() const { return k1_; }

 private:
  const Dataset<double>& ds_;
  const Activation<double>& act_;
  Vector k1_, k2_, k3_, k4_, tmp_;
};

/// Index of an example whose pre-activation genuinely changes sign between
/// z_old and z_new, or -1.
Eigen::Index crossing(const Vector& z_old, const Vector& z_new) {
  for (Eigen::Index i = 0; i < z_old.size(); ++i) {
    if (z_old(i) * z_new(i) < 0 && std::max(std::abs(z_old(i)), std::abs(z_new(i))) > kKinkBand) {
      return i;
    }
  }
  return -1;
}

void check_finite(const Vector& w, double bound, std::size_t step) {
  if (!w.allFinite()) throw DivergenceError("integration produced a non-finite state", step);
  if (w.norm() > bound) {
    std::ostringstream msg;
    msg << "iterate norm exceeded " << bound << " at step " << step;
    throw DivergenceError(msg.str(), step);
  }
}

}  // namespace

FlowRun integrate_flow(const Dataset<double>& ds, const Activation<double>& act, const Vector& w0,
                       const FlowConfig& cfg) {
  cfg.validate();
  if (w0.size() != ds.d()) throw DimensionError("integrate_flow: w0 length mismatch");
  if (!w0.allFinite()) throw DomainError("integrate_flow: w0 must be finite");

  FlowRun run;
  Rk4Stepper rk(ds, act);
  Vector w = w0;
  Vector w_next(ds.d());
  double t = 0;
  double current_loss = rk.prime(w);
  std::size_t steps = 0;
  auto checkpoint = cfg.checkpoints.begin();
  while (checkpoint != cfg.checkpoints.end() && *checkpoint <= 0) ++checkpoint;

  auto record = [&](double time) {
    auto& samples = run.trajectory.samples;
    if (!samples.empty() && samples.back().t >= time) return;
    samples.push_back({time, w, current_loss, regime_pattern(ds, w)});
  };
  record(0);

  Vector z_old = ds.X * w;
  Vector z_new(ds.n()), z_probe(ds.n()), probe(ds.d());
  while (true) {
    const double gnorm = rk.gradient().norm();
    if (current_loss < cfg.loss_tol || gnorm < cfg.grad_tol || t >= cfg.t_max) break;

    double h = std::min(cfg.step, cfg.t_max - t);
    bool at_checkpoint = false;
    if (checkpoint != cfg.checkpoints.end() && t + h >= *checkpoint) {
      h = *checkpoint - t;
      at_checkpoint = true;
    }
    rk.step(w, h, w_next);
    z_new.noalias() = ds.X * w_next;

    const Eigen::Index first = crossing(z_old, z_new);
    bool event = false;
    if (first >= 0) {
      // Shrink the step to the earliest sign change, localized by bisection.
      double lo = 0, hi = h;
      while (hi - lo > cfg.event_refine_tol) {
        const double mid = 0.5 * (lo + hi);
        rk.step(w, mid, probe);
        z_probe.noalias() = ds.X * probe;
        if (crossing(z_old, z_probe) >= 0) {
          hi = mid;
        } else {
          lo = mid;
        }
      }
      if (hi < h) {
        h = hi;
        at_checkpoint = false;
        rk.step(w, h, w_next);
        z_new.noalias() = ds.X * w_next;
      }
      event = true;
    }

    t = at_checkpoint ? *checkpoint : t + h;
    if (at_checkpoint) ++checkpoint;
    w.swap(w_next);
    ++steps;
    check_finite(w, cfg.divergence_bound, steps);
    current_loss = rk.prime(w);

    if (event) {
      for (Eigen::Index i = 0; i < z_old.size(); ++i) {
        if (z_old(i) * z_new(i) < 0) {
          run.trajectory.events.push_back({t, i, classify(z_old(i)), classify(z_new(i), 0.0)});
        }
      }
    }
    z_old = z_new;
    if (event || at_checkpoint || steps % cfg.stride == 0) record(t);
  }
  record(t);

  run.result.w_inf = w;
  run.result.final_loss = current_loss;
  run.result.final_grad_norm = rk.gradient().norm();
  run.result.converged = current_loss < cfg.loss_tol;
  run.result.t_end = t;
  run.result.steps = steps;
  return run;
}

double monotone_distance_check(const Trajectory& traj, const Vector& ref) {
  double worst = 0;
  for (std::size_t k = 1; k < traj.samples.size(); ++k) {
    const double inc = (traj.samples[k].w - ref).norm() - (traj.samples[k - 1].w - ref).norm();
    worst = std::max(worst, inc);
  }
  return worst;
}

GdRun run_gd(const Dataset<double>& ds, const Activation<double>& act, const Vector& w0,
             const GdConfig& cfg) {
  cfg.validate();
  if (w0.size() != ds.d()) throw DimensionError("run_gd: start length mismatch");
  GdRun run;
  Vector w = w0;
  Vector g(ds.d());
  std::size_t k = 0;
  double current = grad_into(ds, act, w, g);
  auto record = [&] {
    run.trace.samples.push_back({static_cast<double>(k) * cfg.lr, w, current, regime_pattern(ds, w)});
  };
  record();
  while (current >= cfg.loss_tol && k < cfg.max_iters) {
    w.noalias() -= cfg.lr * g;
    ++k;
    check_finite(w, cfg.divergence_bound, k);
    current = grad_into(ds, act, w, g);
    if (k % cfg.stride == 0) record();
  }
  if (k % cfg.stride != 0) record();
  run.w_final = w;
  run.final_loss = current;
  run.iters = k;
  run.converged = current < cfg.loss_tol;
  return run;
}

HiddenRun run_gd_hidden(const Dataset<double>& ds, const HiddenParams<double>& start,
                        const GdConfig& cfg) {
  cfg.validate();
  if (start.w.size() != ds.d()) throw DimensionError("run_gd_hidden: start length mismatch");
  HiddenRun run;
  Vector w = start.w;
  double v = start.v;
  Vector gw(ds.d());
  double gv = 0;
  std::size_t k = 0;
  double current = hidden_grad_into(ds, w, v, gw, gv);
  auto record = [&] { run.trace.push_back({static_cast<double>(k) * cfg.lr, w, v, current}); };
  record();
  while (current >= cfg.loss_tol && k < cfg.max_iters) {
    w.noalias() -= cfg.lr * gw;
    v -= cfg.lr * gv;
    ++k;
    if (!std::isfinite(v) || std::abs(v) > cfg.divergence_bound) {
      throw DivergenceError("hidden gradient descent diverged", k);
    }
    check_finite(w, cfg.divergence_bound, k);
    current = hidden_grad_into(ds, w, v, gw, gv);
    if (k % cfg.stride == 0) record();
  }
  if (k % cfg.stride != 0) record();
  run.final = {w, v};
  run.final_loss = current;
  run.iters = k;
  run.converged = current < cfg.loss_tol;
  run.t_end = static_cast<double>(k) * cfg.lr;
  return run;
}

HiddenRun integrate_hidden_flow(const Dataset<double>& ds, const HiddenParams<double>& start,
                                const HiddenFlowConfig& cfg) {
  if (!(cfg.step > 0 && cfg.t_max > 0 && cfg.loss_tol > 0) || cfg.stride == 0) {
    throw DomainError("HiddenFlowConfig: step, t_max, loss_tol and stride must be positive");
  }
  if (start.w.size() != ds.d()) throw DimensionError("integrate_hidden_flow: start length mismatch");
  const Eigen::Index d = ds.d();
  // Stacked state (w, v).
  Vector s(d + 1), tmp(d + 1), k1(d + 1), k2(d + 1), k3(d + 1), k4(d + 1);
  s << start.w, start.v;
  auto field = [&](const Vector& state, Vector& out) {
    auto gw = out.head(d);
    double gv = 0;
    const double l = hidden_grad_into(ds, state.head(d), state(d), gw, gv);
    out(d) = gv;
    return l;
  };

  HiddenRun run;
  double t = 0;
  std::size_t k = 0;
  double current = field(s, k1);
  auto record = [&] { run.trace.push_back({t, s.head(d), s(d), current}); };
  record();
  while (current >= cfg.loss_tol && t < cfg.t_max) {
    const double h = std::min(cfg.step, cfg.t_max - t);
    tmp = s - (h / 2) * k1;
    field(tmp, k2);
    tmp = s - (h / 2) * k2;
    field(tmp, k3);
    tmp = s - h * k3;
    field(tmp, k4);
    s -= (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
    t += h;
    ++k;
    check_finite(s, 1e12, k);
    current = field(s, k1);
    if (k % cfg.stride == 0) record();
  }
  if (k % cfg.stride != 0) record();
  run.final = {s.head(d), s(d)};
  run.final_loss = current;
  run.iters = k;
  run.converged = current < cfg.loss_tol;
  run.t_end = t;
  return run;
}

}  // namespace reluflow
