#include "reluflow/closed_form.hpp"

#include <cmath>
#include <sstream>

namespace reluflow {

namespace {

constexpr double kWindowSlack = 1e-12;

Vector head2(const Vector& v) { return v.head(2); }

}  // namespace

FamilyInstance::FamilyInstance(double g, double a)
    : gamma(g), alpha(a), X(x_gamma(g)), y(y_alpha(a)) {}

PiecewiseTrajectory::PiecewiseTrajectory(const FamilyInstance& inst, const SwitchSearch& search)
    : inst_(inst) {
  const Matrix x2 = inst.X.topLeftCorner(2, 2);
  part2_ = sym_eig(x2.transpose() * x2);
  target2_ = solve_linear(x2, inst.y.head(2));

  if (inst.gamma == 0) {
    limit_ = Vector::Zero(3);
    limit_.head(2) = target2_;
    return;
  }

  part1_ = sym_eig(inst.X.transpose() * inst.X);
  target3_ = solve_linear(inst.X, inst.y);

  // x_3.w(t) / (alpha gamma); its sign decides the regime.
  const Vector x3 = inst.X.row(2).transpose();
  const double scale = inst.alpha * inst.gamma;
  auto g = [&](double t) {
    return x3.dot(target3_ - expm_sym_action(part1_, t, target3_)) / scale;
  };

  const auto steps = static_cast<long>(std::floor(search.scan_max / search.scan_step + 0.5));
  double lo = 0, hi = 0;
  bool bracketed = false;
  for (long k = 1; k <= steps; ++k) {
    const double t = static_cast<double>(k) * search.scan_step;
    if (g(t) < 0) {
      lo = static_cast<double>(k - 1) * search.scan_step;
      hi = t;
      bracketed = true;
      break;
    }
  }
  if (!bracketed) {
    std::ostringstream msg;
    msg << "find_t1: x_3.w(t) keeps its sign on (0, " << search.scan_max << "] for gamma = " << inst.gamma;
    throw NumericalError(msg.str());
  }
  while (hi - lo > search.tol) {
    const double mid = 0.5 * (lo + hi);
    if (g(mid) < 0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  t1_ = 0.5 * (lo + hi);
  w_t1_ = target3_ - expm_sym_action(part1_, *t1_, target3_);
  limit_ = Vector(3);
  limit_ << target2_, w_t1_(2);
}

Vector PiecewiseTrajectory::eval_gamma0(double t) const {
  if (inst_.gamma != 0) throw DomainError("eval_gamma0: requires gamma = 0");
  if (!(t >= 0)) throw DomainError("eval_gamma0: time must be non-negative");
  Vector w = Vector::Zero(3);
  w.head(2) = target2_ - expm_sym_action(part2_, t, target2_);
  return w;
}

Vector PiecewiseTrajectory::eval_part1(double t) const {
  if (!t1_) throw DomainError("eval_part1: requires gamma > 0");
  if (!(t >= 0 && t <= *t1_ + kWindowSlack)) {
    std::ostringstream msg;
    msg << "eval_part1: t = " << t << " outside [0, t1 = " << *t1_ << "]";
    throw DomainError(msg.str());
  }
  return target3_ - expm_sym_action(part1_, t, target3_);
}

Vector PiecewiseTrajectory::eval_part2(double t) const {
  if (!t1_) throw DomainError("eval_part2: requires gamma > 0");
  if (!(t >= *t1_ - kWindowSlack)) {
    std::ostringstream msg;
    msg << "eval_part2: t = " << t << " precedes t1 = " << *t1_;
    throw DomainError(msg.str());
  }
  const double dt = std::max(0.0, t - *t1_);
  Vector w(3);
  w << target2_ + expm_sym_action(part2_, dt, Vector(head2(w_t1_) - target2_)), w_t1_(2);
  return w;
}

Vector PiecewiseTrajectory::at(double t) const {
  if (!t1_) return eval_gamma0(t);
  return t <= *t1_ ? eval_part1(t) : eval_part2(t);
}

Vector eval_gamma0(const FamilyInstance& inst, double t) {
  if (inst.gamma != 0) throw DomainError("eval_gamma0: requires gamma = 0");
  return PiecewiseTrajectory(inst).eval_gamma0(t);
}

Vector eval_part1(const FamilyInstance& inst, double t) {
  if (!(inst.gamma > 0)) throw DomainError("eval_part1: requires gamma > 0");
  return PiecewiseTrajectory(inst).eval_part1(t);
}

Vector eval_part2(const FamilyInstance& inst, double t) {
  if (!(inst.gamma > 0)) throw DomainError("eval_part2: requires gamma > 0");
  return PiecewiseTrajectory(inst).eval_part2(t);
}

double find_t1(const FamilyInstance& inst, const SwitchSearch& search) {
  if (!(inst.gamma > 0)) throw DomainError("find_t1: requires gamma > 0");
  return *PiecewiseTrajectory(inst, search).t1();
}

Vector closed_form_limit(const FamilyInstance& inst) { return PiecewiseTrajectory(inst).limit(); }

double residual_check(const FamilyInstance& inst, const std::vector<double>& grid, double fd_step,
                      double switch_window) {
  const PiecewiseTrajectory traj(inst);
  const Dataset<double> ds = inst.dataset();
  const auto relu = Activation<double>::relu();
  double worst = 0;
  for (double t : grid) {
    if (traj.t1() && std::abs(t - *traj.t1()) < switch_window) continue;
    Vector derivative;
    if (t >= fd_step) {
      derivative = (traj.at(t + fd_step) - traj.at(t - fd_step)) / (2 * fd_step);
    } else {
      derivative = (-3 * traj.at(t) + 4 * traj.at(t + fd_step) - traj.at(t + 2 * fd_step)) / (2 * fd_step);
    }
    worst = std::max(worst, (derivative + grad(ds, relu, traj.at(t))).norm());
  }
  return worst;
}

Trajectory sample_closed_form(const PiecewiseTrajectory& traj, const std::vector<double>& grid) {
  const Dataset<double> ds = traj.instance().dataset();
  const auto relu = Activation<double>::relu();
  Trajectory out;
  for (double t : grid) {
    const Vector w = traj.at(t);
    out.samples.push_back({t, w, loss(ds, relu, w), regime_pattern(ds, w)});
  }
  if (traj.t1()) out.events.push_back({*traj.t1(), 2, Sign::positive, Sign::negative});
  return out;
}

std::vector<double> uniform_grid(double t0, double t1, double dt) {
  if (!(dt > 0) || !(t1 >= t0)) throw DomainError("uniform_grid: need dt > 0 and t1 >= t0");
  std::vector<double> grid;
  const auto n = static_cast<long>(std::floor((t1 - t0) / dt + 1e-9));
  grid.reserve(static_cast<std::size_t>(n + 1));
  for (long k = 0; k <= n; ++k) grid.push_back(t0 + static_cast<double>(k) * dt);
  return grid;
}

}  // namespace reluflow
