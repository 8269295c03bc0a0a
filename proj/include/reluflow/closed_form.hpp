#pragma once

// Analytic gradient-flow trajectories from w(0) = 0 for the family
//   X_gamma = [[3,-1,0],[4,2,0],[0,gamma,gamma]],  y_alpha = alpha (16,18,0).
//
// gamma = 0: the third example is inert and (w1, w2) follows a single linear
// regime towards alpha (5,-1).
// gamma > 0: all examples are active until x_3.w(t1) = 0 (part 1, driven by
// X^T X); afterwards x_3.w <= 0, w3 freezes and (w1, w2) relaxes under the
// 2x2 block (part 2).

#include <optional>
#include <vector>

#include "reluflow/flow.hpp"

namespace reluflow {

struct FamilyInstance {
  double gamma = 0;
  double alpha = 1;
  Matrix X;
  Vector y;

  FamilyInstance(double gamma, double alpha);
  Dataset<double> dataset() const { return Dataset<double>(X, y); }
};

/// Bracket scan for the switch time: first sign change of x_3.w(t) on a
/// 1e-3 grid over (0, 2], then bisection to 1e-12.
struct SwitchSearch {
  double scan_step = 1e-3;
  double scan_max = 2.0;
  double tol = 1e-12;
};

class PiecewiseTrajectory {
 public:
  explicit PiecewiseTrajectory(const FamilyInstance& inst, const SwitchSearch& search = {});

  const FamilyInstance& instance() const { return inst_; }
  /// Switch time; empty for gamma = 0 (a single regime for all t).
  std::optional<double> t1() const { return t1_; }
  const SymEig<double>& part1() const { return part1_; }
  const SymEig<double>& part2() const { return part2_; }
  const Vector& w_t1() const { return w_t1_; }
  const Vector& limit() const { return limit_; }

  /// w(t) for any t >= 0, dispatching on the regime.
  Vector at(double t) const;

  Vector eval_gamma0(double t) const;
  Vector eval_part1(double t) const;
  Vector eval_part2(double t) const;

 private:
  FamilyInstance inst_;
  std::optional<double> t1_;
  SymEig<double> part1_;  // of X^T X (gamma > 0)
  SymEig<double> part2_;  // of the leading 2x2 block's Gram matrix
  Vector target3_;        // X^{-1} y = alpha (5,-1,1)
  Vector target2_;        // alpha (5,-1)
  Vector w_t1_;
  Vector limit_;
};

Vector eval_gamma0(const FamilyInstance& inst, double t);
Vector eval_part1(const FamilyInstance& inst, double t);
Vector eval_part2(const FamilyInstance& inst, double t);
double find_t1(const FamilyInstance& inst, const SwitchSearch& search = {});
Vector closed_form_limit(const FamilyInstance& inst);

/// max over the grid of |w'_fd(t) + grad L(w(t))| (central differences),
/// skipping points within `switch_window` of t1.
double residual_check(const FamilyInstance& inst, const std::vector<double>& grid,
                      double fd_step = 1e-7, double switch_window = 1e-6);

/// Closed-form samples on a time grid, in the flow trajectory layout.
Trajectory sample_closed_form(const PiecewiseTrajectory& traj, const std::vector<double>& grid);

std::vector<double> uniform_grid(double t0, double t1, double dt);

}  // namespace reluflow
