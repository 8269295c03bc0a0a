#pragma once

// Experiments on x -> v relu(<x, w>) trained from (0, epsilon).

#include <optional>
#include <random>
#include <vector>

#include "reluflow/flow.hpp"

namespace reluflow {

/// u -> (u / sqrt|u|, sqrt|u|), with 0 -> (0, 0). Lands on |w| = v.
HiddenParams<double> psi(const Vector& u);

/// (w, v) -> v w for balanced parameters; rejects | |w| - v | > tol.
Vector psi_inv(const HiddenParams<double>& theta, double tol = 1e-9);

struct EpsilonTraining {
  HiddenRun run;
  Vector u_final;
};

EpsilonTraining train_from_epsilon(const Dataset<double>& ds, double epsilon, const GdConfig& cfg);

/// max_t |(v^2 - |w|^2) - (v0^2 - |w0|^2)| over the trace; from (0, eps) this
/// is the deviation from v^2 = |w|^2 + eps^2.
double balancedness_drift(const std::vector<HiddenSample>& trace);

std::vector<double> default_epsilon_grid();  // 1, 1e-1, ..., 1e-5

struct SweepCell {
  double epsilon = 0;
  Vector u_final;
  double v_final = 0;
  double final_loss = 0;
  std::size_t iters = 0;
  bool converged = false;
  bool diverged = false;
};

struct EpsilonSweep {
  std::vector<SweepCell> cells;

  /// u at the smallest epsilon if the last two grid points agree within
  /// `tol`, otherwise empty.
  std::optional<Vector> limit_point(double tol) const;
};

/// One training run per epsilon; divergence is flagged per cell.
EpsilonSweep epsilon_sweep(const Dataset<double>& ds, const std::vector<double>& grid,
                           const GdConfig& cfg);

struct RotationCheck {
  double u_deviation = 0;  // |u(X M^T) - M u(X)|
  double v_deviation = 0;
};

/// Trains on (X, y) and (X M^T, y) from the same (0, eps).
RotationCheck check_rotation_equivariance(const Dataset<double>& ds, const Matrix& rotation,
                                          double epsilon, const GdConfig& cfg);

struct ScalingCheck {
  double theta_deviation = 0;  // |theta(X, a y) - sqrt(a) theta(X, y)|
  double u_deviation = 0;      // |u(X, a y) - a u(X, y)|
};

/// Trains on (X, a y) from (0, eps) and on (X, y) from (0, eps / sqrt(a)).
/// The second run uses step a*lr, the discrete image of the time change
/// t -> a t, and loss tolerance loss_tol / a^2, so both runs stop together.
ScalingCheck check_scaling_equivariance(const Dataset<double>& ds, double alpha, double epsilon,
                                        const GdConfig& cfg);

/// Haar-like rotation from the QR factorization of a Gaussian matrix.
Matrix random_rotation(std::mt19937_64& rng, Eigen::Index d);

void require_rotation(const Matrix& m);

}  // namespace reluflow
