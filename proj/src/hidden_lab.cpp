#include "reluflow/hidden_lab.hpp"

#include <cmath>
#include <sstream>

namespace reluflow {

HiddenParams<double> psi(const Vector& u) {
  const double norm = u.norm();
  if (norm == 0) return {Vector::Zero(u.size()), 0.0};
  const double root = std::sqrt(norm);
  return {u / root, root};
}

Vector psi_inv(const HiddenParams<double>& theta, double tol) {
  const double gap = std::abs(theta.w.norm() - theta.v);
  if (gap > tol) {
    std::ostringstream msg;
    msg << "psi_inv: parameters are not balanced (| |w| - v | = " << gap << ")";
    throw DomainError(msg.str());
  }
  return theta.v * theta.w;
}

EpsilonTraining train_from_epsilon(const Dataset<double>& ds, double epsilon, const GdConfig& cfg) {
  if (!(epsilon > 0)) throw DomainError("train_from_epsilon: epsilon must be positive");
  EpsilonTraining out;
  out.run = run_gd_hidden(ds, {Vector::Zero(ds.d()), epsilon}, cfg);
  out.u_final = out.run.final.u();
  return out;
}

double balancedness_drift(const std::vector<HiddenSample>& trace) {
  if (trace.empty()) return 0;
  const double c0 = trace.front().v * trace.front().v - trace.front().w.squaredNorm();
  double worst = 0;
  for (const auto& s : trace) worst = std::max(worst, std::abs(s.v * s.v - s.w.squaredNorm() - c0));
  return worst;
}

std::vector<double> default_epsilon_grid() { return {1.0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5}; }

std::optional<Vector> EpsilonSweep::limit_point(double tol) const {
  if (cells.size() < 2) return std::nullopt;
  const SweepCell& last = cells.back();
  const SweepCell& prev = cells[cells.size() - 2];
  if (!last.converged || !prev.converged) return std::nullopt;
  if ((last.u_final - prev.u_final).norm() >= tol) return std::nullopt;
  return last.u_final;
}

EpsilonSweep epsilon_sweep(const Dataset<double>& ds, const std::vector<double>& grid,
                           const GdConfig& cfg) {
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!(grid[k] > 0)) throw DomainError("epsilon_sweep: grid entries must be positive");
    if (k > 0 && !(grid[k] < grid[k - 1])) throw DomainError("epsilon_sweep: grid must be strictly decreasing");
  }
  GdConfig quiet = cfg;
  quiet.stride = cfg.max_iters + 1;  // endpoints only
  EpsilonSweep sweep;
  for (double eps : grid) {
    SweepCell cell;
    cell.epsilon = eps;
    try {
      const EpsilonTraining tr = train_from_epsilon(ds, eps, quiet);
      cell.u_final = tr.u_final;
      cell.v_final = tr.run.final.v;
      cell.final_loss = tr.run.final_loss;
      cell.iters = tr.run.iters;
      cell.converged = tr.run.converged;
    } catch (const DivergenceError& e) {
      cell.diverged = true;
      cell.iters = e.iteration();
      cell.u_final = Vector::Constant(ds.d(), std::nan(""));
      cell.final_loss = std::nan("");
    }
    sweep.cells.push_back(std::move(cell));
  }
  return sweep;
}

void require_rotation(const Matrix& m) {
  if (m.rows() != m.cols()) throw DimensionError("rotation: matrix must be square");
  const double orth = (m.transpose() * m - Matrix::Identity(m.rows(), m.cols())).cwiseAbs().maxCoeff();
  if (orth > 1e-12 || std::abs(m.determinant() - 1.0) > 1e-12) {
    throw DomainError("rotation: matrix is not in SO(d)");
  }
}

RotationCheck check_rotation_equivariance(const Dataset<double>& ds, const Matrix& rotation,
                                          double epsilon, const GdConfig& cfg) {
  require_rotation(rotation);
  if (rotation.rows() != ds.d()) throw DimensionError("rotation: dimension mismatch");
  const Dataset<double> rotated(ds.X * rotation.transpose(), ds.y);
  const EpsilonTraining base = train_from_epsilon(ds, epsilon, cfg);
  const EpsilonTraining turned = train_from_epsilon(rotated, epsilon, cfg);
  return {(turned.u_final - rotation * base.u_final).norm(),
          std::abs(turned.run.final.v - base.run.final.v)};
}

ScalingCheck check_scaling_equivariance(const Dataset<double>& ds, double alpha, double epsilon,
                                        const GdConfig& cfg) {
  if (!(alpha > 0)) throw DomainError("check_scaling_equivariance: alpha must be positive");
  const Dataset<double> scaled(ds.X, alpha * ds.y);
  const EpsilonTraining big = train_from_epsilon(scaled, epsilon, cfg);

  GdConfig matched = cfg;
  matched.lr = alpha * cfg.lr;
  matched.loss_tol = cfg.loss_tol / (alpha * alpha);
  const EpsilonTraining small = train_from_epsilon(ds, epsilon / std::sqrt(alpha), matched);

  const double root = std::sqrt(alpha);
  Vector gap(ds.d() + 1);
  gap << big.run.final.w - root * small.run.final.w, big.run.final.v - root * small.run.final.v;
  return {gap.norm(), (big.u_final - alpha * small.u_final).norm()};
}

Matrix random_rotation(std::mt19937_64& rng, Eigen::Index d) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) g(i, j) = normal(rng);
  const Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  // Make the factorization unique (positive R diagonal), then force det = +1.
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < d; ++j) {
    if (r(j, j) < 0) q.col(j) *= -1;
  }
  if (q.determinant() < 0) q.col(0) *= -1;
  return q;
}

}  // namespace reluflow
