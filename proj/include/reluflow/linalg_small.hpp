#pragma once

// Dense linear algebra for the tiny symmetric systems that drive the
// closed-form trajectories: a cyclic Jacobi eigensolver, the action of
// exp(-tA) through the eigenbasis, and a conditioned linear solve.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "reluflow/error.hpp"

namespace reluflow {

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Eigendecomposition A = basis * diag(eigenvalues) * basis^T of a small
/// symmetric matrix. Eigenvalues are sorted non-increasing; each basis column
/// has its largest-magnitude entry non-negative.
template <typename Scalar>
struct SymEig {
  Vec<Scalar> eigenvalues;
  Mat<Scalar> basis;

  Eigen::Index dim() const { return eigenvalues.size(); }

  Mat<Scalar> reconstruct() const {
    return basis * eigenvalues.asDiagonal() * basis.transpose();
  }
};

inline constexpr int kMaxJacobiSweeps = 64;

/// Cyclic Jacobi eigensolver for symmetric matrices of order 2..4.
template <typename Derived>
SymEig<typename Derived::Scalar> sym_eig(const Eigen::MatrixBase<Derived>& input,
                                         int max_sweeps = kMaxJacobiSweeps) {
  using Scalar = typename Derived::Scalar;
  using std::abs;
  using std::sqrt;

  const Eigen::Index n = input.rows();
  if (input.cols() != n) {
    throw DimensionError("sym_eig: matrix is not square");
  }
  if (n < 2 || n > 4) {
    throw DomainError("sym_eig: order must be 2, 3 or 4, got " + std::to_string(n));
  }
  const Scalar scale = std::max(Scalar(1), input.cwiseAbs().maxCoeff());
  const Scalar asym = (input - input.transpose()).cwiseAbs().maxCoeff();
  if (!(asym <= Scalar(1e-12) * scale)) {
    std::ostringstream msg;
    msg << "sym_eig: input is not symmetric (max |A - A^T| = " << asym << ")";
    throw DomainError(msg.str());
  }

  Mat<Scalar> a = (input + input.transpose()) / Scalar(2);
  Mat<Scalar> v = Mat<Scalar>::Identity(n, n);

  auto off_diagonal = [&]() {
    Scalar s(0);
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) s += a(p, q) * a(p, q);
    return sqrt(s);
  };

  const Scalar frob = a.norm();
  bool converged = false;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    const Scalar off = off_diagonal();
    if (off == Scalar(0) || off <= std::numeric_limits<Scalar>::epsilon() * Scalar(1e-2) * frob) {
      converged = true;
      break;
    }
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const Scalar apq = a(p, q);
        if (apq == Scalar(0)) continue;
        // Rotation angle that annihilates a(p, q).
        const Scalar theta = (a(q, q) - a(p, p)) / (Scalar(2) * apq);
        const Scalar t = (theta >= Scalar(0) ? Scalar(1) : Scalar(-1)) /
                         (abs(theta) + sqrt(theta * theta + Scalar(1)));
        const Scalar c = Scalar(1) / sqrt(t * t + Scalar(1));
        const Scalar s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar akp = a(k, p);
          const Scalar akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar apk = a(p, k);
          const Scalar aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = Scalar(0);
        a(q, p) = Scalar(0);
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar vkp = v(k, p);
          const Scalar vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  if (!converged && off_diagonal() > Scalar(1e-14) * frob) {
    throw NumericalError("sym_eig: Jacobi sweeps did not converge");
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index(0));
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return a(i, i) > a(j, j); });

  SymEig<Scalar> out;
  out.eigenvalues.resize(n);
  out.basis.resize(n, n);
  for (Eigen::Index c = 0; c < n; ++c) {
    const Eigen::Index src = order[static_cast<std::size_t>(c)];
    out.eigenvalues(c) = a(src, src);
    Vec<Scalar> col = v.col(src);
    Eigen::Index pivot = 0;
    for (Eigen::Index k = 1; k < n; ++k) {
      // strict comparison keeps the first index on ties
      if (abs(col(k)) > abs(col(pivot)) + Scalar(1e-14)) pivot = k;
    }
    if (col(pivot) < Scalar(0)) col = -col;
    out.basis.col(c) = col;
  }
  return out;
}

/// exp(-t A) v computed as U diag(exp(-lambda_i t)) U^T v.
template <typename Scalar, typename Derived>
Vec<Scalar> expm_sym_action(const SymEig<Scalar>& eig, Scalar t,
                            const Eigen::MatrixBase<Derived>& v) {
  if (v.size() != eig.dim()) {
    throw DimensionError("expm_sym_action: vector length does not match eigensystem");
  }
  if (!(t >= Scalar(0))) {
    throw DomainError("expm_sym_action: time must be non-negative");
  }
  const Vec<Scalar> decay = (-t * eig.eigenvalues.array()).exp().matrix();
  return eig.basis * (decay.asDiagonal() * (eig.basis.transpose() * v));
}

inline constexpr double kMaxConditionEstimate = 1e12;

/// Solves A x = b for a small nonsingular A. Rejects systems whose
/// reciprocal condition estimate puts the condition number above 1e12.
template <typename DerivedA, typename DerivedB>
Vec<typename DerivedA::Scalar> solve_linear(const Eigen::MatrixBase<DerivedA>& a,
                                            const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  if (a.rows() != a.cols()) throw DimensionError("solve_linear: matrix is not square");
  if (b.size() != a.rows()) throw DimensionError("solve_linear: rhs length mismatch");

  const Mat<Scalar> am = a;
  Eigen::PartialPivLU<Mat<Scalar>> lu(am);
  // Eigen's rcond estimate misses exactly zero pivots, so the pivot ratio is
  // checked as well.
  const auto pivots = lu.matrixLU().diagonal().cwiseAbs();
  const Scalar pivot_ratio = pivots.maxCoeff() > Scalar(0) ? pivots.minCoeff() / pivots.maxCoeff() : Scalar(0);
  const Scalar rcond = std::min(lu.rcond(), pivot_ratio);
  const double cond = rcond > Scalar(0) ? double(Scalar(1) / rcond)
                                        : std::numeric_limits<double>::infinity();
  if (!(cond <= kMaxConditionEstimate)) {
    std::ostringstream msg;
    msg << "solve_linear: matrix is singular or ill-conditioned (condition estimate " << cond
        << ")";
    throw IllConditionedError(msg.str(), cond);
  }
  return lu.solve(b.derived().template cast<Scalar>());
}

}  // namespace reluflow
