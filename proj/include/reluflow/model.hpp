#pragma once

// Single-neuron objective  L(w)    = 1/2 sum_i (sigma(x_i.w) - y_i)^2
// Hidden-neuron objective  L(w, v) = 1/2 sum_i (v sigma(x_i.w) - y_i)^2

#include <Eigen/Dense>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "reluflow/error.hpp"
#include "reluflow/linalg_small.hpp"

namespace reluflow {

/// |x_i.w| at or below this is treated as sitting on the kink.
inline constexpr double kKinkBand = 1e-9;

template <typename Scalar>
struct Dataset {
  Mat<Scalar> X;  // rows are the examples x_i^T
  Vec<Scalar> y;

  Dataset() = default;
  Dataset(Mat<Scalar> x, Vec<Scalar> targets) : X(std::move(x)), y(std::move(targets)) {
    validate();
  }

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index d() const { return X.cols(); }

  void validate() const {
    if (X.rows() < 1 || X.cols() < 1) throw DimensionError("Dataset: X must be non-empty");
    if (y.size() != X.rows()) {
      std::ostringstream msg;
      msg << "Dataset: X has " << X.rows() << " rows but y has " << y.size() << " entries";
      throw DimensionError(msg.str());
    }
    if (!X.allFinite() || !y.allFinite()) throw DomainError("Dataset: entries must be finite");
  }
};

enum class ActivationKind { relu, leaky, identity };

template <typename Scalar>
struct Activation {
  ActivationKind kind = ActivationKind::relu;
  Scalar slope = Scalar(0);  // negative-side slope, leaky only
  Scalar derivative_at_zero = Scalar(1);

  static Activation relu() { return {ActivationKind::relu, Scalar(0), Scalar(1)}; }
  static Activation leaky(Scalar a = Scalar(0.5)) {
    if (!(a > Scalar(0) && a < Scalar(1))) {
      throw DomainError("Activation: leaky slope must lie in (0, 1)");
    }
    return {ActivationKind::leaky, a, Scalar(1)};
  }
  static Activation identity() { return {ActivationKind::identity, Scalar(1), Scalar(1)}; }

  /// Parses "relu", "identity", "leaky" or "leaky:<slope>".
  static Activation parse(const std::string& spec) {
    if (spec == "relu") return relu();
    if (spec == "identity") return identity();
    if (spec == "leaky") return leaky();
    if (spec.rfind("leaky:", 0) == 0) {
      std::istringstream in(spec.substr(6));
      double a = 0;
      if (!(in >> a) || !in.eof()) throw DomainError("Activation: bad leaky slope in '" + spec + "'");
      return leaky(Scalar(a));
    }
    throw DomainError("Activation: unknown activation '" + spec + "'");
  }

  std::string name() const {
    switch (kind) {
      case ActivationKind::relu: return "relu";
      case ActivationKind::identity: return "identity";
      case ActivationKind::leaky: {
        std::ostringstream s;
        s << "leaky:" << slope;
        return s.str();
      }
    }
    return "?";
  }

  bool has_kink() const { return kind != ActivationKind::identity; }
  bool invertible() const { return kind != ActivationKind::relu; }

  Scalar value(Scalar z) const {
    switch (kind) {
      case ActivationKind::relu: return z > Scalar(0) ? z : Scalar(0);
      case ActivationKind::leaky: return z >= Scalar(0) ? z : slope * z;
      case ActivationKind::identity: return z;
    }
    return z;
  }

  /// One-sided derivative, with derivative_at_zero exactly at z == 0.
  Scalar derivative(Scalar z) const {
    if (kind == ActivationKind::identity) return Scalar(1);
    if (z > Scalar(0)) return Scalar(1);
    if (z < Scalar(0)) return kind == ActivationKind::relu ? Scalar(0) : slope;
    return derivative_at_zero;
  }

  /// Derivative used inside gradients: the whole kink band counts as z == 0.
  Scalar gradient_derivative(Scalar z) const {
    using std::abs;
    if (has_kink() && abs(z) <= Scalar(kKinkBand)) return derivative_at_zero;
    return derivative(z);
  }

  Scalar inverse(Scalar target) const {
    switch (kind) {
      case ActivationKind::identity: return target;
      case ActivationKind::leaky: return target >= Scalar(0) ? target : target / slope;
      case ActivationKind::relu: break;
    }
    throw DomainError("Activation: relu has no inverse");
  }
};

enum class Sign : char { negative = '-', zero = '0', positive = '+' };

template <typename Scalar>
Sign classify(Scalar z, Scalar band = Scalar(kKinkBand)) {
  using std::abs;
  if (abs(z) <= band) return Sign::zero;
  return z > Scalar(0) ? Sign::positive : Sign::negative;
}

/// sign(x_i.w) per example, rendered as a string over {+,0,-}.
struct RegimePattern {
  std::vector<Sign> signs;

  std::string str() const {
    std::string s;
    s.reserve(signs.size());
    for (Sign g : signs) s.push_back(static_cast<char>(g));
    return s;
  }
  static RegimePattern parse(const std::string& s) {
    RegimePattern p;
    for (char c : s) {
      if (c != '+' && c != '-' && c != '0') throw DomainError("RegimePattern: bad symbol in '" + s + "'");
      p.signs.push_back(static_cast<Sign>(c));
    }
    return p;
  }
  friend bool operator==(const RegimePattern&, const RegimePattern&) = default;
};

template <typename Scalar, typename Derived>
RegimePattern regime_pattern(const Dataset<Scalar>& ds, const Eigen::MatrixBase<Derived>& w,
                             Scalar band = Scalar(kKinkBand)) {
  if (w.size() != ds.d()) throw DimensionError("regime_pattern: parameter length mismatch");
  RegimePattern p;
  p.signs.reserve(static_cast<std::size_t>(ds.n()));
  for (Eigen::Index i = 0; i < ds.n(); ++i) p.signs.push_back(classify<Scalar>(ds.X.row(i).dot(w), band));
  return p;
}

template <typename Scalar, typename Derived>
Scalar loss(const Dataset<Scalar>& ds, const Activation<Scalar>& act,
            const Eigen::MatrixBase<Derived>& w) {
  if (w.size() != ds.d()) throw DimensionError("loss: parameter length mismatch");
  Scalar total(0);
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    const Scalar r = act.value(ds.X.row(i).dot(w)) - ds.y(i);
    total += r * r;
  }
  return total / Scalar(2);
}

/// Writes grad L(w) into `out` without allocating; returns L(w).
template <typename Scalar, typename Derived, typename OutDerived>
Scalar grad_into(const Dataset<Scalar>& ds, const Activation<Scalar>& act,
                 const Eigen::MatrixBase<Derived>& w, Eigen::MatrixBase<OutDerived>& out) {
  if (w.size() != ds.d() || out.size() != ds.d()) {
    throw DimensionError("grad: parameter length mismatch");
  }
  out.setZero();
  Scalar total(0);
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    const Scalar z = ds.X.row(i).dot(w);
    const Scalar r = act.value(z) - ds.y(i);
    total += r * r;
    const Scalar coeff = r * act.gradient_derivative(z);
    if (coeff != Scalar(0)) out.noalias() += coeff * ds.X.row(i).transpose();
  }
  return total / Scalar(2);
}

template <typename Scalar, typename Derived>
Vec<Scalar> grad(const Dataset<Scalar>& ds, const Activation<Scalar>& act,
                 const Eigen::MatrixBase<Derived>& w) {
  Vec<Scalar> g(ds.d());
  grad_into(ds, act, w, g);
  return g;
}

/// Parameters of x -> v * relu(<x, w>).
template <typename Scalar>
struct HiddenParams {
  Vec<Scalar> w;
  Scalar v = Scalar(0);

  Vec<Scalar> u() const { return v * w; }
};

template <typename Scalar>
struct HiddenGradient {
  Vec<Scalar> w;
  Scalar v = Scalar(0);
};

template <typename Scalar>
Scalar hidden_loss(const Dataset<Scalar>& ds, const HiddenParams<Scalar>& theta) {
  if (theta.w.size() != ds.d()) throw DimensionError("hidden_loss: parameter length mismatch");
  const auto relu = Activation<Scalar>::relu();
  Scalar total(0);
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    const Scalar r = theta.v * relu.value(ds.X.row(i).dot(theta.w)) - ds.y(i);
    total += r * r;
  }
  return total / Scalar(2);
}

/// dL/dw = sum_i (v s_i - y_i) v sigma'(z_i) x_i,  dL/dv = sum_i (v s_i - y_i) s_i.
/// Non-allocating; returns the loss.
template <typename Scalar, typename WDerived, typename OutDerived>
Scalar hidden_grad_into(const Dataset<Scalar>& ds, const Eigen::MatrixBase<WDerived>& w, Scalar v,
                        Eigen::MatrixBase<OutDerived>& gw, Scalar& gv) {
  if (w.size() != ds.d() || gw.size() != ds.d()) {
    throw DimensionError("hidden_grad: parameter length mismatch");
  }
  const auto relu = Activation<Scalar>::relu();
  gw.setZero();
  gv = Scalar(0);
  Scalar total(0);
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    const Scalar z = ds.X.row(i).dot(w);
    const Scalar s = relu.value(z);
    const Scalar r = v * s - ds.y(i);
    total += r * r;
    gv += r * s;
    const Scalar coeff = r * v * relu.gradient_derivative(z);
    if (coeff != Scalar(0)) gw.noalias() += coeff * ds.X.row(i).transpose();
  }
  return total / Scalar(2);
}

template <typename Scalar>
HiddenGradient<Scalar> hidden_grad(const Dataset<Scalar>& ds, const HiddenParams<Scalar>& theta) {
  HiddenGradient<Scalar> g;
  g.w.resize(ds.d());
  hidden_grad_into(ds, theta.w, theta.v, g.w, g.v);
  return g;
}

/// Rows (3,-1,0), (4,2,0), (0,gamma,gamma).
template <typename Scalar = double>
Mat<Scalar> x_gamma(Scalar gamma) {
  if (!(gamma >= Scalar(0))) throw DomainError("x_gamma: gamma must be non-negative");
  Mat<Scalar> x(3, 3);
  x << 3, -1, 0,
       4, 2, 0,
       0, gamma, gamma;
  return x;
}

/// alpha * (16, 18, 0).
template <typename Scalar = double>
Vec<Scalar> y_alpha(Scalar alpha) {
  if (!(alpha > Scalar(0))) throw DomainError("y_alpha: alpha must be positive");
  Vec<Scalar> y(3);
  y << 16, 18, 0;
  return alpha * y;
}

template <typename Scalar = double>
Dataset<Scalar> family_dataset(Scalar gamma, Scalar alpha) {
  return Dataset<Scalar>(x_gamma<Scalar>(gamma), y_alpha<Scalar>(alpha));
}

}  // namespace reluflow
