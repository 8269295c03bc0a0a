#include "reluflow/minnorm.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace reluflow {

MinNormSolution min_norm_interpolant(const Dataset<double>& ds, const Activation<double>& act,
                                     const Vector& w0) {
  if (!act.invertible()) throw DomainError("min_norm_interpolant: activation is not invertible");
  if (w0.size() != ds.d()) throw DimensionError("min_norm_interpolant: w0 length mismatch");
  Vector target(ds.n());
  for (Eigen::Index i = 0; i < ds.n(); ++i) target(i) = act.inverse(ds.y(i));

  const Matrix gram = ds.X * ds.X.transpose();
  MinNormSolution sol;
  try {
    sol.multipliers = solve_linear(gram, target - ds.X * w0);
  } catch (const IllConditionedError& e) {
    std::ostringstream msg;
    msg << "min_norm_interpolant: rows of X are linearly dependent (condition estimate "
        << e.condition_estimate() << ")";
    throw IllConditionedError(msg.str(), e.condition_estimate());
  }
  sol.w_star = w0 + ds.X.transpose() * sol.multipliers;
  sol.distance = (sol.w_star - w0).norm();
  return sol;
}

Vector relu_family_min_norm(const FamilyInstance& inst) {
  Vector w(3);
  w << 5 * inst.alpha, -inst.alpha, 0;
  return w;
}

Vector relu_min_norm(const Dataset<double>& ds, const Vector& w0) {
  if (w0.size() != ds.d()) throw DimensionError("relu_min_norm: w0 length mismatch");
  std::vector<Eigen::Index> positive, zero;
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    if (ds.y(i) < 0) throw DomainError("relu_min_norm: negative target is not realizable");
    (ds.y(i) > 0 ? positive : zero).push_back(i);
  }
  if (zero.size() > 20) throw DomainError("relu_min_norm: too many zero targets to enumerate");

  const double scale = std::max(1.0, ds.y.cwiseAbs().maxCoeff());
  const double feas_tol = 1e-9 * scale;
  Vector best;
  double best_dist = std::numeric_limits<double>::infinity();
  const std::size_t subsets = std::size_t(1) << zero.size();
  for (std::size_t mask = 0; mask < subsets; ++mask) {
    std::vector<Eigen::Index> active = positive;
    for (std::size_t k = 0; k < zero.size(); ++k) {
      if (mask & (std::size_t(1) << k)) active.push_back(zero[k]);
    }
    Vector w = w0;
    if (!active.empty()) {
      Matrix a(static_cast<Eigen::Index>(active.size()), ds.d());
      Vector b(a.rows());
      for (Eigen::Index r = 0; r < a.rows(); ++r) {
        a.row(r) = ds.X.row(active[static_cast<std::size_t>(r)]);
        b(r) = ds.y(active[static_cast<std::size_t>(r)]);
      }
      // Least-norm correction onto the affine set {a w = b}.
      const Eigen::CompleteOrthogonalDecomposition<Matrix> cod(a);
      w = w0 + cod.solve(Vector(b - a * w0));
      if ((a * w - b).cwiseAbs().maxCoeff() > feas_tol) continue;
    }
    bool feasible = true;
    for (Eigen::Index i : zero) {
      if (ds.X.row(i).dot(w) > feas_tol) feasible = false;
    }
    if (!feasible) continue;
    const double dist = (w - w0).norm();
    if (dist < best_dist) {
      best_dist = dist;
      best = w;
    }
  }
  if (best.size() == 0) throw NumericalError("relu_min_norm: no zero-loss point exists");
  return best;
}

double factor2_ratio(const Vector& w_inf, const Vector& w_star, const Vector& w0) {
  if (w_inf.size() != w0.size() || w_star.size() != w0.size()) {
    throw DimensionError("factor2_ratio: length mismatch");
  }
  const double num = (w_inf - w0).norm();
  const double den = (w_star - w0).norm();
  if (den == 0) {
    if (num == 0) return 1.0;
    throw DomainError("factor2_ratio: w_star equals w0 but the flow limit moved away");
  }
  return num / den;
}

PlantedInstance planted_instance(std::mt19937_64& rng, Eigen::Index n, Eigen::Index d,
                                 const Activation<double>& act) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix x(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = normal(rng);
  Vector w(d);
  for (Eigen::Index j = 0; j < d; ++j) w(j) = normal(rng);
  w /= w.norm();
  Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = act.value(x.row(i).dot(w));
  return {Dataset<double>(std::move(x), std::move(y)), w};
}

CensusReport factor2_census(std::size_t count, std::uint64_t seed, const FlowConfig& cfg) {
  const auto relu = Activation<double>::relu();
  CensusReport report;
  for (std::size_t k = 0; k < count; ++k) {
    CensusEntry entry;
    entry.seed = seed + k;
    std::mt19937_64 rng(entry.seed);
    entry.n = 1 + static_cast<Eigen::Index>(k % 3);
    const PlantedInstance inst = planted_instance(rng, entry.n, 3, relu);
    const Vector w0 = Vector::Zero(3);
    const FlowRun run = integrate_flow(inst.ds, relu, w0, cfg);
    entry.converged = run.result.converged;
    if (entry.converged) {
      entry.ratio = factor2_ratio(run.result.w_inf, relu_min_norm(inst.ds, w0), w0);
      report.max_ratio = std::max(report.max_ratio, entry.ratio);
      ++report.converged_count;
    } else {
      ++report.excluded_count;
    }
    report.entries.push_back(entry);
  }
  return report;
}

nlohmann::json census_to_json(const CensusReport& report) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : report.entries) {
    nlohmann::json j{{"seed", e.seed}, {"n", e.n}, {"converged", e.converged}};
    j["ratio"] = e.converged ? nlohmann::json(e.ratio) : nlohmann::json(nullptr);
    entries.push_back(j);
  }
  return {{"entries", entries},
          {"max_ratio", report.max_ratio},
          {"converged", report.converged_count},
          {"excluded", report.excluded_count}};
}

}  // namespace reluflow
