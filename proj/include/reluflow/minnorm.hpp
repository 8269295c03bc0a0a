#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <json.hpp>

#include "reluflow/closed_form.hpp"
#include "reluflow/flow.hpp"

namespace reluflow {

/// Closest zero-loss point to w0: w_star = w0 + X^T multipliers.
struct MinNormSolution {
  Vector w_star;
  Vector multipliers;
  double distance = 0;
};

/// KKT solve for a strictly monotonic (invertible) activation:
/// (X X^T) lambda = sigma^{-1}(y) - X w0.
MinNormSolution min_norm_interpolant(const Dataset<double>& ds, const Activation<double>& act,
                                     const Vector& w0);

/// alpha (5,-1,0), the smallest-norm point of {alpha (5,-1,s) : s <= 0}.
Vector relu_family_min_norm(const FamilyInstance& inst);

/// Closest point to w0 of {w : relu(Xw) = y}, by enumerating which
/// zero-target constraints x_i.w <= 0 are active. Intended for n <= 10.
Vector relu_min_norm(const Dataset<double>& ds, const Vector& w0);

/// |w_inf - w0| / |w_star - w0|.
double factor2_ratio(const Vector& w_inf, const Vector& w_star, const Vector& w0);

/// X with Gaussian rows, planted unit-norm w_true and y = sigma(X w_true).
struct PlantedInstance {
  Dataset<double> ds;
  Vector w_true;
};
PlantedInstance planted_instance(std::mt19937_64& rng, Eigen::Index n, Eigen::Index d,
                                 const Activation<double>& act);

struct CensusEntry {
  std::uint64_t seed = 0;
  Eigen::Index n = 0;
  bool converged = false;
  double ratio = 0;
};

struct CensusReport {
  std::vector<CensusEntry> entries;
  double max_ratio = 0;
  std::size_t converged_count = 0;
  std::size_t excluded_count = 0;
};

/// Runs relu flows from 0 on `count` planted instances (d = 3, n in 1..3)
/// and records |w_inf| / |w_star| for the converged ones.
CensusReport factor2_census(std::size_t count, std::uint64_t seed, const FlowConfig& cfg = {});

nlohmann::json census_to_json(const CensusReport& report);

}  // namespace reluflow
