#pragma once

// Families of datasets sharing one zero-loss ray on which training picks
// different points.

#include <string>
#include <vector>

#include <json.hpp>

#include "reluflow/closed_form.hpp"
#include "reluflow/hidden_lab.hpp"

namespace reluflow {

constexpr double kRayTol = 1e-3;
constexpr double kDistinctTol = 1e-2;

enum class WitnessKind { single_neuron, hidden_neuron };

/// Ray {base + q dir : q <= 0} (relative to an optional rotation).
struct SharedRay {
  Vector base;
  Vector dir;

  double distance(const Vector& p) const;
};

struct WitnessRecord {
  WitnessKind kind = WitnessKind::single_neuron;
  std::vector<double> gammas;
  std::vector<Vector> limits;
  std::vector<bool> converged;
  SharedRay shared_ray;
  Matrix pairwise_distances;
  std::vector<bool> on_ray;
  bool distinct = false;
  bool inconclusive = false;
  // Hidden-neuron witness only: u' = u~* - u* and its alignment with u*.
  double orthogonality = 0;  // |<u*, u'>| / (|u*| |u'|)
  double offset_norm = 0;    // |u'|

  bool complete() const;
  nlohmann::json to_json() const;
};

/// Limits of the family (X_gamma, y_alpha) from w = 0, from the closed form
/// or the integrator. gammas must contain 0 and 5.
WitnessRecord single_neuron_witness(double alpha, const std::vector<double>& gammas,
                                    bool use_closed_form, const FlowConfig& cfg = {});

/// epsilon sweeps for gamma in {0, 5}; u* and u~* are the sweep limits.
WitnessRecord hidden_neuron_witness(const std::vector<double>& epsilon_grid, const GdConfig& cfg = {});

/// Reruns a single-neuron witness on (X M^T, y) with the integrator and checks
/// every limit against M (base limit) within 1e-3; throws NumericalError
/// otherwise.
WitnessRecord rotated_witness(const WitnessRecord& base, const Matrix& rotation, double alpha = 1.0,
                              const FlowConfig& cfg = {});

}  // namespace reluflow
