#include "reluflow/witness.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace reluflow {

namespace {

Vector family_ray_base(double alpha) {
  Vector b(3);
  b << 5 * alpha, -alpha, 0;
  return b;
}

Vector e3() {
  Vector d = Vector::Zero(3);
  d(2) = 1;
  return d;
}

nlohmann::json vec_json(const Vector& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    a.push_back(std::isfinite(v(i)) ? nlohmann::json(v(i)) : nlohmann::json(nullptr));
  }
  return a;
}

void finish(WitnessRecord& rec) {
  const auto m = static_cast<Eigen::Index>(rec.limits.size());
  rec.pairwise_distances = Matrix::Zero(m, m);
  rec.on_ray.assign(rec.limits.size(), false);
  rec.distinct = false;
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    rec.on_ray[ui] = rec.converged[ui] && rec.shared_ray.distance(rec.limits[ui]) <= kRayTol;
    for (Eigen::Index j = 0; j < m; ++j) {
      rec.pairwise_distances(i, j) = (rec.limits[ui] - rec.limits[static_cast<std::size_t>(j)]).norm();
      if (rec.pairwise_distances(i, j) > kDistinctTol) rec.distinct = true;
    }
  }
}

}  // namespace

double SharedRay::distance(const Vector& p) const {
  if (p.size() != base.size()) throw DimensionError("SharedRay: dimension mismatch");
  const Vector off = p - base;
  const double q = std::min(0.0, off.dot(dir) / dir.squaredNorm());
  return (off - q * dir).norm();
}

bool WitnessRecord::complete() const {
  return !inconclusive && distinct && std::all_of(on_ray.begin(), on_ray.end(), [](bool b) { return b; });
}

nlohmann::json WitnessRecord::to_json() const {
  nlohmann::json j;
  j["kind"] = kind == WitnessKind::single_neuron ? "single_neuron" : "hidden_neuron";
  j["gammas"] = gammas;
  nlohmann::json lims = nlohmann::json::array();
  for (const auto& l : limits) lims.push_back(vec_json(l));
  j["limits"] = lims;
  j["converged"] = converged;
  j["shared_ray"] = {{"base", vec_json(shared_ray.base)}, {"direction", vec_json(shared_ray.dir)}};
  nlohmann::json dist = nlohmann::json::array();
  for (Eigen::Index i = 0; i < pairwise_distances.rows(); ++i) dist.push_back(vec_json(pairwise_distances.row(i).transpose()));
  j["pairwise_distances"] = dist;
  j["on_ray"] = on_ray;
  j["distinct"] = distinct;
  j["inconclusive"] = inconclusive;
  if (kind == WitnessKind::hidden_neuron) {
    j["orthogonality"] = orthogonality;
    j["offset_norm"] = offset_norm;
  }
  return j;
}

WitnessRecord single_neuron_witness(double alpha, const std::vector<double>& gammas,
                                    bool use_closed_form, const FlowConfig& cfg) {
  if (!(alpha > 0)) throw DomainError("single_neuron_witness: alpha must be positive");
  const auto has = [&](double g) { return std::find(gammas.begin(), gammas.end(), g) != gammas.end(); };
  if (!has(0.0) || !has(5.0)) throw DomainError("single_neuron_witness: gammas must contain 0 and 5");

  WitnessRecord rec;
  rec.kind = WitnessKind::single_neuron;
  rec.gammas = gammas;
  rec.shared_ray = {family_ray_base(alpha), e3()};
  const auto relu = Activation<double>::relu();
  for (double g : gammas) {
    const FamilyInstance inst(g, alpha);
    if (use_closed_form) {
      rec.limits.push_back(closed_form_limit(inst));
      rec.converged.push_back(true);
    } else {
      const FlowRun run = integrate_flow(inst.dataset(), relu, Vector::Zero(3), cfg);
      rec.limits.push_back(run.result.w_inf);
      rec.converged.push_back(run.result.converged);
    }
  }
  finish(rec);
  return rec;
}

WitnessRecord hidden_neuron_witness(const std::vector<double>& epsilon_grid, const GdConfig& cfg) {
  if (epsilon_grid.empty() || epsilon_grid.back() > 1e-4) {
    throw DomainError("hidden_neuron_witness: epsilon grid must reach 1e-4 or below");
  }
  WitnessRecord rec;
  rec.kind = WitnessKind::hidden_neuron;
  rec.gammas = {0.0, 5.0};
  rec.shared_ray = {family_ray_base(1.0), e3()};
  for (double g : rec.gammas) {
    const EpsilonSweep sweep = epsilon_sweep(family_dataset(g, 1.0), epsilon_grid, cfg);
    const auto lim = sweep.limit_point(kDistinctTol);
    if (!lim) rec.inconclusive = true;
    const SweepCell& last = sweep.cells.back();
    rec.limits.push_back(last.u_final);
    rec.converged.push_back(last.converged);
  }
  finish(rec);
  const Vector& u_star = rec.limits[0];
  const Vector offset = rec.limits[1] - u_star;
  rec.offset_norm = offset.norm();
  const double scale = u_star.norm() * rec.offset_norm;
  rec.orthogonality = scale > 0 ? std::abs(u_star.dot(offset)) / scale : std::nan("");
  if (!(rec.offset_norm > kDistinctTol)) rec.distinct = false;
  return rec;
}

WitnessRecord rotated_witness(const WitnessRecord& base, const Matrix& rotation, double alpha,
                              const FlowConfig& cfg) {
  require_rotation(rotation);
  if (base.kind != WitnessKind::single_neuron) {
    throw DomainError("rotated_witness: only single-neuron records can be rotated");
  }
  if (rotation.rows() != 3) throw DimensionError("rotated_witness: rotation must be 3x3");

  WitnessRecord rec;
  rec.kind = base.kind;
  rec.gammas = base.gammas;
  rec.shared_ray = {rotation * base.shared_ray.base, rotation * base.shared_ray.dir};
  const auto relu = Activation<double>::relu();
  for (std::size_t k = 0; k < base.gammas.size(); ++k) {
    const FamilyInstance inst(base.gammas[k], alpha);
    const Dataset<double> turned(inst.X * rotation.transpose(), inst.y);
    const FlowRun run = integrate_flow(turned, relu, Vector::Zero(3), cfg);
    const Vector expected = rotation * base.limits[k];
    const double gap = (run.result.w_inf - expected).norm();
    if (gap > kRayTol) {
      std::ostringstream msg;
      msg << "rotated_witness: gamma = " << base.gammas[k] << " limit deviates from M w by " << gap;
      throw NumericalError(msg.str());
    }
    rec.limits.push_back(run.result.w_inf);
    rec.converged.push_back(run.result.converged);
  }
  finish(rec);
  return rec;
}

}  // namespace reluflow
