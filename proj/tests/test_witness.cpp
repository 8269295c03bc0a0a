#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "reluflow/witness.hpp"

using namespace reluflow;

namespace {

const std::vector<double> kGammas{0.0, 1.0, 2.0, 5.0};

GdConfig fast_gd() {
  GdConfig cfg;
  cfg.lr = 1e-4;
  cfg.loss_tol = 1e-15;
  return cfg;
}

}  // namespace

TEST(SharedRay, Distance) {
  Vector base(3), dir(3), p(3);
  base << 5, -1, 0;
  dir << 0, 0, 1;
  const SharedRay ray{base, dir};
  p << 5, -1, -3;
  EXPECT_EQ(ray.distance(p), 0.0);
  p << 5, -1, 2;  // wrong side of the ray
  EXPECT_EQ(ray.distance(p), 2.0);
  p << 6, -1, -1;
  EXPECT_EQ(ray.distance(p), 1.0);
}

TEST(SingleNeuronWitness, DistinctPointsOnRay) {
  const WitnessRecord rec = single_neuron_witness(1.0, kGammas, true);
  EXPECT_TRUE(rec.complete());
  ASSERT_EQ(rec.limits.size(), 4u);
  EXPECT_EQ(rec.limits[0](2), 0.0);
  EXPECT_GE(std::abs(rec.limits[1](2) - rec.limits[2](2)), 0.055);
  for (Eigen::Index i = 0; i < 4; ++i) {
    EXPECT_EQ(rec.pairwise_distances(i, i), 0.0);
    for (Eigen::Index j = 0; j < 4; ++j) EXPECT_EQ(rec.pairwise_distances(i, j), rec.pairwise_distances(j, i));
  }
}

TEST(SingleNeuronWitness, FlowAgreesWithClosedForm) {
  const WitnessRecord cf = single_neuron_witness(1.0, kGammas, true);
  const WitnessRecord fl = single_neuron_witness(1.0, kGammas, false);
  EXPECT_TRUE(fl.complete());
  for (std::size_t k = 0; k < kGammas.size(); ++k) EXPECT_LE((cf.limits[k] - fl.limits[k]).norm(), 1e-3);
}

TEST(SingleNeuronWitness, ScalesWithAlpha) {
  const WitnessRecord one = single_neuron_witness(1.0, kGammas, true);
  const WitnessRecord three = single_neuron_witness(3.0, kGammas, true);
  EXPECT_TRUE(three.complete());
  for (std::size_t k = 0; k < kGammas.size(); ++k) EXPECT_LE((three.limits[k] - 3 * one.limits[k]).norm(), 1e-10);
}

TEST(SingleNeuronWitness, Preconditions) {
  EXPECT_THROW(single_neuron_witness(1.0, {0.0}, true), DomainError);
  EXPECT_THROW(single_neuron_witness(1.0, {1.0, 5.0}, true), DomainError);
  EXPECT_THROW(single_neuron_witness(0.0, kGammas, true), DomainError);
}

TEST(SingleNeuronWitness, NonConvergedRunIsFlagged) {
  FlowConfig cfg;
  cfg.t_max = 0.05;
  const WitnessRecord rec = single_neuron_witness(1.0, {0.0, 5.0}, false, cfg);
  EXPECT_FALSE(rec.converged[0]);
  EXPECT_FALSE(rec.on_ray[0]);
  EXPECT_FALSE(rec.complete());
}

TEST(SingleNeuronWitness, ReproducibleJson) {
  const auto a = single_neuron_witness(1.0, kGammas, false).to_json().dump();
  const auto b = single_neuron_witness(1.0, kGammas, false).to_json().dump();
  EXPECT_EQ(a, b);
  const auto j = nlohmann::json::parse(a);
  EXPECT_EQ(j.at("kind"), "single_neuron");
  EXPECT_EQ(j.at("limits").size(), 4u);
  EXPECT_EQ(j.at("pairwise_distances").size(), 4u);
  EXPECT_TRUE(j.at("distinct").get<bool>());
}

TEST(HiddenNeuronWitness, OrthogonalOffset) {
  const WitnessRecord rec = hidden_neuron_witness(default_epsilon_grid(), fast_gd());
  EXPECT_FALSE(rec.inconclusive);
  EXPECT_TRUE(rec.complete());
  EXPECT_EQ(rec.limits[0](2), 0.0);
  EXPECT_LT(rec.limits[1](2), 0.0);
  EXPECT_LE(rec.orthogonality, 1e-3);
  EXPECT_GT(rec.offset_norm, 1e-2);
  EXPECT_EQ(rec.to_json().at("kind"), "hidden_neuron");
}

TEST(HiddenNeuronWitness, GridMustReachSmallEpsilon) {
  EXPECT_THROW(hidden_neuron_witness({1.0, 0.1}, fast_gd()), DomainError);
}

TEST(RotatedWitness, IdentityReproducesBase) {
  const WitnessRecord base = single_neuron_witness(1.0, kGammas, true);
  const WitnessRecord rec = rotated_witness(base, Matrix::Identity(3, 3));
  for (std::size_t k = 0; k < kGammas.size(); ++k) EXPECT_LE((rec.limits[k] - base.limits[k]).norm(), 1e-3);
  EXPECT_TRUE(rec.complete());
}

TEST(RotatedWitness, QuarterTurnPermutesCoordinates) {
  const WitnessRecord base = single_neuron_witness(1.0, {0.0, 5.0}, true);
  Matrix m(3, 3);
  m << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  const WitnessRecord rec = rotated_witness(base, m);
  const double s = base.limits[1](2);
  EXPECT_NEAR(rec.limits[1](0), 1.0, 1e-3);
  EXPECT_NEAR(rec.limits[1](1), 5.0, 1e-3);
  EXPECT_NEAR(rec.limits[1](2), s, 1e-3);
  EXPECT_TRUE(rec.complete());
}

TEST(RotatedWitness, RandomRotation) {
  std::mt19937_64 rng(83);
  const WitnessRecord base = single_neuron_witness(1.0, {0.0, 5.0}, true);
  const WitnessRecord rec = rotated_witness(base, random_rotation(rng, 3));
  EXPECT_TRUE(rec.complete());
}

TEST(RotatedWitness, RejectsNonRotation) {
  const WitnessRecord base = single_neuron_witness(1.0, {0.0, 5.0}, true);
  EXPECT_THROW(rotated_witness(base, 2 * Matrix::Identity(3, 3)), DomainError);
}
