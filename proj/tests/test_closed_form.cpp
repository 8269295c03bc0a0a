#include <cmath>

#include <gtest/gtest.h>

#include "reluflow/closed_form.hpp"

using namespace reluflow;

namespace {

Vector vec3(double a, double b, double c) {
  Vector v(3);
  v << a, b, c;
  return v;
}

}  // namespace

TEST(FindT1, Brackets) {
  const double t1 = find_t1(FamilyInstance(1.0, 1.0));
  EXPECT_GT(t1, 0.169);
  EXPECT_LT(t1, 0.17);
  const double t2 = find_t1(FamilyInstance(2.0, 1.0));
  EXPECT_GT(t2, 0.138);
  EXPECT_LT(t2, 0.139);
  const double t5 = find_t1(FamilyInstance(5.0, 1.0));
  EXPECT_GT(t5, 0.086);
  EXPECT_LT(t5, 0.087);
}

// Reference switch times from an independent scalar root finder on
// x_3 . (t3 - exp(-t X^T X) t3) with a dense eigendecomposition.
TEST(FindT1, MatchesIndependentRootFinder) {
  EXPECT_NEAR(find_t1(FamilyInstance(1.0, 1.0)), 0.1696505961, 1e-9);
  EXPECT_NEAR(find_t1(FamilyInstance(2.0, 1.0)), 0.1383179606, 1e-9);
  EXPECT_NEAR(find_t1(FamilyInstance(5.0, 1.0)), 0.0861474738, 1e-9);
  EXPECT_NEAR(find_t1(FamilyInstance(3.0, 1.0)), 0.1136549, 1e-6);
  EXPECT_NEAR(find_t1(FamilyInstance(20.0, 1.0)), 0.0640305, 1e-6);
}

TEST(FindT1, IndependentOfAlpha) {
  for (double g : {1.0, 2.0, 5.0}) {
    EXPECT_NEAR(find_t1(FamilyInstance(g, 3.0)), find_t1(FamilyInstance(g, 1.0)), 1e-11);
  }
}

TEST(FindT1, Errors) {
  EXPECT_THROW(find_t1(FamilyInstance(0.0, 1.0)), DomainError);
  SwitchSearch short_scan;
  short_scan.scan_max = 0.01;
  EXPECT_THROW(find_t1(FamilyInstance(1.0, 1.0), short_scan), NumericalError);
}

TEST(PiecewiseTrajectory, SwitchPoint) {
  const PiecewiseTrajectory traj(FamilyInstance(1.0, 1.0));
  const Vector w = traj.w_t1();
  EXPECT_NEAR(w(0), 4.69702, 1e-5);
  EXPECT_NEAR(w(1), 0.0407729, 1e-7);
  EXPECT_NEAR(w(2), -0.0407729, 1e-7);
  EXPECT_LE(std::abs(x_gamma(1.0).row(2).dot(w)), 1e-9);
}

TEST(PiecewiseTrajectory, SpectraOfBothRegimes) {
  const PiecewiseTrajectory traj(FamilyInstance(2.0, 1.0));
  EXPECT_NEAR(traj.part1().eigenvalues(0), 14 + 2 * std::sqrt(39.0), 1e-10);
  EXPECT_NEAR(traj.part1().eigenvalues(1), 10.0, 1e-10);
  EXPECT_NEAR(traj.part1().eigenvalues(2), 14 - 2 * std::sqrt(39.0), 1e-10);
  EXPECT_NEAR(traj.part2().eigenvalues(0), 15 + 5 * std::sqrt(5.0), 1e-10);
  EXPECT_NEAR(traj.part2().eigenvalues(1), 15 - 5 * std::sqrt(5.0), 1e-10);
}

TEST(PiecewiseTrajectory, ContinuousAtSwitch) {
  for (double g : {1.0, 2.0, 5.0, 20.0}) {
    const PiecewiseTrajectory traj(FamilyInstance(g, 1.0));
    const double t1 = *traj.t1();
    EXPECT_LE((traj.eval_part1(t1) - traj.eval_part2(t1)).norm(), 1e-12);
  }
}

TEST(PiecewiseTrajectory, WindowsEnforced) {
  const PiecewiseTrajectory traj(FamilyInstance(1.0, 1.0));
  EXPECT_THROW(traj.eval_part1(0.5), DomainError);
  EXPECT_THROW(traj.eval_part2(0.1), DomainError);
  EXPECT_THROW(traj.eval_part1(-0.1), DomainError);
  EXPECT_THROW(traj.eval_gamma0(0.1), DomainError);
  const PiecewiseTrajectory flat(FamilyInstance(0.0, 1.0));
  EXPECT_FALSE(flat.t1().has_value());
  EXPECT_THROW(flat.eval_part1(0.1), DomainError);
  EXPECT_THROW(eval_part2(FamilyInstance(0.0, 1.0), 1.0), DomainError);
}

TEST(PiecewiseTrajectory, StartsAtOrigin) {
  for (double g : {0.0, 1.0, 5.0}) {
    EXPECT_LE(PiecewiseTrajectory(FamilyInstance(g, 2.0)).at(0.0).norm(), 1e-13);
  }
}

TEST(PiecewiseTrajectory, GammaZeroStaysPlanar) {
  const PiecewiseTrajectory traj(FamilyInstance(0.0, 1.0));
  for (double t : uniform_grid(0.0, 10.0, 0.1)) EXPECT_EQ(traj.at(t)(2), 0.0);
}

TEST(ClosedFormLimit, Values) {
  EXPECT_LE((closed_form_limit(FamilyInstance(0.0, 1.0)) - vec3(5, -1, 0)).norm(), 1e-12);
  const double s1 = closed_form_limit(FamilyInstance(1.0, 1.0))(2);
  const double s2 = closed_form_limit(FamilyInstance(2.0, 1.0))(2);
  const double s5 = closed_form_limit(FamilyInstance(5.0, 1.0))(2);
  EXPECT_TRUE(s1 > -0.045 && s1 < -0.035) << s1;
  EXPECT_TRUE(s2 > -0.12 && s2 < -0.1) << s2;
  EXPECT_TRUE(s5 > -0.22 && s5 < -0.2) << s5;
  EXPECT_NEAR(closed_form_limit(FamilyInstance(20.0, 1.0))(2), -0.230115, 1e-5);
  EXPECT_NEAR(closed_form_limit(FamilyInstance(3.0, 1.0))(2), -0.162275, 1e-5);
}

TEST(ClosedFormLimit, LiesOnZeroLossRay) {
  const auto relu = Activation<double>::relu();
  for (double g : {0.0, 1.0, 2.0, 5.0, 20.0}) {
    const FamilyInstance inst(g, 2.0);
    const Vector w = closed_form_limit(inst);
    EXPECT_NEAR(w(0), 10.0, 1e-10);
    EXPECT_NEAR(w(1), -2.0, 1e-10);
    EXPECT_LE(w(2), 0.0);
    EXPECT_LE(loss(inst.dataset(), relu, w), 1e-18);
  }
}

TEST(ClosedFormLimit, ScalesWithAlpha) {
  for (double g : {0.0, 1.0, 2.0, 5.0}) {
    const Vector base = closed_form_limit(FamilyInstance(g, 1.0));
    for (double a : {0.5, 3.0}) {
      EXPECT_LE((closed_form_limit(FamilyInstance(g, a)) - a * base).norm(), 1e-10);
    }
  }
}

TEST(ResidualCheck, SatisfiesFlowEquation) {
  const std::vector<double> grid = uniform_grid(0.0, 10.0, 0.01);
  for (double g : {0.0, 1.0, 2.0, 5.0, 20.0}) {
    EXPECT_LE(residual_check(FamilyInstance(g, 1.0), grid), 1e-5) << "gamma " << g;
  }
}

TEST(ResidualCheck, DetectsWrongDynamics) {
  // Ignoring the switch (part-1 formula past t1) leaves the flow equation.
  const FamilyInstance inst(1.0, 1.0);
  const PiecewiseTrajectory traj(inst);
  const double t = 1.0;
  const Vector target = solve_linear(inst.X, inst.y);
  const SymEig<double> eig = traj.part1();
  const auto wrong = [&](double s) { return Vector(target - expm_sym_action(eig, s, target)); };
  const Vector deriv = (wrong(t + 1e-6) - wrong(t - 1e-6)) / 2e-6;
  const Vector g = grad(inst.dataset(), Activation<double>::relu(), wrong(t));
  EXPECT_GT((deriv + g).norm(), 1e-3);
}

TEST(SampleClosedForm, SchemaAndEvent) {
  const PiecewiseTrajectory traj(FamilyInstance(5.0, 1.0));
  const std::vector<double> grid = uniform_grid(0.0, 1.0, 0.25);
  const Trajectory out = sample_closed_form(traj, grid);
  ASSERT_EQ(out.samples.size(), 5u);
  EXPECT_EQ(out.samples[2].t, 0.5);
  EXPECT_EQ(out.samples[4].pattern.str(), "++-");
  ASSERT_EQ(out.events.size(), 1u);
  EXPECT_EQ(out.events[0].t, *traj.t1());
}

TEST(UniformGrid, Endpoints) {
  const auto g = uniform_grid(0.0, 10.0, 0.01);
  EXPECT_EQ(g.size(), 1001u);
  EXPECT_EQ(g.front(), 0.0);
  EXPECT_NEAR(g.back(), 10.0, 1e-12);
  EXPECT_THROW(uniform_grid(0.0, 1.0, 0.0), DomainError);
}
