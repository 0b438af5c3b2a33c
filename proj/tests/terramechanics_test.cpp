#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "terra/quadrature.hpp"
#include "terra/terramechanics.hpp"
#include "oracles.hpp"

namespace terra {
namespace {

using namespace oracle;

// ---------------------------------------------------------------- quadrature

TEST(Quadrature, SimpsonIsExactForCubics) {
  auto f = [](double x) { return 2 * x * x * x - x + 1; };
  EXPECT_NEAR(quadrature::composite_simpson<double>(f, -1.0, 2.0, 2), 7.5 - 1.5 + 3.0, 1e-13);
}

TEST(Quadrature, SimpsonRejectsOddIntervals) {
  auto f = [](double x) { return x; };
  EXPECT_THROW(quadrature::composite_simpson<double>(f, 0.0, 1.0, 3), std::invalid_argument);
  EXPECT_THROW(quadrature::composite_simpson<double>(f, 0.0, 1.0, 0), std::invalid_argument);
}

TEST(Quadrature, GradedRuleHandlesEndpointPowerLaw) {
  // integral of (1 - x)^0.3 on [0, 1] is 1/1.3
  auto f = [](double x) { return std::pow(std::max(1.0 - x, 0.0), 0.3); };
  const double graded = quadrature::graded_simpson<double>(f, 0.0, 1.0, 3.0, 64);
  const double plain = quadrature::composite_simpson<double>(f, 0.0, 1.0, 64);
  EXPECT_NEAR(graded, 1.0 / 1.3, 1e-6);
  EXPECT_GT(std::abs(plain - 1.0 / 1.3), 10 * std::abs(graded - 1.0 / 1.3));
}

TEST(Quadrature, GradedRuleIsOriented) {
  auto f = [](double x) { return x; };
  EXPECT_NEAR(quadrature::graded_simpson<double>(f, 1.0, 0.0, 2.0, 16), -0.5, 1e-12);
}

// ---------------------------------------------------------------- geometry

TEST(ContactGeometry, AnglesFollowSinkage) {
  const WheelGeom g;
  const SoilParams s = clay();
  const ContactGeometry cg = contact_geometry(0.05, 0.1, g, s);
  EXPECT_NEAR(cg.theta_f, std::acos(1.0 - 0.05 / 0.33), 1e-15);
  EXPECT_NEAR(cg.theta_m, (0.18 + 0.32 * 0.1) * cg.theta_f, 1e-15);
  EXPECT_EQ(cg.theta_r, 0.0);
  EXPECT_LE(cg.theta_r, cg.theta_m);
  EXPECT_LE(cg.theta_m, cg.theta_f);
}

TEST(ContactGeometry, ZeroSinkageIsPointContact) {
  const ContactGeometry cg = contact_geometry(0.0, 0.1, WheelGeom{}, clay());
  EXPECT_EQ(cg.theta_f, 0.0);
  EXPECT_EQ(cg.theta_m, 0.0);
}

TEST(ContactGeometry, RejectsBuriedOrNegativeSinkage) {
  EXPECT_THROW(contact_geometry(-1e-3, 0.1, WheelGeom{}, clay()), std::domain_error);
  EXPECT_THROW(contact_geometry(0.33, 0.1, WheelGeom{}, clay()), std::domain_error);
}

TEST(SinkageProfile, PeaksAtEntryAndVanishesAtEnds) {
  const WheelGeom g;
  const ContactGeometry cg = contact_geometry(0.08, 0.2, g, sand());
  EXPECT_NEAR(sinkage_profile(cg.theta_f, cg, g), 0.0, 1e-14);
  EXPECT_NEAR(sinkage_profile(cg.theta_r, cg, g), 0.0, 1e-14);
  // At theta_m both branches give r (cos theta_m - cos theta_f).
  const double at_m = g.radius * (std::cos(cg.theta_m) - std::cos(cg.theta_f));
  EXPECT_NEAR(sinkage_profile(cg.theta_m, cg, g), at_m, 1e-14);
  EXPECT_THROW(sinkage_profile(cg.theta_f + 0.01, cg, g), std::domain_error);
  EXPECT_THROW(sinkage_profile(cg.theta_r - 0.01, cg, g), std::domain_error);
}

TEST(Stresses, NoShearWithoutSideSlipLaterally) {
  const WheelGeom g;
  const SoilParams s = clay();
  const ContactGeometry cg = contact_geometry(0.05, 0.1, g, s);
  const StressSample st = stresses_at(0.5 * (cg.theta_m + cg.theta_f), cg, {0.1, 0.0, 0.0}, g, s);
  EXPECT_GT(st.sigma, 0.0);
  EXPECT_EQ(st.tau_y, 0.0);
}

TEST(Stresses, LateralShearIsOddInSideSlip) {
  const WheelGeom g;
  const SoilParams s = clay();
  const ContactGeometry cg = contact_geometry(0.05, 0.1, g, s);
  const double th = 0.5 * cg.theta_f;
  const StressSample a = stresses_at(th, cg, {0.1, 0.2, 0.0}, g, s);
  const StressSample b = stresses_at(th, cg, {0.1, -0.2, 0.0}, g, s);
  EXPECT_NEAR(a.tau_y, -b.tau_y, 1e-9);
  EXPECT_GT(a.tau_y, 0.0);
}

// ---------------------------------------------------------------- quadrature oracle

TEST(Forces, SimpsonMatchesAdaptiveOracle) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const WheelGeom g;
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const SoilParams s = random_soil(rng);
    const double h = 0.005 + 0.15 * u(rng);
    const WheelKinematics kin{0.4 * u(rng), -0.3 + 0.6 * u(rng), 0.0};
    const ForceIntegrals got = integrate_forces(h, kin, g, s);
    const ForceIntegrals ref = oracle::forces(h, kin, g, s);
    const double scale = norm(ref);
    const double err =
        std::max({std::abs(got.fx - ref.fx), std::abs(got.fy - ref.fy), std::abs(got.fz - ref.fz)}) /
        scale;
    worst = std::max(worst, err);
    EXPECT_LE(err, 1e-6) << "case " << i << " n=" << s.n << " h=" << h;
  }
  RecordProperty("worst_relative_error", std::to_string(worst));
}

TEST(Forces, ZeroSinkageGivesZeroForce) {
  const ForceIntegrals f = integrate_forces(0.0, {0.1, 0.1, 0.0}, WheelGeom{}, clay());
  EXPECT_EQ(f.fx, 0.0);
  EXPECT_EQ(f.fy, 0.0);
  EXPECT_EQ(f.fz, 0.0);
}

TEST(Forces, VerticalForceIgnoresSideSlip) {
  const WheelGeom g;
  const SoilParams s = clay();
  EXPECT_NEAR(vertical_force(0.04, 0.1, g, s), integrate_forces(0.04, {0.1, 0.25, 0.0}, g, s).fz,
              1e-9);
}

TEST(Forces, VerticalForceIncreasesWithSinkage) {
  const WheelGeom g;
  for (const SoilParams& s : {clay(), sand()}) {
    double prev = 0.0;
    for (int i = 1; i <= 30; ++i) {
      const double fz = vertical_force(0.01 * i, 0.1, g, s);
      EXPECT_GT(fz, prev);
      prev = fz;
    }
  }
}

// ---------------------------------------------------------------- sinkage solver

TEST(SolveSinkage, MatchesBisectionOracle) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const WheelGeom g;
  for (int i = 0; i < 200; ++i) {
    const SoilParams s = random_soil(rng);
    const double slip = 0.3 * u(rng);
    const double capacity = vertical_force(0.9 * g.radius, slip, g, s);
    const double load = std::min(500.0 + 9500.0 * u(rng), 0.8 * capacity);
    const double h = solve_sinkage(load, {slip, 0.0, 0.0}, g, s, 0.0);
    const double fz = vertical_force(h, slip, g, s);
    EXPECT_LE(std::abs(fz - load), std::max(1e-8 * load, 1e-6)) << "case " << i;
    EXPECT_LE(std::abs(h - bisect_sinkage(load, slip, g, s)), 1e-10) << "case " << i;
  }
}

TEST(SolveSinkage, ZeroLoadGivesZeroSinkage) {
  EXPECT_EQ(solve_sinkage(0.0, {0.1, 0.0, 0.0}, WheelGeom{}, clay(), 0.0), 0.0);
}

TEST(SolveSinkage, MonotoneInLoad) {
  const WheelGeom g;
  for (const SoilParams& s : {clay(), sand()}) {
    std::vector<double> h;
    for (int i = 1; i <= 10; ++i) h.push_back(solve_sinkage(1000.0 * i, {0.1, 0.0, 0.0}, g, s, 0.0));
    EXPECT_TRUE(std::is_sorted(h.begin(), h.end()));
    EXPECT_EQ(std::adjacent_find(h.begin(), h.end()), h.end());
  }
}

TEST(SolveSinkage, WarmStartDoesNotChangeResult) {
  const WheelGeom g;
  const SoilParams s = clay();
  double prev = 0.0;
  for (int i = 1; i <= 20; ++i) {
    const double load = 4000.0 + 100.0 * i;
    const double cold = solve_sinkage(load, {0.1, 0.0, 0.0}, g, s, 0.0);
    const double warm = solve_sinkage(load, {0.1, 0.0, 0.0}, g, s, prev);
    EXPECT_NEAR(cold, warm, 1e-10);
    prev = warm;
  }
}

TEST(SolveSinkage, ReportsMissingBracket) {
  SoilParams weak = clay();
  weak.k_c = 10.0;
  weak.k_phi = 1000.0;
  EXPECT_THROW(solve_sinkage(5000.0, {0.1, 0.0, 0.0}, WheelGeom{}, weak, 0.0), NoBracketError);
  EXPECT_THROW(solve_sinkage(-1.0, {0.1, 0.0, 0.0}, WheelGeom{}, clay(), 0.0), std::domain_error);
}

TEST(WheelInteraction, ForcesAreConsistentWithSolvedSinkage) {
  const WheelGeom g;
  const SoilParams s = clay();
  const WheelKinematics kin{0.1, 0.1, 0.0};
  const WheelForces w = wheel_interaction(4905.0, kin, g, s, 0.0);
  EXPECT_NEAR(w.F_z, 4905.0, 1e-4);
  const ForceIntegrals f = integrate_forces(w.h_f, kin, g, s);
  EXPECT_DOUBLE_EQ(w.F_l, f.fx);
  EXPECT_DOUBLE_EQ(w.F_c, f.fy);
  EXPECT_LT(w.F_c, 0.0);  // opposes positive side slip
}

TEST(SideSlip, ZeroAtRestAndAlongHeading) {
  const SideSlip rest = side_slip_angles(0.0, 0.0, 0.0, 0.3, 1.2, 1.0);
  EXPECT_EQ(rest.front, 0.0);
  EXPECT_EQ(rest.rear, 0.0);
  const SideSlip straight = side_slip_angles(5.0, 0.0, 0.0, 0.0, 1.2, 1.0);
  EXPECT_EQ(straight.front, 0.0);
  EXPECT_EQ(straight.rear, 0.0);
  // Pure lateral velocity: both wheels slip by +90 degrees.
  const SideSlip lateral = side_slip_angles(0.0, 1.0, 0.0, 0.0, 1.2, 1.0);
  EXPECT_NEAR(lateral.rear, std::numbers::pi / 2, 1e-15);
}

TEST(Validation, RejectsBadParameters) {
  SoilParams s = clay();
  s.n = 0.0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = clay();
  s.b0 = s.a0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  WheelGeom g;
  g.width = 0.0;
  EXPECT_THROW(g.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace terra
