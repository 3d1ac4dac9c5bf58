#include <cmath>

#include "doctest.h"
#include "qmt/errors.hpp"
#include "qmt/scenarios.hpp"
#include "test_util.hpp"

using namespace qmt;

TEST_CASE("tube narrows from r_start to r_end") {
  const Scenario scn = build_tube_scenario();
  const double L = scn.path.length();
  const auto& r = std::get<CircObstacle>(scn.constraints.obstacle).r_obs;
  CHECK(std::abs(r(0.0) - 0.5) < 0.02);
  CHECK(std::abs(r(L) - 0.2) < 0.02);
  CHECK(r(0.5 * L) == doctest::Approx(0.35).epsilon(1e-12));
  for (int i = 1; i <= 200; ++i) CHECK(r(L * i / 200) < r(L * (i - 1) / 200));
  CHECK_FALSE(scn.target.has_value());
  CHECK(scn.section_begin == doctest::Approx(0.5 * L));
  CHECK(scn.section_end == doctest::Approx(L));
}

TEST_CASE("tube wider than the radius of curvature is rejected") {
  TubeParams p;
  p.r_start = 3.5;  // the default turn has radius 3 m
  CHECK_THROWS_AS(build_tube_scenario(p), ScenarioError);
}

TEST_CASE("corridor bounds and target") {
  const Scenario scn = build_corridor_scenario();
  const auto& rect = std::get<RectObstacle>(scn.constraints.obstacle);
  // Two tanh walls of sharpness 8 at s = 2 and s = 3.5.
  auto step = [](double s, double at) { return 0.5 * (1.0 + std::tanh(8.0 * (s - at))); };
  const double mid = 0.5 * (2.0 + 3.5);
  const double closing = step(mid, 2.0) - step(mid, 3.5);
  CHECK(rect.w1_max(mid) == doctest::Approx(1.5 - 1.25 * closing).epsilon(1e-12));
  CHECK(rect.w1_min(mid) == doctest::Approx(-1.5 + 1.25 * closing).epsilon(1e-12));
  for (double s = 2.3; s <= 3.2; s += 0.05) {
    CHECK(std::abs(rect.w1_max(s) - 0.25) < 0.011);
    CHECK(std::abs(rect.w1_min(s) + 0.25) < 0.011);
    CHECK(std::abs(rect.w2_max(s) - 0.25) < 0.03);
    CHECK(std::abs(rect.w2_min(s) + 0.25) < 0.03);
  }
  CHECK(std::abs(rect.w1_max(0.0) - 1.5) < 0.01);

  // Past the obstacle the binormal window approaches [-2.5, -1].
  const double L = scn.path.length();
  CHECK(std::abs(rect.w2_max(L) + 1.0) < 0.1);
  CHECK(std::abs(rect.w2_min(L) + 2.5) < 0.02);
  for (int i = 0; i <= 400; ++i) {
    const double s = L * i / 400;
    CHECK(rect.w1_min(s) < rect.w1_max(s));
    CHECK(rect.w2_min(s) < rect.w2_max(s));
  }

  REQUIRE(scn.target.has_value());
  StateVec q_d = StateVec::Zero();
  q_d[1] = -1.5;
  CHECK(scn.target->q_d.vec() == q_d);
  CHECK(scn.target->rho == 1e3);
  CHECK(scn.target->q_d.w2() > rect.w2_min(L));
  CHECK(scn.target->q_d.w2() < rect.w2_max(L));
}

TEST_CASE("corridor segment must lie on the path") {
  CorridorParams p;
  p.corridor_end = 100.0;
  CHECK_THROWS_AS(build_corridor_scenario(p), ScenarioError);
  p = CorridorParams{};
  p.corridor_begin = 3.6;
  CHECK_THROWS_AS(build_corridor_scenario(p), ScenarioError);
}

TEST_CASE("quasi-static attitude of a coordinated turn") {
  const QuadParams qp;
  for (double R : {2.0, 5.0}) {
    for (double v : {0.5, 2.0, 3.0}) {
      const ReferencePath path = make_analytic_path(CircleArcSpec{R, 0.0, 3.0});
      const QuasiStatic qs = quasi_static(path, 1.0, v, qp);
      const double a = v * v / R;
      const double tilt = std::acos(std::cos(qs.attitude.x()) * std::cos(qs.attitude.y()));
      CHECK(std::tan(tilt) == doctest::Approx(a / qp.gravity).epsilon(1e-9));
      CHECK(qs.thrust == doctest::Approx(qp.mass * std::hypot(qp.gravity, a)).epsilon(1e-9));
      CHECK(qs.attitude.z() == 0.0);
    }
  }
  const ReferencePath line = make_analytic_path(StraightSpec{});
  const QuasiStatic hover = quasi_static(line, 3.0, 0.0, qp);
  CHECK(hover.thrust == doctest::Approx(qp.mass * qp.gravity).epsilon(1e-12));
  CHECK(hover.attitude.norm() < 1e-12);

  const ReferencePath tight = make_analytic_path(CircleArcSpec{0.2, 0.0, 1.0});
  CHECK_THROWS_AS(quasi_static(tight, 0.1, 5.0, qp), QuasiStaticInfeasibleError);
}

TEST_CASE("quasi-static state balances the forces on the path") {
  const Scenario scn = build_tube_scenario();
  const GridPtr grid = make_grid(scn, 50);
  for (int i : {5, 25, 45}) {
    const TransverseState q = quasi_static_state(scn.path, grid->station(i), 1.0, scn.params);
    const QuasiStatic qs = quasi_static(scn.path, grid->station(i), 1.0, scn.params);
    const StateVec qdot = transverse_time_dynamics(q, SpaceInput(Vec3::Zero(), qs.thrust), grid->frame(i), scn.params);
    CHECK(test::max_abs(qdot.head<5>()) < 1e-9);
  }
}

TEST_CASE("initial trajectory stays near the path") {
  const Scenario scn = build_tube_scenario();
  const GridPtr grid = make_grid(scn, 500);
  const TrajectoryCurve xi = initial_trajectory(scn, grid);
  const auto& r = std::get<CircObstacle>(scn.constraints.obstacle).r_obs;
  for (int i = 0; i <= grid->intervals(); ++i) {
    CHECK(xi.states[static_cast<size_t>(i)].w().norm() < 0.05 * r(grid->station(i)));
    CHECK(std::abs(xi.states[static_cast<size_t>(i)].vt() - 1.0) < 0.05);
  }
  CHECK(dynamics_residual(xi, scn.params) < 1e-9);
  CHECK(max_constraint(xi, scn.constraints) < 0.0);
  CHECK_THROWS_AS(initial_trajectory(scn, grid, 0.01), ScenarioError);
}

TEST_CASE("corridor initial trajectory starts infeasible") {
  const Scenario scn = build_corridor_scenario();
  const GridPtr grid = make_grid(scn, 500);
  const TrajectoryCurve xi = initial_trajectory(scn, grid);
  CHECK(max_constraint(xi, scn.constraints) > 0.0);
  CHECK(dynamics_residual(xi, scn.params) < 1e-9);
}

TEST_CASE("problem carries the scenario data") {
  const Scenario scn = build_corridor_scenario();
  const GridPtr grid = make_grid(scn, 100);
  const Problem pr = make_problem(scn, grid);
  CHECK(pr.grid == grid);
  CHECK(pr.target.has_value());
  CHECK(pr.q0.vec() == scn.q0.vec());
  CHECK(grid->refinement().strength == 0.3);
}
