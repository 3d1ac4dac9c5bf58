#include <cmath>

#include "doctest.h"
#include "qmt/constraints.hpp"
#include "qmt/errors.hpp"
#include "test_util.hpp"

using namespace qmt;
using test::uniform;

TEST_CASE("eval_constraints boundary and interior values") {
  ConstraintSet cs;
  TransverseState q;
  SpaceInput u(Vec3(cs.omega_max[0], 0.0, 0.0), 0.5 * (cs.f_min + cs.f_max));
  const Eigen::VectorXd c = eval_constraints(q, u, 0.0, cs);
  CHECK(c.size() == 7);
  CHECK(c[kRate1] == doctest::Approx(0.0));
  CHECK(c[kRate2] == doctest::Approx(-1.0));
  CHECK(c[kThrust] == doctest::Approx(-1.0));
  CHECK(c[kRoll] == doctest::Approx(-1.0));

  cs.obstacle = CircObstacle{Profile(1.0)};
  q.w1() = 0.6;
  q.w2() = 0.8;
  CHECK(std::abs(eval_constraints(q, u, 0.0, cs)[kPosition]) < 1e-15);

  RectObstacle rect;
  rect.w1_min = Profile(-0.25);
  rect.w1_max = Profile(0.25);
  rect.w2_min = Profile(-1.0);
  rect.w2_max = Profile(0.0);
  cs.obstacle = rect;
  q.w1() = 0.25;
  q.w2() = -0.5;
  const Eigen::VectorXd r = eval_constraints(q, u, 0.0, cs);
  CHECK(r.size() == 8);
  CHECK(r[kPosition] == doctest::Approx(0.0));
  CHECK(r[kPosition + 1] == doctest::Approx(-1.0));
}

TEST_CASE("beta_nu values and the C1 junction") {
  CHECK(std::abs(beta_nu(1.0, 0.1).value) < 1e-15);
  CHECK(beta_nu(0.0, 0.1).value == doctest::Approx(-std::log(0.1) + 1.5).epsilon(1e-14));
  for (double nu : {0.5, 0.1, 1e-3, 1e-6}) {
    const BarrierValue log_side = beta_nu(nu * (1 + 1e-15), nu);
    const BarrierValue quad_side = beta_nu(nu, nu);
    CHECK(std::abs(quad_side.value + std::log(nu)) < 1e-12);
    CHECK(std::abs(quad_side.d1 + 1.0 / nu) < 1e-12 * std::max(1.0, 1.0 / nu));
    CHECK(std::abs(log_side.value - quad_side.value) < 1e-12);
  }
}

TEST_CASE("beta_nu is strictly decreasing with consistent derivatives") {
  const double nu = 0.1;
  double prev = beta_nu(-5.0, nu).value;
  for (int i = 1; i <= 2000; ++i) {
    const double x = -5.0 + 10.0 * i / 2000.0;
    const double v = beta_nu(x, nu).value;
    CHECK(v < prev);
    prev = v;
  }
  for (double x : {-1.0, 0.03, 0.2, 3.0}) {
    const double h = 1e-6;
    CHECK((beta_nu(x + h, nu).value - beta_nu(x - h, nu).value) / (2 * h) ==
          doctest::Approx(beta_nu(x, nu).d1).epsilon(1e-7));
    CHECK((beta_nu(x + h, nu).d1 - beta_nu(x - h, nu).d1) / (2 * h) ==
          doctest::Approx(beta_nu(x, nu).d2).epsilon(1e-6));
  }
}

TEST_CASE("barrier_cost trapezoid") {
  const GridPtr grid = test::grid_for(StraightSpec{}, 20);
  ConstraintSet cs;
  cs.obstacle = CircObstacle{Profile(1.0)};
  // c_j = -1 everywhere except the rates.
  TransverseState q;
  q.vt() = 1.0;
  SpaceInput u(Vec3::Zero(), 0.5 * (cs.f_min + cs.f_max));
  const TrajectoryCurve xi = test::constant_curve(grid, q, u);
  CHECK(std::abs(barrier_cost(xi, cs, {1.0, 0.1})) < 1e-12);

  // Violated constraint c = 0.5 lands on the quadratic branch: finite.
  TransverseState out = q;
  out.w1() = std::sqrt(1.5);
  const TrajectoryCurve bad = test::constant_curve(grid, out, u);
  const double b = barrier_cost(bad, cs, {1.0, 0.1});
  CHECK(std::isfinite(b));
  CHECK(b == doctest::Approx(beta_nu(-0.5, 0.1).value * grid->path().length()).epsilon(1e-9));
}

TEST_CASE("terminal_penalty") {
  TerminalTarget t;
  t.q_d.w2() = -1.5;
  t.rho = 1.0;
  CHECK(terminal_penalty(TransverseState(), t) == doctest::Approx(1.125));
  CHECK(terminal_penalty(t.q_d, t) == 0.0);
  t.rho = 0.0;
  CHECK(terminal_penalty(TransverseState(), t) == 0.0);
}

TEST_CASE("state and input barrier derivatives match finite differences") {
  ConstraintSet cs;
  cs.phi_max = Profile(0.6, {{1.0, -0.1, 3.0}});
  RectObstacle rect;
  rect.w1_min = Profile(-0.4);
  rect.w1_max = Profile(0.5);
  rect.w2_min = Profile(-0.6, {{1.0, 0.2, 2.0}});
  rect.w2_max = Profile(0.3);
  for (const ObstacleSpec& obs : {ObstacleSpec(CircObstacle{Profile(0.5)}), ObstacleSpec(rect)}) {
    cs.obstacle = obs;
    for (double nu : {0.5, 0.01}) {
      for (int trial = 0; trial < 5; ++trial) {
        StateVec x;
        x << uniform(-0.3, 0.3), uniform(-0.3, 0.2), 1.0, 0.0, 0.0, uniform(-0.6, 0.6), uniform(-0.6, 0.6), 0.0;
        const double s = uniform(0.0, 2.0);
        const StateBarrier sb = state_barrier(TransverseState(x), s, cs, nu);
        const double h = 1e-6;
        for (int j = 0; j < kStateDim; ++j) {
          StateVec d = StateVec::Zero();
          d[j] = h;
          const StateBarrier p = state_barrier(TransverseState(x + d), s, cs, nu);
          const StateBarrier m = state_barrier(TransverseState(x - d), s, cs, nu);
          CHECK((p.value - m.value) / (2 * h) == doctest::Approx(sb.grad[j]).epsilon(1e-5).scale(1.0));
          CHECK(((p.grad - m.grad) / (2 * h) - sb.hess.col(j)).cwiseAbs().maxCoeff() <
                1e-4 * std::max(1.0, sb.hess.cwiseAbs().maxCoeff()));
        }
        InputVec u;
        u << uniform(-7, 7), uniform(-7, 7), uniform(-3.5, 3.5), uniform(0.0, 0.45);
        const InputBarrier ib = input_barrier(SpaceInput(u), cs, nu);
        for (int j = 0; j < kInputDim; ++j) {
          InputVec d = InputVec::Zero();
          d[j] = h;
          const InputBarrier p = input_barrier(SpaceInput(u + d), cs, nu);
          const InputBarrier m = input_barrier(SpaceInput(u - d), cs, nu);
          CHECK((p.value - m.value) / (2 * h) == doctest::Approx(ib.grad[j]).epsilon(1e-5).scale(1.0));
        }
        // Summed split barriers equal the stacked constraint vector.
        double total = 0.0;
        const Eigen::VectorXd c = eval_constraints(TransverseState(x), SpaceInput(u), s, cs);
        for (Eigen::Index j = 0; j < c.size(); ++j) total += beta_nu(-c[j], nu).value;
        CHECK(sb.value + ib.value == doctest::Approx(total).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("ConstraintSet validation names the offending field") {
  ConstraintSet cs;
  cs.f_min = 0.5;
  try {
    cs.validate(1.0);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.key_path() == "constraints.thrust");
  }
  ConstraintSet r;
  RectObstacle rect;
  rect.w2_min = Profile(-1.0, {{0.5, 2.5, 10.0}});
  r.obstacle = rect;
  CHECK_THROWS_AS(r.validate(1.0), ConfigError);
}

TEST_CASE("Profile smoothed steps") {
  const Profile p(1.0, {{2.0, -0.5, 100.0}});
  CHECK(p(2.0) == doctest::Approx(0.75));
  CHECK(p(-100.0) == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(p(100.0) == doctest::Approx(0.5).epsilon(1e-4));
}
