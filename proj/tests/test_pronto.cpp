#include <cmath>

#include "doctest.h"
#include "qmt/errors.hpp"
#include "qmt/pronto.hpp"
#include "qmt/scenarios.hpp"
#include "test_util.hpp"

using namespace qmt;
using test::uniform;

namespace {

// A coarse grid needs a heavier thrust weight to keep the sampled closed
// loop of the projection stable.
Scenario coarse_tube() {
  Scenario scn = build_tube_scenario();
  scn.solver.Rr(3, 3) = 10.0;
  return scn;
}

struct Fixture {
  Scenario scn = coarse_tube();
  GridPtr grid = make_grid(scn, 100);
  Problem problem = make_problem(scn, grid);
  TrajectoryCurve xi0 = initial_trajectory(scn, grid);
  GainSchedule K = lqr_gain(linearize(xi0, scn.params), scn.solver.Qr, scn.solver.Rr);
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

// LinearizedSystem with constant A, B over stations 0..L.
LinearizedSystem constant_system(const StateMat& A, const InputMat& B, double L, int N) {
  LinearizedSystem lin;
  for (int i = 0; i <= N; ++i) {
    lin.stations.push_back(L * i / N);
    lin.A.push_back(A);
    lin.B.push_back(B);
  }
  return lin;
}

std::vector<InputVec> random_du(int N, double scale) {
  std::vector<InputVec> du;
  for (int i = 0; i <= N; ++i) {
    InputVec d;
    d << uniform(-1, 1), uniform(-1, 1), uniform(-1, 1), 0.01 * uniform(-1, 1);
    du.push_back(scale * d);
  }
  du.back() = du[du.size() - 2];
  return du;
}

}  // namespace

TEST_CASE("solver config validation") {
  SolverConfig cfg;
  cfg.validate();
  cfg.shrink = 0.0;
  try {
    cfg.validate();
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.key_path() == "solver.shrink");
  }
}

TEST_CASE("analytic linearization matches central differences") {
  const auto& f = fixture();
  const LinearizedSystem an = linearize(f.xi0, f.scn.params);
  const LinearizedSystem fd = linearize(f.xi0, f.scn.params, JacobianMode::kFiniteDifference, 1e-6);
  double worst = 0.0;
  for (size_t i = 0; i < an.Ad.size(); ++i) {
    const double scale = std::max(1.0, an.Ad[i].cwiseAbs().maxCoeff());
    worst = std::max(worst, (an.Ad[i] - fd.Ad[i]).cwiseAbs().maxCoeff() / scale);
    worst = std::max(worst, (an.Bd[i] - fd.Bd[i]).cwiseAbs().maxCoeff() / std::max(1.0, an.Bd[i].cwiseAbs().maxCoeff()));
    worst = std::max(worst, (an.A[i] - fd.A[i]).cwiseAbs().maxCoeff() / std::max(1.0, an.A[i].cwiseAbs().maxCoeff()));
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("A and B scale with 1/v_t on the path") {
  const QuadParams qp;
  const GridPtr grid = test::grid_for(AtanHelixSpec{}, 10);
  TransverseState q;
  q.vt() = 1.0;
  q.vn() = 0.2;
  const SpaceInput u(Vec3(0.1, 0.2, 0.3), 0.2);
  const auto j1 = space_dynamics_jacobian(q, u, grid->frame(3), qp);
  TransverseState q2 = q;
  q2.vt() = 2.0;
  const auto j2 = space_dynamics_jacobian(q2, u, grid->frame(3), qp);
  CHECK((j2.B - 0.5 * j1.B).norm() < 1e-14);
  // Attitude rows carry sigma J(Phi) omega only.
  CHECK((j2.A.block<3, 3>(5, 5) - 0.5 * j1.A.block<3, 3>(5, 5)).norm() < 1e-14);
}

TEST_CASE("scalar Riccati limits") {
  InputMat B = InputMat::Zero();
  B.topRows<4>().setIdentity();
  // a = 0, b = 1, q = r = 1: P = 1 solves the Riccati equation exactly.
  GainSchedule K = lqr_gain(constant_system(StateMat::Zero(), B, 10.0, 200), StateMat::Identity(), InputWeight::Identity());
  for (int j = 0; j < 4; ++j) CHECK(K[0](j, j) == doctest::Approx(1.0).epsilon(1e-10));

  // q = 4: P(sigma) = 2 coth(2 sigma + atanh(1/2)), sigma measured from the end.
  const double L = 0.8;
  K = lqr_gain(constant_system(StateMat::Zero(), B, L, 400), 4.0 * StateMat::Identity(), InputWeight::Identity());
  for (int i : {0, 100, 300}) {
    const double sigma = L - L * i / 400;
    const double P = 2.0 / std::tanh(2.0 * sigma + std::atanh(0.5));
    CHECK(K[static_cast<size_t>(i)](0, 0) == doctest::Approx(P).epsilon(1e-8));
  }
  CHECK(K[0](0, 0) > 2.0);

  K = lqr_gain(constant_system(StateMat::Zero(), InputMat::Zero(), 5.0, 50), StateMat::Identity(), InputWeight::Identity());
  for (const auto& k : K) CHECK(k.norm() == 0.0);
}

TEST_CASE("frozen closed loop is stable") {
  const auto& f = fixture();
  const LinearizedSystem lin = linearize(f.xi0, f.scn.params);
  for (int i : {10, 50, 90}) {
    const LinearizedSystem frozen = constant_system(lin.A[static_cast<size_t>(i)], lin.B[static_cast<size_t>(i)], 30.0, 3000);
    const GainSchedule K = lqr_gain(frozen, StateMat::Identity(), InputWeight::Identity());
    const StateMat Acl = frozen.A[0] - frozen.B[0] * K[0];
    CHECK(Eigen::EigenSolver<StateMat>(Acl).eigenvalues().real().maxCoeff() < 0.0);
  }
}

TEST_CASE("projection fixes trajectories and is idempotent") {
  const auto& f = fixture();
  const TrajectoryCurve p = project(f.xi0, f.K, f.scn.q0, f.scn.params);
  CHECK(p.max_abs_difference(f.xi0) < 1e-10);

  for (int trial = 0; trial < 5; ++trial) {
    TrajectoryCurve curve = f.xi0;
    for (auto& q : curve.states) {
      for (int j = 0; j < kStateDim; ++j) q.vec()[j] += 1e-3 * uniform(-1, 1);
    }
    for (auto& u : curve.inputs) u.vec().head<3>() += Vec3(uniform(-0.1, 0.1), uniform(-0.1, 0.1), uniform(-0.1, 0.1));
    const TrajectoryCurve once = project(curve, f.K, f.scn.q0, f.scn.params);
    const TrajectoryCurve twice = project(once, f.K, f.scn.q0, f.scn.params);
    CHECK(twice.max_abs_difference(once) < 1e-6);
    CHECK(dynamics_residual(once, f.scn.params) < 1e-6);
  }

  TrajectoryCurve noisy = f.xi0;
  for (size_t i = 1; i < noisy.states.size(); ++i) {
    for (int j = 0; j < kStateDim; ++j) noisy.states[i].vec()[j] += 1e-3 * uniform(-1, 1);
  }
  CHECK(project(noisy, f.K, f.scn.q0, f.scn.params).max_abs_difference(f.xi0) < 2e-2);
}

TEST_CASE("projection without feedback integrates the inputs") {
  const auto& f = fixture();
  const GainSchedule zero(f.K.size(), GainMat::Zero());
  TrajectoryCurve curve = f.xi0;
  for (auto& q : curve.states) q.vt() += 0.3;
  const TrajectoryCurve p = project(curve, zero, f.scn.q0, f.scn.params);
  const TrajectoryCurve ref = integrate_space(f.grid, f.scn.q0, f.xi0.inputs, f.scn.params);
  CHECK(p.max_abs_difference(ref) < 1e-12);
}

TEST_CASE("cost_g reduces to the time of flight") {
  const GridPtr grid = test::grid_for(StraightSpec{10.0, 1e-3}, 50);
  ConstraintSet cs;
  cs.obstacle = CircObstacle{Profile(1.0)};
  TransverseState q;
  q.vt() = 2.0;
  const SpaceInput u(Vec3::Zero(), 0.5 * (cs.f_min + cs.f_max));
  const TrajectoryCurve xi = test::constant_curve(grid, q, u);
  const Problem pr{grid, cs, std::nullopt, QuadParams{}, q};
  CHECK(cost_g(xi, pr, {1e-12, 0.5}) == doctest::Approx(5.0).epsilon(1e-9));
  // Every constraint sits at c = -1 where beta_nu vanishes.
  CHECK(cost_g(xi, pr, {1.0, 0.5}) == doctest::Approx(5.0).epsilon(1e-9));
  TrajectoryCurve tilted = xi;
  for (auto& s : tilted.states) s.phi() = 0.3;
  CHECK(cost_g(tilted, pr, {1.0, 0.5}) > 5.0);

  Problem with_target = pr;
  with_target.target = TerminalTarget{};
  with_target.target->rho = 2.0;
  with_target.target->q_d.vt() = 2.0;
  CHECK(cost_g(xi, with_target, {1e-12, 0.5}) == doctest::Approx(5.0).epsilon(1e-9));
}

TEST_CASE("terminal speed guard") {
  // x = v_t / (2 v_floor) - 1 = 1 at v_t = 4 v_floor.
  CHECK(std::abs(terminal_speed_guard(4.0 * kMinForwardSpeed, 0.5).value) < 1e-14);
  CHECK(terminal_speed_guard(0.2, 0.1).d1 < 0.0);
  CHECK(std::isfinite(terminal_speed_guard(0.06, 0.01).value));
}

TEST_CASE("directional derivative matches finite differences of g along projected curves") {
  const auto& f = fixture();
  const BarrierParams bp{0.2, 0.1};
  for (int trial = 0; trial < 20; ++trial) {
    const Direction zeta = tangent_direction(f.xi0, random_du(f.grid->intervals(), 0.05), f.scn.params);
    const double dg = directional_derivative(f.xi0, zeta, f.problem, bp);
    const double t = 1e-5;
    const double gp = cost_g(project(displace(f.xi0, zeta, t), f.K, f.scn.q0, f.scn.params), f.problem, bp);
    const double gm = cost_g(project(displace(f.xi0, zeta, -t), f.K, f.scn.q0, f.scn.params), f.problem, bp);
    CHECK((gp - gm) / (2 * t) == doctest::Approx(dg).epsilon(1e-4));
  }
}

TEST_CASE("Newton direction descends and the line search accepts it") {
  const auto& f = fixture();
  const BarrierParams bp{1.0, 0.5};
  for (bool gn : {true, false}) {
    SolverConfig cfg = f.scn.solver;
    cfg.use_gauss_newton = gn;
    Direction zeta;
    try {
      zeta = newton_direction(f.xi0, f.problem, bp, cfg);
    } catch (const IndefiniteHessianError&) {
      continue;
    }
    CHECK(zeta.predicted_decrease < 0.0);
    CHECK(zeta.predicted_decrease == doctest::Approx(directional_derivative(f.xi0, zeta, f.problem, bp)).epsilon(1e-8));
    const double g0 = cost_g(f.xi0, f.problem, bp);
    const LineSearchResult ls = line_search(f.xi0, g0, zeta, f.K, f.problem, bp, cfg);
    CHECK(ls.step > 0.0);
    CHECK(ls.cost <= g0 + cfg.armijo_alpha * ls.step * zeta.predicted_decrease);
  }
}

TEST_CASE("line search backtracks through projection failures") {
  const auto& f = fixture();
  const BarrierParams bp{1.0, 0.5};
  const Direction zeta = tangent_direction(f.xi0, random_du(f.grid->intervals(), 1.0), f.scn.params);
  Direction push = zeta;
  // Large negative thrust steps drive v_t below the floor at gamma = 1.
  for (auto& d : push.du) d[3] = -5.0;
  push = tangent_direction(f.xi0, push.du, f.scn.params);
  push.predicted_decrease = -1.0;
  const double g0 = cost_g(f.xi0, f.problem, bp);
  CHECK_THROWS_AS(project(displace(f.xi0, push, 1.0), f.K, f.scn.q0, f.scn.params), DynamicsError);
  const LineSearchResult ls = line_search(f.xi0, g0, push, f.K, f.problem, bp, f.scn.solver);
  CHECK(ls.step < 1.0);

  Direction none = zeta;
  for (auto& d : none.dq) d.setZero();
  for (auto& d : none.du) d.setZero();
  none.predicted_decrease = 0.0;
  CHECK(line_search(f.xi0, g0, none, f.K, f.problem, bp, f.scn.solver).step == 1.0);
}

TEST_CASE("solve_inner: monotone decrease and a converged restart") {
  const auto& f = fixture();
  const BarrierParams bp{0.2, 0.1};
  std::vector<double> costs{cost_g(f.xi0, f.problem, bp)};
  const InnerResult r = solve_inner(f.xi0, f.problem, bp, f.scn.solver, 0,
                                    [&](const IterationRecord& rec) { costs.push_back(rec.cost); });
  CHECK(r.converged);
  for (size_t i = 1; i < costs.size(); ++i) CHECK(costs[i] <= costs[i - 1]);
  CHECK(std::abs(r.predicted_decrease) < f.scn.solver.tol_grad);

  const InnerResult again = solve_inner(r.trajectory, f.problem, bp, f.scn.solver);
  CHECK(again.iterations == 0);

  SolverConfig tight = f.scn.solver;
  tight.tol_grad *= 0.1;
  const InnerResult t = solve_inner(r.trajectory, f.problem, bp, tight);
  CHECK(std::abs(t.cost - r.cost) / r.cost < 1e-6);
}

TEST_CASE("continuation: frozen schedule and infeasible starts") {
  const auto& f = fixture();
  SolverConfig cfg = f.scn.solver;
  cfg.shrink = 1.0;
  const ContinuationResult one = solve_continuation(f.problem, f.xi0, cfg);
  CHECK(one.report.rounds.size() == 1);

  TrajectoryCurve stalled = f.xi0;
  for (auto& q : stalled.states) q.vt() = -1.0;
  CHECK_THROWS_AS(solve_continuation(f.problem, stalled, cfg), InfeasibleStartError);
}

TEST_CASE("continuation on the coarse tube lowers T every round") {
  const auto& f = fixture();
  SolverConfig cfg = f.scn.solver;
  cfg.max_outer = 4;
  const ContinuationResult res = solve_continuation(f.problem, f.xi0, cfg);
  double prev = res.report.initial_time_of_flight;
  for (const auto& r : res.report.rounds) {
    if (r.feasibility) continue;
    CHECK(r.time_of_flight < prev);
    prev = r.time_of_flight;
  }
}

TEST_CASE("warm start from the solver's own output stays put") {
  const auto& f = fixture();
  SolverConfig cfg = f.scn.solver;
  cfg.max_outer = 4;
  cfg.max_feasibility_rounds = 0;
  const ContinuationResult first = solve_continuation(f.problem, f.xi0, cfg);
  const RoundReport& last = first.report.rounds.back();
  REQUIRE(last.converged);
  SolverConfig again = cfg;
  again.eps0 = last.epsilon;
  again.nu0 = last.nu;
  again.max_outer = 1;
  const ContinuationResult second = solve_continuation(f.problem, first.trajectory, again);
  const double T1 = time_of_flight(first.trajectory), T2 = time_of_flight(second.trajectory);
  CHECK(std::abs(T2 - T1) / T1 < 1e-5);
}
