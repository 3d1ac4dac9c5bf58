#include "qmt/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "qmt/errors.hpp"
#include "qmt/transverse.hpp"

namespace qmt {

namespace {

constexpr int kCheckSamples = 4001;
constexpr double kTiltMargin = 0.1;

double curvature(const ReferencePath& path, double s) { return path.eval_d2(s).norm(); }

}  // namespace

void Scenario::validate() const {
  params.validate();
  const double L = path.length();
  constraints.validate(L);
  for (int i = 0; i < kCheckSamples; ++i) {
    const double s = L * i / (kCheckSamples - 1);
    const double k = curvature(path, s);
    double reach = 0.0;
    if (const auto* c = std::get_if<CircObstacle>(&constraints.obstacle)) {
      reach = c->r_obs(s);
    } else {
      reach = std::get<RectObstacle>(constraints.obstacle).w1_max(s);
    }
    if (!(k * reach < 1.0)) {
      std::ostringstream os;
      os << "tube too wide: position bound " << reach << " reaches the radius of curvature "
         << 1.0 / k << " at s = " << s;
      throw ScenarioError(os.str());
    }
  }
  if (!q0.vec().allFinite()) throw ScenarioError("initial state is not finite");
  if (!(q0.vt() > kMinForwardSpeed)) throw ScenarioError("initial forward speed below the floor");
  if (!(1.0 - curvature(path, 0.0) * q0.w1() > 0.0)) {
    throw ScenarioError("initial state outside the tubular neighborhood");
  }
  if (target && !(target->rho > 0.0)) throw ScenarioError("terminal weight rho must be positive");
  if (!(v_init > kMinForwardSpeed)) throw ScenarioError("v_init must exceed the forward speed floor");
}

QuasiStatic quasi_static(const ReferencePath& path, double s, double v, const QuadParams& params) {
  const PathDerivatives d = path.derivatives(s);
  const Vec3 a_des = v * v * d.d2;  // v^2 k n
  const Vec3 need = params.gravity * Vec3::UnitZ() - a_des;
  const double mag = need.norm();
  const Vec3 axis = need / mag;  // R(Phi) e3
  const double tilt = std::acos(std::clamp(axis.z(), -1.0, 1.0));
  if (!(tilt < 0.5 * std::numbers::pi - kTiltMargin)) {
    std::ostringstream os;
    os << "quasi-static tilt " << tilt << " rad at s = " << s << " exceeds the margin";
    throw QuasiStaticInfeasibleError(os.str());
  }
  QuasiStatic qs;
  qs.attitude = Vec3(-std::asin(axis.y()), std::atan2(axis.x(), axis.z()), 0.0);
  qs.thrust = params.mass * mag;
  return qs;
}

TransverseState quasi_static_state(const ReferencePath& path, double s, double v,
                                   const QuadParams& params) {
  TransverseState q;
  q.vt() = v;
  q.vec().segment<3>(TransverseState::kPhi) = quasi_static(path, s, v, params).attitude;
  return q;
}

TrajectoryCurve initial_trajectory(const Scenario& scn, const GridPtr& grid,
                                   std::optional<double> v_init) {
  const double v = v_init.value_or(scn.v_init);
  if (!(v > kMinForwardSpeed)) throw ScenarioError("v_init must exceed the forward speed floor");
  const int N = grid->intervals();
  std::vector<QuasiStatic> qs;
  qs.reserve(static_cast<size_t>(N) + 1);
  for (int i = 0; i <= N; ++i) qs.push_back(quasi_static(grid->path(), grid->station(i), v, scn.params));

  TrajectoryCurve xi;
  xi.grid = grid;
  xi.states.resize(qs.size());
  xi.inputs.resize(qs.size());
  for (int i = 0; i <= N; ++i) {
    const int lo = std::max(0, i - 1), hi = std::min(N, i + 1);
    const Vec3 dPhi = (qs[static_cast<size_t>(hi)].attitude - qs[static_cast<size_t>(lo)].attitude) /
                      (grid->station(hi) - grid->station(lo));
    const Vec3& Phi = qs[static_cast<size_t>(i)].attitude;
    TransverseState q;
    q.vt() = v;
    q.vec().segment<3>(TransverseState::kPhi) = Phi;
    xi.states[static_cast<size_t>(i)] = q;
    // s_dot = v on the path.
    const Vec3 omega = euler_rate_jacobian(Phi).inverse() * (v * dPhi);
    xi.inputs[static_cast<size_t>(i)] = SpaceInput(omega, qs[static_cast<size_t>(i)].thrust);
  }
  const LinearizedSystem lin = linearize(xi, scn.params);
  const GainSchedule K = lqr_gain(lin, scn.solver.Qr, scn.solver.Rr);
  return project(xi, K, scn.q0, scn.params);
}

GridPtr make_grid(const Scenario& scn, int intervals) {
  return std::make_shared<const SpatialGrid>(scn.path, intervals, scn.grid_refinement);
}

Problem make_problem(const Scenario& scn, const GridPtr& grid) {
  return Problem{grid, scn.constraints, scn.target, scn.params, scn.q0};
}

Scenario build_tube_scenario(const TubeParams& p) {
  ReferencePath path = make_analytic_path(p.path);
  const double L = path.length();
  const double at = p.narrowing_at * L;
  ConstraintSet cs = p.bounds;
  cs.obstacle = CircObstacle{Profile(p.r_start, {{at, p.r_end - p.r_start, p.narrowing_sharpness}})};
  Scenario scn{.name = "tube",
               .path = path,
               .constraints = cs,
               .q0 = quasi_static_state(path, 0.0, p.v_init, p.params),
               .target = std::nullopt,
               .params = p.params,
               .solver = SolverConfig{},
               .v_init = p.v_init,
               .grid_refinement = p.grid_refinement,
               .section_begin = at,
               .section_end = L};
  scn.validate();
  return scn;
}

Scenario build_corridor_scenario(const CorridorParams& p) {
  ReferencePath path = make_analytic_path(p.path);
  const double L = path.length();
  if (!(p.corridor_begin < p.corridor_end && p.corridor_end <= L)) {
    throw ScenarioError("corridor segment must satisfy 0 <= begin < end <= L");
  }
  const double room = p.room_half_width;
  const double half = 0.5 * p.corridor_side;
  const double narrow = room - half;
  const double sw = p.wall_sharpness;

  const double ks = p.obstacle_sharpness;
  auto wall = [&](double at, double delta, double k) { return ProfileStep{at, delta, k, StepShape::kTanh}; };

  RectObstacle rect;
  rect.w1_min = Profile(-room, {wall(p.corridor_begin, narrow, sw), wall(p.corridor_end, -narrow, sw)});
  rect.w1_max = Profile(room, {wall(p.corridor_begin, -narrow, sw), wall(p.corridor_end, narrow, sw)});
  if (p.obstacle) {
    rect.w2_min = Profile(-room, {wall(p.corridor_begin, narrow, sw), wall(p.corridor_end, p.w2_above_min + half, sw)});
    rect.w2_max = Profile(room, {wall(p.corridor_begin, -narrow, sw), wall(p.obstacle_at, p.w2_above_max - half, ks)});
  } else {
    rect.w2_min = Profile(-room, {wall(p.corridor_begin, narrow, sw), wall(p.corridor_end, -narrow, sw)});
    rect.w2_max = Profile(room, {wall(p.corridor_begin, -narrow, sw), wall(p.corridor_end, narrow, sw)});
  }
  ConstraintSet cs = p.bounds;
  cs.obstacle = rect;

  TerminalTarget target;
  target.q_d = TransverseState(p.q_d);
  target.rho = p.rho;

  Scenario scn{.name = "corridor",
               .path = path,
               .constraints = cs,
               .q0 = quasi_static_state(path, 0.0, p.v_init, p.params),
               .target = target,
               .params = p.params,
               .solver = SolverConfig{},
               .v_init = p.v_init,
               .grid_refinement = p.grid_refinement,
               .section_begin = p.corridor_begin,
               .section_end = p.corridor_end};
  try {
    scn.validate();
  } catch (const ConfigError& e) {
    if (e.key_path().rfind("constraints.obstacle", 0) != 0) throw;
    throw ScenarioError(std::string("ill-ordered corridor profile: ") + e.what());
  }
  return scn;
}

}  // namespace qmt
