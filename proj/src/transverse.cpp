#include "qmt/transverse.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>

#include <boost/math/tools/roots.hpp>

#include "qmt/errors.hpp"

namespace qmt {

SpatialGrid::SpatialGrid(ReferencePath path, int intervals, GridRefinement refinement)
    : path_(std::move(path)), intervals_(intervals), refinement_(refinement) {
  if (intervals < 1) throw Error("SpatialGrid: need at least one interval");
  if (!(refinement.strength >= 0.0) || !(refinement.offset > 0.0)) {
    throw Error("SpatialGrid: refinement needs strength >= 0 and offset > 0");
  }
  const double L = path_.length();
  const double c = refinement.strength, d = refinement.offset;
  // Cumulative station count F(s) = s + c ln((L + d) / (L - s + d)).
  const auto F = [&](double s) { return s + c * std::log((L + d) / (L - s + d)); };
  const double total = F(L);
  stations_.resize(static_cast<size_t>(intervals) + 1);
  stations_[0] = 0.0;
  stations_.back() = L;
  for (int i = 1; i < intervals; ++i) {
    const double target = total * i / intervals;
    if (c == 0.0) {
      stations_[static_cast<size_t>(i)] = target;
      continue;
    }
    std::uintmax_t iters = 100;
    stations_[static_cast<size_t>(i)] = boost::math::tools::newton_raphson_iterate(
        [&](double s) { return std::make_pair(F(s) - target, 1.0 + c / (L - s + d)); },
        std::min(target, L), stations_[static_cast<size_t>(i) - 1], L, 50, iters);
  }
  weights_.assign(stations_.size(), 0.0);
  for (int i = 0; i < intervals; ++i) {
    const double h = step(i);
    weights_[static_cast<size_t>(i)] += 0.5 * h;
    weights_[static_cast<size_t>(i) + 1] += 0.5 * h;
  }
  frames_.reserve(stations_.size());
  midpoints_.reserve(static_cast<size_t>(intervals));
  for (int i = 0; i <= intervals; ++i) frames_.push_back(frenet_at(path_, stations_[static_cast<size_t>(i)]));
  for (int i = 0; i < intervals; ++i) {
    midpoints_.push_back(frenet_at(path_, 0.5 * (stations_[static_cast<size_t>(i)] + stations_[static_cast<size_t>(i) + 1])));
  }
}

double TrajectoryCurve::max_abs_difference(const TrajectoryCurve& other) const {
  double m = 0.0;
  for (size_t i = 0; i < states.size(); ++i) {
    m = std::max(m, (states[i].vec() - other.states[i].vec()).cwiseAbs().maxCoeff());
    m = std::max(m, (inputs[i].vec() - other.inputs[i].vec()).cwiseAbs().maxCoeff());
  }
  return m;
}

TransversePoint to_transverse(const ReferencePath& path, const InertialState& x,
                              std::optional<double> s_hint) {
  TransversePoint out;
  out.s = project_point(path, x.p, s_hint);
  const FrenetSample f = frenet_at(path, out.s);
  const Vec3 d = x.p - f.p_r;
  out.q.w1() = f.n.dot(d);
  out.q.w2() = f.b.dot(d);
  out.q.vec().segment<3>(TransverseState::kVt) = f.R_SF.transpose() * x.v;
  out.q.vec().segment<3>(TransverseState::kPhi) = x.Phi;
  return out;
}

InertialState from_transverse(const ReferencePath& path, double s, const TransverseState& q) {
  const FrenetSample f = frenet_at(path, s);
  InertialState x;
  x.p = f.p_r + f.R_SF * Vec3(0.0, q.w1(), q.w2());
  x.v = f.R_SF * q.v_sf();
  x.Phi = q.attitude();
  return x;
}

namespace {

double tube_factor(const TransverseState& q, double k) {
  const double c = 1.0 - k * q.w1();
  if (!(c > 1e-9)) {
    std::ostringstream os;
    os << "state left the tubular neighborhood (1 - k w1 = " << c << ")";
    throw TubularBoundaryError(os.str());
  }
  return c;
}

void check_forward_speed(const TransverseState& q) {
  if (!(q.vt() >= kMinForwardSpeed)) {
    std::ostringstream os;
    os << "forward speed v_t = " << q.vt() << " below " << kMinForwardSpeed;
    throw SlowSpeedError(os.str());
  }
}

Vec3 thrust_axis(const Vec3& Phi) {
  const double cf = std::cos(Phi.x()), sf = std::sin(Phi.x());
  const double ct = std::cos(Phi.y()), st = std::sin(Phi.y());
  const double cp = std::cos(Phi.z()), sp = std::sin(Phi.z());
  return {cp * st * cf + sp * sf, sp * st * cf - cp * sf, ct * cf};
}

// Columns: d(R e3)/d phi, d theta, d psi.
Mat3 thrust_axis_jacobian(const Vec3& Phi) {
  const double cf = std::cos(Phi.x()), sf = std::sin(Phi.x());
  const double ct = std::cos(Phi.y()), st = std::sin(Phi.y());
  const double cp = std::cos(Phi.z()), sp = std::sin(Phi.z());
  Mat3 D;
  D.col(0) = Vec3(-cp * st * sf + sp * cf, -sp * st * sf - cp * cf, -ct * sf);
  D.col(1) = Vec3(cp * ct * cf, sp * ct * cf, -st * cf);
  D.col(2) = Vec3(-sp * st * cf + cp * sf, cp * st * cf + sp * sf, 0.0);
  return D;
}

// Columns: d(J(Phi) omega)/d phi, d theta, d psi.
Mat3 euler_rate_jacobian_derivative(const Vec3& Phi, const Vec3& w) {
  const double cf = std::cos(Phi.x()), sf = std::sin(Phi.x());
  const double ct = std::cos(Phi.y()), st = std::sin(Phi.y());
  const double tt = st / ct;
  const double a = sf * w.y() + cf * w.z();
  const double b = cf * w.y() - sf * w.z();
  Mat3 D = Mat3::Zero();
  D.col(0) = Vec3(b * tt, -sf * w.y() - cf * w.z(), b / ct);
  D.col(1) = Vec3(a / (ct * ct), 0.0, a * st / (ct * ct));
  return D;
}

Vec3 specific_force(const TransverseState& q, const SpaceInput& u, const QuadParams& params) {
  return params.gravity * Vec3::UnitZ() - (u.thrust() / params.mass) * thrust_axis(q.attitude());
}

}  // namespace

double s_rate(const TransverseState& q, double k) {
  const double c = tube_factor(q, k);
  if (!(q.vt() > 0.0)) throw SlowSpeedError("s_rate: v_t must be positive");
  return q.vt() / c;
}

double time_per_arc_length(const TransverseState& q, double k) {
  const double c = tube_factor(q, k);
  if (!(q.vt() > 0.0)) throw SlowSpeedError("time_per_arc_length: v_t must be positive");
  return c / q.vt();
}

StateVec transverse_time_dynamics(const TransverseState& q, const SpaceInput& u,
                                  const FrenetSample& frame, const QuadParams& params) {
  const double sd = s_rate(q, frame.k);
  const Mat3 J = euler_rate_jacobian(q.attitude());
  StateVec d;
  d[TransverseState::kW1] = q.vn() + frame.tau * sd * q.w2();
  d[TransverseState::kW2] = q.vb() - frame.tau * sd * q.w1();
  d.segment<3>(TransverseState::kVt) = frame.R_SF.transpose() * specific_force(q, u, params) -
                                       frenet_generator(frame.k, frame.tau) * sd * q.v_sf();
  d.segment<3>(TransverseState::kPhi) = J * u.omega();
  return d;
}

StateVec transverse_space_dynamics(const TransverseState& q, const SpaceInput& u,
                                   const FrenetSample& frame, const QuadParams& params) {
  check_forward_speed(q);
  const double sigma = tube_factor(q, frame.k) / q.vt();
  const Mat3 J = euler_rate_jacobian(q.attitude());
  // sigma * f_tilde, with the sigma * s_dot = 1 terms written out.
  StateVec d;
  d[TransverseState::kW1] = sigma * q.vn() + frame.tau * q.w2();
  d[TransverseState::kW2] = sigma * q.vb() - frame.tau * q.w1();
  d.segment<3>(TransverseState::kVt) = sigma * (frame.R_SF.transpose() * specific_force(q, u, params)) -
                                       frenet_generator(frame.k, frame.tau) * q.v_sf();
  d.segment<3>(TransverseState::kPhi) = sigma * (J * u.omega());
  return d;
}

SpaceDynamicsJacobian space_dynamics_jacobian(const TransverseState& q, const SpaceInput& u,
                                              const FrenetSample& frame,
                                              const QuadParams& params) {
  using I = TransverseState;
  check_forward_speed(q);
  const double c = tube_factor(q, frame.k);
  const double sigma = c / q.vt();
  const Vec3 Phi = q.attitude();
  const Mat3 J = euler_rate_jacobian(Phi);
  const Mat3 Rt = frame.R_SF.transpose();
  const Mat3 M = frenet_generator(frame.k, frame.tau);

  StateVec g;
  g[I::kW1] = q.vn();
  g[I::kW2] = q.vb();
  g.segment<3>(I::kVt) = Rt * specific_force(q, u, params);
  g.segment<3>(I::kPhi) = J * u.omega();

  SpaceDynamicsJacobian out;
  out.f = sigma * g;
  out.f[I::kW1] += frame.tau * q.w2();
  out.f[I::kW2] -= frame.tau * q.w1();
  out.f.segment<3>(I::kVt) -= M * q.v_sf();

  StateVec dsigma = StateVec::Zero();
  dsigma[I::kW1] = -frame.k / q.vt();
  dsigma[I::kVt] = -sigma / q.vt();

  StateMat Gq = StateMat::Zero();
  Gq(I::kW1, I::kVn) = 1.0;
  Gq(I::kW2, I::kVb) = 1.0;
  Gq.block<3, 3>(I::kVt, I::kPhi) = -(u.thrust() / params.mass) * Rt * thrust_axis_jacobian(Phi);
  Gq.block<3, 3>(I::kPhi, I::kPhi) = euler_rate_jacobian_derivative(Phi, u.omega());

  out.A = g * dsigma.transpose() + sigma * Gq;
  out.A(I::kW1, I::kW2) += frame.tau;
  out.A(I::kW2, I::kW1) -= frame.tau;
  out.A.block<3, 3>(I::kVt, I::kVt) -= M;

  out.B.setZero();
  out.B.block<3, 1>(I::kVt, 3) = -(sigma / params.mass) * Rt * thrust_axis(Phi);
  out.B.block<3, 3>(I::kPhi, 0) = sigma * J;
  return out;
}

SpaceStep rk4_space_step(const SpatialGrid& grid, int i, const StateVec& q, const InputVec& u,
                         const QuadParams& params) {
  const double h = grid.step(i);
  const FrenetSample& f0 = grid.frame(i);
  const FrenetSample& fm = grid.midpoint_frame(i);
  const FrenetSample& f1 = grid.frame(i + 1);
  const SpaceInput in(u);
  const TransverseState x1(q);
  const StateVec k1 = transverse_space_dynamics(x1, in, f0, params);
  const TransverseState x2(q + 0.5 * h * k1);
  const StateVec k2 = transverse_space_dynamics(x2, in, fm, params);
  const TransverseState x3(q + 0.5 * h * k2);
  const StateVec k3 = transverse_space_dynamics(x3, in, fm, params);
  const TransverseState x4(q + h * k3);
  const StateVec k4 = transverse_space_dynamics(x4, in, f1, params);
  SpaceStep out;
  out.q_next = q + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  out.dt = (h / 6.0) * (time_per_arc_length(x1, f0.k) + 2.0 * time_per_arc_length(x2, fm.k) +
                        2.0 * time_per_arc_length(x3, fm.k) + time_per_arc_length(x4, f1.k));
  return out;
}

SpaceStepJacobian rk4_space_step_jacobian(const SpatialGrid& grid, int i, const StateVec& q,
                                          const InputVec& u, const QuadParams& params) {
  const double h = grid.step(i);
  const SpaceInput in(u);
  const StateMat Id = StateMat::Identity();

  const auto j1 = space_dynamics_jacobian(TransverseState(q), in, grid.frame(i), params);
  const StateMat dk1q = j1.A;
  const InputMat dk1u = j1.B;

  const auto j2 = space_dynamics_jacobian(TransverseState(q + 0.5 * h * j1.f), in,
                                          grid.midpoint_frame(i), params);
  const StateMat dk2q = j2.A * (Id + 0.5 * h * dk1q);
  const InputMat dk2u = j2.A * (0.5 * h * dk1u) + j2.B;

  const auto j3 = space_dynamics_jacobian(TransverseState(q + 0.5 * h * j2.f), in,
                                          grid.midpoint_frame(i), params);
  const StateMat dk3q = j3.A * (Id + 0.5 * h * dk2q);
  const InputMat dk3u = j3.A * (0.5 * h * dk2u) + j3.B;

  const auto j4 =
      space_dynamics_jacobian(TransverseState(q + h * j3.f), in, grid.frame(i + 1), params);
  const StateMat dk4q = j4.A * (Id + h * dk3q);
  const InputMat dk4u = j4.A * (h * dk3u) + j4.B;

  SpaceStepJacobian out;
  out.q_next = q + (h / 6.0) * (j1.f + 2.0 * j2.f + 2.0 * j3.f + j4.f);
  out.A = Id + (h / 6.0) * (dk1q + 2.0 * dk2q + 2.0 * dk3q + dk4q);
  out.B = (h / 6.0) * (dk1u + 2.0 * dk2u + 2.0 * dk3u + dk4u);
  return out;
}

TrajectoryCurve integrate_space(const GridPtr& grid, const TransverseState& q0,
                                const std::vector<SpaceInput>& inputs, const QuadParams& params) {
  const int N = grid->intervals();
  if (static_cast<int>(inputs.size()) < N) {
    throw Error("integrate_space: need one input per interval");
  }
  TrajectoryCurve xi;
  xi.grid = grid;
  xi.states.resize(static_cast<size_t>(N) + 1);
  xi.inputs.assign(inputs.begin(), inputs.begin() + N);
  xi.inputs.push_back(inputs[static_cast<size_t>(N) - 1]);
  xi.states[0] = q0;
  for (int i = 0; i < N; ++i) {
    try {
      xi.states[static_cast<size_t>(i) + 1] = TransverseState(
          rk4_space_step(*grid, i, xi.states[static_cast<size_t>(i)].vec(),
                         xi.inputs[static_cast<size_t>(i)].vec(), params)
              .q_next);
    } catch (DynamicsError& e) {
      e.set_station(i);
      throw;
    }
  }
  return xi;
}

double time_of_flight(const TrajectoryCurve& xi) {
  const SpatialGrid& grid = *xi.grid;
  const int N = grid.intervals();
  double T = 0.0;
  for (int i = 0; i <= N; ++i) {
    T += grid.weight(i) * time_per_arc_length(xi.states[static_cast<size_t>(i)], grid.frame(i).k);
  }
  return T;
}

double dynamics_residual(const TrajectoryCurve& xi, const QuadParams& params) {
  double r = 0.0;
  for (int i = 0; i < xi.intervals(); ++i) {
    const auto step = rk4_space_step(*xi.grid, i, xi.states[static_cast<size_t>(i)].vec(),
                                     xi.inputs[static_cast<size_t>(i)].vec(), params);
    r = std::max(r, (step.q_next - xi.states[static_cast<size_t>(i) + 1].vec()).cwiseAbs().maxCoeff());
  }
  return r;
}

EquivalenceReport check_time_domain_equivalence(const TrajectoryCurve& xi,
                                                const QuadParams& params, int substeps) {
  const SpatialGrid& grid = *xi.grid;
  const ReferencePath& path = grid.path();
  const int N = grid.intervals();
  EquivalenceReport rep;
  rep.station_times.assign(static_cast<size_t>(N) + 1, 0.0);

  InertialState x = from_transverse(path, 0.0, xi.states[0]);
  double t = 0.0;
  for (int i = 0; i < N; ++i) {
    const auto& qi = xi.states[static_cast<size_t>(i)];
    const SpaceInput& ui = xi.inputs[static_cast<size_t>(i)];
    const double dt = rk4_space_step(grid, i, qi.vec(), ui.vec(), params).dt;
    const BodyInput body{ui.omega(), ui.thrust()};
    const InputSignal hold = [body](double) { return body; };
    for (int k = 0; k < substeps; ++k) {
      x = rk4_time_step(x, hold, t, dt / substeps, params);
    }
    t += dt;
    rep.station_times[static_cast<size_t>(i) + 1] = t;
    const Vec3 p_ref = from_transverse(path, grid.station(i + 1), xi.states[static_cast<size_t>(i) + 1]).p;
    rep.max_position_error = std::max(rep.max_position_error, (x.p - p_ref).norm());
    if (i + 1 == N) rep.terminal_position_error = (x.p - p_ref).norm();
  }
  rep.reconstructed_duration = t;
  rep.time_of_flight = time_of_flight(xi);
  rep.duration_relative_error = std::abs(rep.time_of_flight - t) / t;
  return rep;
}

}  // namespace qmt
