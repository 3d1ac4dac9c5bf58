#include "qmt/dyn_time.hpp"

#include <cmath>
#include <sstream>

#include "qmt/errors.hpp"

namespace qmt {

void QuadParams::validate() const {
  if (!(mass > 0.0) || !std::isfinite(mass)) {
    throw Error("QuadParams: mass must be positive");
  }
  if (!(gravity > 0.0) || !std::isfinite(gravity)) {
    throw Error("QuadParams: gravity must be positive");
  }
}

Mat3 rotation_rpy(const Vec3& Phi) {
  const double cf = std::cos(Phi.x()), sf = std::sin(Phi.x());
  const double ct = std::cos(Phi.y()), st = std::sin(Phi.y());
  const double cp = std::cos(Phi.z()), sp = std::sin(Phi.z());
  Mat3 R;
  R << cp * ct, cp * st * sf - sp * cf, cp * st * cf + sp * sf,
       sp * ct, sp * st * sf + cp * cf, sp * st * cf - cp * sf,
       -st,     ct * sf,                ct * cf;
  return R;
}

Mat3 euler_rate_jacobian(const Vec3& Phi) {
  const double cf = std::cos(Phi.x()), sf = std::sin(Phi.x());
  const double ct = std::cos(Phi.y()), st = std::sin(Phi.y());
  if (std::abs(ct) < kGimbalLockCos) {
    std::ostringstream os;
    os << "Euler-rate map singular at theta = " << Phi.y();
    throw SingularityError(os.str());
  }
  const double tt = st / ct;
  Mat3 J;
  J << 1.0, sf * tt, cf * tt,
       0.0, cf, -sf,
       0.0, sf / ct, cf / ct;
  return J;
}

TimeDerivative time_dynamics(const InertialState& x, const BodyInput& u,
                             const QuadParams& params) {
  const Mat3 J = euler_rate_jacobian(x.Phi);
  const Vec3 e3 = Vec3::UnitZ();
  TimeDerivative d;
  d.segment<3>(0) = x.v;
  d.segment<3>(3) = params.gravity * e3 - (u.thrust / params.mass) * rotation_rpy(x.Phi) * e3;
  d.segment<3>(6) = J * u.omega;
  return d;
}

namespace {

InertialState advance(const InertialState& x, const TimeDerivative& d, double h) {
  InertialState y;
  y.p = x.p + h * d.segment<3>(0);
  y.v = x.v + h * d.segment<3>(3);
  y.Phi = x.Phi + h * d.segment<3>(6);
  return y;
}

}  // namespace

InertialState rk4_time_step(const InertialState& x, const InputSignal& u, double t,
                            double dt, const QuadParams& params) {
  const BodyInput u0 = u(t);
  const BodyInput um = u(t + 0.5 * dt);
  const BodyInput u1 = u(t + dt);
  const TimeDerivative k1 = time_dynamics(x, u0, params);
  const TimeDerivative k2 = time_dynamics(advance(x, k1, 0.5 * dt), um, params);
  const TimeDerivative k3 = time_dynamics(advance(x, k2, 0.5 * dt), um, params);
  const TimeDerivative k4 = time_dynamics(advance(x, k3, dt), u1, params);
  return advance(x, (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0, dt);
}

std::vector<TimeSample> integrate_time(const InertialState& x0, const InputSignal& u,
                                       double T, double dt, const QuadParams& params) {
  if (!(T > 0.0) || !(dt > 0.0)) {
    throw Error("integrate_time: T and dt must be positive");
  }
  // Avoid a sliver step from round-off when T is a multiple of dt.
  const auto steps = static_cast<long>(std::ceil(T / dt - 1e-9));
  std::vector<TimeSample> out;
  out.reserve(static_cast<size_t>(steps) + 1);
  out.push_back({0.0, x0});
  InertialState x = x0;
  for (long i = 0; i < steps; ++i) {
    const double t = static_cast<double>(i) * dt;
    const double h = (i + 1 == steps) ? T - t : dt;
    x = rk4_time_step(x, u, t, h, params);
    out.push_back({t + h, x});
  }
  return out;
}

}  // namespace qmt
