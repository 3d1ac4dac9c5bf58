#pragma once

// Time-domain vectored-thrust model of the quadrotor position/attitude
// subsystem. Body rates are treated as direct inputs (an on-board rate loop
// is assumed), so the rotational dynamics are not modeled.
//
// Conventions: inertial z axis points down, gravity acts along +e3. Attitude
// is Z-Y-X (yaw-pitch-roll): R = Rz(psi) * Ry(theta) * Rx(phi), mapping body
// vectors into the inertial frame.

#include <functional>
#include <vector>

#include "qmt/types.hpp"

namespace qmt {

struct QuadParams {
  double mass = 0.021;     // kg
  double gravity = 9.81;   // m/s^2

  void validate() const;
};

struct InertialState {
  Vec3 p = Vec3::Zero();    // position, inertial frame (m)
  Vec3 v = Vec3::Zero();    // velocity, inertial frame (m/s)
  Vec3 Phi = Vec3::Zero();  // roll, pitch, yaw (rad)
};

struct BodyInput {
  Vec3 omega = Vec3::Zero();  // body angular rate (rad/s)
  double thrust = 0.0;        // total thrust (N)
};

using TimeDerivative = Eigen::Matrix<double, 9, 1>;

/// Below this |cos(theta)| the Euler-rate map is treated as singular.
inline constexpr double kGimbalLockCos = 1e-9;

Mat3 rotation_rpy(const Vec3& Phi);

/// J(Phi) with Phi_dot = J(Phi) * omega. Throws SingularityError near
/// |theta| = pi/2.
Mat3 euler_rate_jacobian(const Vec3& Phi);

/// [p_dot; v_dot; Phi_dot] = [v; g e3 - (f/m) R(Phi) e3; J(Phi) omega].
TimeDerivative time_dynamics(const InertialState& x, const BodyInput& u,
                             const QuadParams& params);

struct TimeSample {
  double t = 0.0;
  InertialState x;
};

using InputSignal = std::function<BodyInput(double)>;

/// Single classical RK4 step of `time_dynamics` from time t.
InertialState rk4_time_step(const InertialState& x, const InputSignal& u, double t,
                            double dt, const QuadParams& params);

/// Fixed-step RK4 integration. Returns samples at t = 0, dt, 2 dt, ..., T;
/// when T is not a multiple of dt the final step is shortened to land on T.
std::vector<TimeSample> integrate_time(const InertialState& x0, const InputSignal& u,
                                       double T, double dt, const QuadParams& params);

}  // namespace qmt
