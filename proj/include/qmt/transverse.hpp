#pragma once

// Coordinate maps between inertial and transverse representations and the
// time- and arc-length-parameterized transverse dynamics.

#include <optional>
#include <vector>

#include "qmt/dyn_time.hpp"
#include "qmt/refpath.hpp"
#include "qmt/trajectory.hpp"

namespace qmt {

/// Space parameterization degenerates as v_t -> 0; below this the arc-length
/// dynamics refuse to evaluate (m/s).
inline constexpr double kMinForwardSpeed = 0.05;

struct TransversePoint {
  double s = 0.0;
  TransverseState q;
};

TransversePoint to_transverse(const ReferencePath& path, const InertialState& x,
                              std::optional<double> s_hint = std::nullopt);

InertialState from_transverse(const ReferencePath& path, double s, const TransverseState& q);

/// ds/dt = v_t / (1 - k w1). Throws TubularBoundaryError when 1 - k w1 <= 0
/// and SlowSpeedError when v_t <= 0.
double s_rate(const TransverseState& q, double k);

/// d/dt of the transverse state.
StateVec transverse_time_dynamics(const TransverseState& q, const SpaceInput& u,
                                  const FrenetSample& frame, const QuadParams& params);

/// d/ds of the transverse state: the time dynamics scaled by (1 - k w1)/v_t.
/// Throws SlowSpeedError when v_t < kMinForwardSpeed.
StateVec transverse_space_dynamics(const TransverseState& q, const SpaceInput& u,
                                   const FrenetSample& frame, const QuadParams& params);

struct SpaceDynamicsJacobian {
  StateVec f;
  StateMat A;  // d f / d q
  InputMat B;  // d f / d u
};

/// Analytic Jacobians of `transverse_space_dynamics`.
SpaceDynamicsJacobian space_dynamics_jacobian(const TransverseState& q, const SpaceInput& u,
                                              const FrenetSample& frame,
                                              const QuadParams& params);

/// dt/ds = (1 - k w1)/v_t.
double time_per_arc_length(const TransverseState& q, double k);

struct SpaceStep {
  StateVec q_next;
  double dt = 0.0;  // elapsed time over the interval, same RK4 stages
};

/// One RK4 step of the space dynamics over grid interval i with the input
/// held constant.
SpaceStep rk4_space_step(const SpatialGrid& grid, int i, const StateVec& q, const InputVec& u,
                         const QuadParams& params);

struct SpaceStepJacobian {
  StateVec q_next;
  StateMat A;  // d q_next / d q
  InputMat B;  // d q_next / d u
};

/// RK4 step together with its exact derivatives (chain rule through stages).
SpaceStepJacobian rk4_space_step_jacobian(const SpatialGrid& grid, int i, const StateVec& q,
                                          const InputVec& u, const QuadParams& params);

/// Integrates the space dynamics from q0 with the given per-interval inputs.
/// `inputs` must have N or N+1 entries; the result has N+1 of each.
TrajectoryCurve integrate_space(const GridPtr& grid, const TransverseState& q0,
                                const std::vector<SpaceInput>& inputs, const QuadParams& params);

/// Trapezoidal quadrature of (1 - k w1)/v_t over the grid.
double time_of_flight(const TrajectoryCurve& xi);

/// Largest RK4 defect |q_{i+1} - step(q_i, u_i)| over all intervals.
double dynamics_residual(const TrajectoryCurve& xi, const QuadParams& params);

struct EquivalenceReport {
  double terminal_position_error = 0.0;  // m
  double max_position_error = 0.0;       // m, over all stations
  double time_of_flight = 0.0;           // trapezoid, s
  double reconstructed_duration = 0.0;   // from dt/ds integrated with RK4, s
  double duration_relative_error = 0.0;
  std::vector<double> station_times;
};

/// Maps an arc-length trajectory to time, replays its inputs through the
/// inertial model with RK4 (`substeps` steps per grid interval) and compares
/// positions against the transverse reconstruction.
EquivalenceReport check_time_domain_equivalence(const TrajectoryCurve& xi,
                                                const QuadParams& params, int substeps = 4);

}  // namespace qmt
