#pragma once

// Arc-length parameterized constraints, the smoothed log barrier and the
// terminal penalty.
//
// Every constraint is written in the normalized form c <= 0 with
// c = (normalized quantity)^2 - 1. The vector layout is
//   [rate1 rate2 rate3 thrust roll pitch position...]
// with one position entry for a circular cross-section and two (w1, w2) for a
// rectangular one.

#include <variant>
#include <vector>

#include "qmt/trajectory.hpp"
#include "qmt/types.hpp"

namespace qmt {

/// Smoothed step of height delta centred at `at`:
///   atan: delta * (1/2 + atan(sharpness * (s - at)) / pi)
///   tanh: delta * (1 + tanh(sharpness * (s - at))) / 2
/// The tanh form settles exponentially, the atan form algebraically.
enum class StepShape { kAtan, kTanh };

struct ProfileStep {
  double at = 0.0;
  double delta = 0.0;
  double sharpness = 10.0;
  StepShape shape = StepShape::kAtan;
};

/// Arc-length function built from a base value plus arctangent steps. Steps
/// give C-infinity boundaries; a wide step (low sharpness) acts as a ramp.
class Profile {
 public:
  Profile(double constant = 0.0) : base_(constant) {}  // NOLINT: implicit from a number
  Profile(double base, std::vector<ProfileStep> steps) : base_(base), steps_(std::move(steps)) {}

  double operator()(double s) const;
  double base() const { return base_; }
  const std::vector<ProfileStep>& steps() const { return steps_; }
  bool is_constant() const { return steps_.empty(); }

 private:
  double base_;
  std::vector<ProfileStep> steps_;
};

struct CircObstacle {
  Profile r_obs{1.0};
};

struct RectObstacle {
  Profile w1_min{-1.0};
  Profile w1_max{1.0};
  Profile w2_min{-1.0};
  Profile w2_max{1.0};
};

using ObstacleSpec = std::variant<CircObstacle, RectObstacle>;

struct ConstraintSet {
  Vec3 omega_max{6.0, 6.0, 3.0};  // rad/s
  double f_min = 0.05;            // N
  double f_max = 0.35;            // N
  Profile phi_max{0.6};           // rad
  Profile theta_max{0.6};         // rad
  ObstacleSpec obstacle = CircObstacle{};

  /// 7 for a circular section, 8 for a rectangular one.
  int count() const;
  /// Checks the bound invariants on a dense sampling of [0, length].
  /// Throws ConfigError naming the offending field.
  void validate(double length) const;
};

enum ConstraintIndex { kRate1 = 0, kRate2, kRate3, kThrust, kRoll, kPitch, kPosition };

Eigen::VectorXd eval_constraints(const TransverseState& q, const SpaceInput& u, double s,
                                 const ConstraintSet& cs);

struct BarrierParams {
  double epsilon = 1.0;
  double nu = 0.5;
};

struct BarrierValue {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

/// -log(x) for x > nu, quadratic C1 extension below nu.
BarrierValue beta_nu(double x, double nu);

/// Trapezoidal quadrature of sum_j beta_nu(-c_j) over the trajectory grid
/// (without the epsilon weight).
double barrier_cost(const TrajectoryCurve& xi, const ConstraintSet& cs, const BarrierParams& bp);

/// Largest c_j over all stations and constraints.
double max_constraint(const TrajectoryCurve& xi, const ConstraintSet& cs);

struct TerminalTarget {
  TransverseState q_d;
  double rho = 0.0;
};

/// 1/2 rho |q_d - q_end|^2.
double terminal_penalty(const TransverseState& q_end, const TerminalTarget& target);

// Barrier terms split by argument. Roll, pitch and position constraints
// depend on the state only, rates and thrust on the input only.

struct StateBarrier {
  double value = 0.0;
  StateVec grad = StateVec::Zero();
  StateMat hess = StateMat::Zero();
};

struct InputBarrier {
  double value = 0.0;
  InputVec grad = InputVec::Zero();
  InputWeight hess = InputWeight::Zero();
};

StateBarrier state_barrier(const TransverseState& q, double s, const ConstraintSet& cs, double nu);
InputBarrier input_barrier(const SpaceInput& u, const ConstraintSet& cs, double nu);

}  // namespace qmt
