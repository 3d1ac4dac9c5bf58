#pragma once

// Projection-operator Newton method for the arc-length minimum-time problem
// with a log-barrier continuation on (epsilon, nu).
//
// The problem is solved in its discretized form: the state evolves by one
// RK4 step of the space dynamics per grid interval with the input held
// constant, and the cost is the trapezoidal time of flight plus the weighted
// trapezoidal barrier plus the optional terminal penalty. Search directions
// are computed from the exact step Jacobians, so the predicted decrease is
// the true directional derivative of the computed cost.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qmt/constraints.hpp"
#include "qmt/dyn_time.hpp"
#include "qmt/trajectory.hpp"

namespace qmt {

struct SolverConfig {
  int grid_intervals = 500;
  StateMat Qr = StateMat::Identity();    // projection regulator, state weight
  InputWeight Rr = InputWeight::Identity();  // projection regulator, input weight
  double armijo_alpha = 0.4;
  double armijo_beta = 0.5;
  double eps0 = 1.0;
  double nu0 = 0.5;
  double shrink = 0.2;
  double tol_grad = 1e-6;
  int max_newton = 300;
  int max_outer = 8;
  bool use_gauss_newton = true;
  // Extra rounds at the last epsilon with nu cut by 10x each, run while the
  // largest constraint value exceeds feasibility_tol.
  int max_feasibility_rounds = 4;
  double feasibility_tol = 1e-6;

  void validate() const;
};

/// Everything the optimizer needs to know about one scenario instance.
struct Problem {
  GridPtr grid;
  ConstraintSet constraints;
  std::optional<TerminalTarget> target;
  QuadParams params;
  TransverseState q0;
};

struct LinearizedSystem {
  std::vector<double> stations;
  std::vector<StateMat> A;   // d fbar/dq at each station (N+1)
  std::vector<InputMat> B;   // d fbar/du at each station (N+1)
  std::vector<StateMat> Ad;  // d q_{i+1}/d q_i of the RK4 step (N)
  std::vector<InputMat> Bd;  // d q_{i+1}/d u_i of the RK4 step (N)
};

enum class JacobianMode { kAnalytic, kFiniteDifference };

/// Jacobians along xi. The finite-difference mode uses central differences
/// with step `fd_step` and exists to cross-check the analytic one.
LinearizedSystem linearize(const TrajectoryCurve& xi, const QuadParams& params,
                           JacobianMode mode = JacobianMode::kAnalytic, double fd_step = 1e-6);

using GainSchedule = std::vector<GainMat>;

/// Time-varying LQR gain K(s) = Rr^-1 B(s)^T P(s), with P from the
/// differential Riccati equation integrated backward from P(L) = Qr by RK4.
/// Throws RiccatiBlowUpError when |P| exceeds 1e9.
GainSchedule lqr_gain(const LinearizedSystem& lin, const StateMat& Qr, const InputWeight& Rr);

/// Projection operator: integrates q' = fbar(q, u_c + K (q_c - q)) from q0.
/// Dynamics errors carry the station index where integration failed.
TrajectoryCurve project(const TrajectoryCurve& curve, const GainSchedule& K,
                        const TransverseState& q0, const QuadParams& params);

/// Barrier on the terminal forward speed, x = v_t / (2 v_floor) - 1. A
/// terminal target pulls v_t(L) toward q_d, possibly below the speed floor.
BarrierValue terminal_speed_guard(double vt, double nu);

/// time_of_flight + epsilon * barrier_cost + terminal penalty (plus the
/// epsilon-weighted terminal speed guard when a target is set).
double cost_g(const TrajectoryCurve& xi, const Problem& problem, const BarrierParams& bp);

/// Search direction zeta = (dq, du) on the grid (du at station N mirrors
/// station N-1) and the predicted decrease Dg(xi) . zeta.
struct Direction {
  std::vector<StateVec> dq;
  std::vector<InputVec> du;
  double predicted_decrease = 0.0;
};

/// Directional derivative Dg(xi) . zeta for any zeta satisfying the
/// linearized step dynamics with dq_0 = 0.
double directional_derivative(const TrajectoryCurve& xi, const Direction& zeta,
                              const Problem& problem, const BarrierParams& bp);

/// Propagates input perturbations du through the linearized step dynamics
/// (dq_0 = 0), producing a tangent direction at xi.
Direction tangent_direction(const TrajectoryCurve& xi, const std::vector<InputVec>& du,
                            const QuadParams& params);

/// Newton (or Gauss-Newton) direction from the LQ subproblem. In full-Newton
/// mode throws IndefiniteHessianError when the subproblem is not convex.
/// `regularization` adds mu * h * I to the stage Hessians.
Direction newton_direction(const TrajectoryCurve& xi, const Problem& problem,
                           const BarrierParams& bp, const SolverConfig& cfg,
                           double regularization = 0.0);

/// The curve xi + gamma * zeta (not a trajectory in general).
TrajectoryCurve displace(const TrajectoryCurve& xi, const Direction& zeta, double gamma);

struct LineSearchResult {
  double step = 0.0;  // 0 signals a stall
  TrajectoryCurve trajectory;
  double cost = 0.0;
};

/// Armijo backtracking over gamma in {1, beta, beta^2, ...} (30 reductions at
/// most). Projection failures count as infinite cost.
LineSearchResult line_search(const TrajectoryCurve& xi, double cost_at_xi, const Direction& zeta,
                             const GainSchedule& K, const Problem& problem,
                             const BarrierParams& bp, const SolverConfig& cfg);

struct IterationRecord {
  int round = 0;
  int iteration = 0;
  double step = 0.0;
  double cost = 0.0;
  double time_of_flight = 0.0;
  double max_constraint = 0.0;
  double predicted_decrease = 0.0;
};

struct InnerResult {
  TrajectoryCurve trajectory;
  double cost = 0.0;
  double predicted_decrease = 0.0;
  int iterations = 0;
  bool converged = false;
  bool stalled = false;
};

using IterationCallback = std::function<void(const IterationRecord&)>;

/// Newton iterations xi <- P(xi + gamma zeta) until |Dg . zeta| < tol_grad,
/// a stall (two consecutive failed line searches) or max_newton.
InnerResult solve_inner(const TrajectoryCurve& xi0, const Problem& problem,
                        const BarrierParams& bp, const SolverConfig& cfg, int round = 0,
                        const IterationCallback& on_iteration = {});

struct RoundReport {
  int round = 0;
  double epsilon = 0.0;
  double nu = 0.0;
  double cost = 0.0;
  double time_of_flight = 0.0;
  double max_constraint = 0.0;
  int iterations = 0;
  bool converged = false;
  bool stalled = false;
  bool feasibility = false;  // nu-only sharpening round after the schedule
};

struct ContinuationReport {
  double initial_time_of_flight = 0.0;
  double initial_cost = 0.0;
  std::vector<RoundReport> rounds;
  std::vector<IterationRecord> iterations;
  std::vector<TrajectoryCurve> round_trajectories;
  bool stalled = false;
};

struct ContinuationResult {
  TrajectoryCurve trajectory;
  ContinuationReport report;
};

/// Outer barrier continuation: epsilon and nu shrink by `shrink` each round,
/// each round warm-started from the previous one. Stops after max_outer
/// rounds or once the time of flight improves by less than 1e-4 relative.
/// Feasibility rounds follow while the largest constraint value exceeds
/// feasibility_tol. Throws InfeasibleStartError when the initial cost is not
/// finite.
ContinuationResult solve_continuation(const Problem& problem, const TrajectoryCurve& initial,
                                      const SolverConfig& cfg, const IterationCallback& on_iteration = {});

}  // namespace qmt
