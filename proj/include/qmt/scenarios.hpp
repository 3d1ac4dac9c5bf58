#pragma once

// Benchmark scenarios (narrowing tube, corridor with an obstacle) and the
// quasi-static initial trajectory.

#include <optional>
#include <string>

#include "qmt/constraints.hpp"
#include "qmt/dyn_time.hpp"
#include "qmt/pronto.hpp"
#include "qmt/refpath.hpp"
#include "qmt/trajectory.hpp"

namespace qmt {

struct Scenario {
  std::string name;
  ReferencePath path;
  ConstraintSet constraints;
  TransverseState q0;
  std::optional<TerminalTarget> target;
  QuadParams params;
  SolverConfig solver;
  double v_init = 1.0;  // m/s, speed of the initial trajectory
  GridRefinement grid_refinement{};
  // Arc-length window used when reporting boundary contact: the narrow half
  // of the tube or the corridor segment.
  double section_begin = 0.0;
  double section_end = 0.0;

  /// Checks the constraint profiles, the tubular-neighborhood condition of
  /// the position bounds, q0 and the target. Throws ScenarioError or
  /// ConfigError.
  void validate() const;
};

struct TubeParams {
  AtanHelixSpec path{};
  double r_start = 0.5;             // m
  double r_end = 0.2;               // m
  double narrowing_at = 0.5;        // fraction of L where the radius is halfway
  double narrowing_sharpness = 1.5; // 1/m
  GridRefinement grid_refinement{};
  ConstraintSet bounds{};           // obstacle field is replaced
  QuadParams params{};
  double v_init = 1.0;
};

/// Climbing circular turn inside a circular tube whose radius shrinks from
/// r_start to r_end. No terminal target.
/// Throws ScenarioError when r_obs(s) >= 1/k(s) somewhere.
Scenario build_tube_scenario(const TubeParams& p = {});

struct CorridorParams {
  AtanSCurveSpec path{2.0, 1.5, -6.0, -0.3};
  double room_half_width = 1.5;    // m, before the corridor and laterally after it
  double corridor_side = 0.5;      // m, square section
  double corridor_begin = 2.0;     // m of arc length
  double corridor_end = 3.5;       // m of arc length
  double wall_sharpness = 8.0;     // 1/m, tanh steps
  bool obstacle = true;
  double obstacle_at = 4.0;        // m of arc length
  double obstacle_sharpness = 2.5; // 1/m, tanh step
  double w2_above_min = -2.5;      // m, binormal window above the obstacle
  double w2_above_max = -1.0;      // m
  StateVec q_d = (StateVec() << 0.0, -1.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0).finished();
  double rho = 1e3;
  GridRefinement grid_refinement{0.3, 2e-4};  // resolves the braking toward v_t(L) = 0
  ConstraintSet bounds{};          // obstacle field is replaced
  QuadParams params{};
  double v_init = 1.0;
};

/// Planar arctangent path through a room, a square corridor and a region
/// where an obstacle below forces w2 <= w2_above_max. Terminal target q_d
/// (default [0 -1.5 0 0 0 0 0 0]) with weight rho.
Scenario build_corridor_scenario(const CorridorParams& p = {});

/// Attitude and thrust balancing gravity and the centripetal acceleration
/// v^2 k n of a flight along the path at constant speed v.
struct QuasiStatic {
  Vec3 attitude;  // roll, pitch, zero yaw
  double thrust = 0.0;
};

/// Throws QuasiStaticInfeasibleError when the tilt exceeds pi/2 - 0.1.
QuasiStatic quasi_static(const ReferencePath& path, double s, double v, const QuadParams& params);

/// On-path state w = 0, v_SF = (v, 0, 0) with the quasi-static attitude.
TransverseState quasi_static_state(const ReferencePath& path, double s, double v,
                                   const QuadParams& params);

/// Quasi-static curve on the grid, turned into a trajectory by the
/// projection operator.
TrajectoryCurve initial_trajectory(const Scenario& scn, const GridPtr& grid,
                                   std::optional<double> v_init = std::nullopt);

GridPtr make_grid(const Scenario& scn, int intervals);
Problem make_problem(const Scenario& scn, const GridPtr& grid);

}  // namespace qmt
