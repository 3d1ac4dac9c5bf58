#include "qmt/run.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <ostream>

#include "qmt/errors.hpp"

namespace qmt {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kBoundaryRing = 24;
constexpr int kBoundarySections = 100;

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::ofstream open_out(const std::string& file) {
  std::ofstream out(file);
  if (!out) throw ConfigError("--out", "cannot write " + file);
  return out;
}

std::vector<std::string> constraint_names(const ConstraintSet& cs) {
  std::vector<std::string> names{"rate1", "rate2", "rate3", "thrust", "roll", "pitch"};
  if (std::holds_alternative<CircObstacle>(cs.obstacle)) {
    names.push_back("position");
  } else {
    names.push_back("position_w1");
    names.push_back("position_w2");
  }
  return names;
}

void write_row(std::ostream& out, const std::vector<double>& row) {
  for (size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << num(row[i]);
  out << '\n';
}

// Points on the boundary of the cross-section at station s, in (w1, w2).
std::vector<Eigen::Vector2d> section_outline(const ConstraintSet& cs, double s) {
  std::vector<Eigen::Vector2d> pts;
  if (const auto* c = std::get_if<CircObstacle>(&cs.obstacle)) {
    const double r = c->r_obs(s);
    for (int j = 0; j < kBoundaryRing; ++j) {
      const double a = 2.0 * std::numbers::pi * j / kBoundaryRing;
      pts.emplace_back(r * std::cos(a), r * std::sin(a));
    }
    return pts;
  }
  const auto& rect = std::get<RectObstacle>(cs.obstacle);
  const double a0 = rect.w1_min(s), a1 = rect.w1_max(s), b0 = rect.w2_min(s), b1 = rect.w2_max(s);
  const Eigen::Vector2d corners[5] = {{a0, b0}, {a1, b0}, {a1, b1}, {a0, b1}, {a0, b0}};
  const int per_edge = kBoundaryRing / 4;
  for (int e = 0; e < 4; ++e) {
    for (int j = 0; j < per_edge; ++j) {
      const double t = static_cast<double>(j) / per_edge;
      pts.push_back(corners[e] + t * (corners[e + 1] - corners[e]));
    }
  }
  return pts;
}

}  // namespace

double terminal_error(const Scenario& scn, const TrajectoryCurve& xi) {
  if (!scn.target) return 0.0;
  return (scn.target->q_d.vec() - xi.states.back().vec()).norm();
}

void write_trajectory_csv(const std::string& file, const Scenario& scn, const TrajectoryCurve& xi) {
  std::ofstream out = open_out(file);
  out << "s,w1,w2,vt,vn,vb,phi,theta,psi,omega1,omega2,omega3,f,p1,p2,p3";
  for (const auto& n : constraint_names(scn.constraints)) out << ",c_" << n;
  out << '\n';
  const SpatialGrid& grid = *xi.grid;
  for (int i = 0; i <= grid.intervals(); ++i) {
    const auto& q = xi.states[static_cast<size_t>(i)];
    const auto& u = xi.inputs[static_cast<size_t>(i)];
    const double s = grid.station(i);
    const Vec3 p = from_transverse(grid.path(), s, q).p;
    std::vector<double> row{s};
    for (int k = 0; k < kStateDim; ++k) row.push_back(q.vec()[k]);
    for (int k = 0; k < kInputDim; ++k) row.push_back(u.vec()[k]);
    for (int k = 0; k < 3; ++k) row.push_back(p[k]);
    const Eigen::VectorXd c = eval_constraints(q, u, s, scn.constraints);
    for (Eigen::Index k = 0; k < c.size(); ++k) row.push_back(c[k]);
    write_row(out, row);
  }
}

void write_iterations_csv(const std::string& file, const ContinuationReport& rep) {
  std::ofstream out = open_out(file);
  out << "round,iteration,step,cost,time_of_flight,max_constraint,predicted_decrease\n";
  for (const auto& r : rep.iterations) {
    out << r.round << ',' << r.iteration << ',' << num(r.step) << ',' << num(r.cost) << ','
        << num(r.time_of_flight) << ',' << num(r.max_constraint) << ',' << num(r.predicted_decrease) << '\n';
  }
}

void write_plotdata(const std::string& dir, const Scenario& scn, const TrajectoryCurve& xi) {
  fs::create_directories(dir);
  const SpatialGrid& grid = *xi.grid;
  const ReferencePath& path = grid.path();
  const ConstraintSet& cs = scn.constraints;
  const int N = grid.intervals();

  {
    std::ofstream out = open_out(dir + "/path3d.csv");
    out << "s,ref_x,ref_y,ref_z,x,y,z\n";
    for (int i = 0; i <= N; ++i) {
      const Vec3 r = grid.frame(i).p_r;
      const Vec3 p = from_transverse(path, grid.station(i), xi.states[static_cast<size_t>(i)]).p;
      write_row(out, {grid.station(i), r.x(), r.y(), r.z(), p.x(), p.y(), p.z()});
    }
  }
  {
    std::ofstream out = open_out(dir + "/boundary.csv");
    out << "s,index,x,y,z\n";
    const double L = path.length();
    for (int k = 0; k <= kBoundarySections; ++k) {
      const double s = L * k / kBoundarySections;
      const FrenetSample f = frenet_at(path, s);
      const auto pts = section_outline(cs, s);
      for (size_t j = 0; j < pts.size(); ++j) {
        const Vec3 p = f.p_r + pts[j].x() * f.n + pts[j].y() * f.b;
        write_row(out, {s, static_cast<double>(j), p.x(), p.y(), p.z()});
      }
    }
  }
  {
    std::ofstream out = open_out(dir + "/distance.csv");
    const bool circ = std::holds_alternative<CircObstacle>(cs.obstacle);
    out << (circ ? "s,distance,r_obs\n" : "s,w1,w1_min,w1_max,w2,w2_min,w2_max\n");
    for (int i = 0; i <= N; ++i) {
      const double s = grid.station(i);
      const auto& q = xi.states[static_cast<size_t>(i)];
      if (circ) {
        write_row(out, {s, q.w().norm(), std::get<CircObstacle>(cs.obstacle).r_obs(s)});
      } else {
        const auto& r = std::get<RectObstacle>(cs.obstacle);
        write_row(out, {s, q.w1(), r.w1_min(s), r.w1_max(s), q.w2(), r.w2_min(s), r.w2_max(s)});
      }
    }
  }
  {
    std::ofstream out = open_out(dir + "/states.csv");
    out << "s,vt,phi,phi_max,theta,theta_max,omega1,omega2,omega3,omega1_max,omega2_max,omega3_max,f,f_min,f_max\n";
    for (int i = 0; i <= N; ++i) {
      const double s = grid.station(i);
      const auto& q = xi.states[static_cast<size_t>(i)];
      const auto& u = xi.inputs[static_cast<size_t>(i)];
      write_row(out, {s, q.vt(), q.phi(), cs.phi_max(s), q.theta(), cs.theta_max(s), u.vec()[0], u.vec()[1],
                      u.vec()[2], cs.omega_max[0], cs.omega_max[1], cs.omega_max[2], u.thrust(), cs.f_min,
                      cs.f_max});
    }
  }
}

json make_summary(const Scenario& scn, const ContinuationResult& res, const std::string& status) {
  const TrajectoryCurve& xi = res.trajectory;
  const SpatialGrid& grid = *xi.grid;
  const auto names = constraint_names(scn.constraints);
  std::vector<double> worst(names.size(), -std::numeric_limits<double>::infinity());
  double section_margin = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= grid.intervals(); ++i) {
    const double s = grid.station(i);
    const Eigen::VectorXd c = eval_constraints(xi.states[static_cast<size_t>(i)], xi.inputs[static_cast<size_t>(i)], s,
                                               scn.constraints);
    for (size_t j = 0; j < names.size(); ++j) worst[j] = std::max(worst[j], c[static_cast<Eigen::Index>(j)]);
    if (s >= scn.section_begin && s <= scn.section_end) {
      for (Eigen::Index j = kPosition; j < c.size(); ++j) section_margin = std::min(section_margin, -c[j]);
    }
  }
  json margins = json::object();
  for (size_t j = 0; j < names.size(); ++j) margins[names[j]] = worst[j];

  json rounds = json::array();
  int total = 0;
  for (const auto& r : res.report.rounds) {
    rounds.push_back({{"round", r.round},
                      {"epsilon", r.epsilon},
                      {"nu", r.nu},
                      {"cost", r.cost},
                      {"time_of_flight", r.time_of_flight},
                      {"max_constraint", r.max_constraint},
                      {"iterations", r.iterations},
                      {"converged", r.converged},
                      {"stalled", r.stalled},
                      {"feasibility_round", r.feasibility}});
    total += r.iterations;
  }
  json doc{{"scenario", scn.name},
           {"status", status},
           {"partial", false},
           {"grid_intervals", grid.intervals()},
           {"path_length", grid.path().length()},
           {"initial_time_of_flight", res.report.initial_time_of_flight},
           {"time_of_flight", time_of_flight(xi)},
           {"initial_cost", res.report.initial_cost},
           {"final_cost", res.report.rounds.empty() ? res.report.initial_cost : res.report.rounds.back().cost},
           {"max_constraint", max_constraint(xi, scn.constraints)},
           {"constraint_max_by_kind", margins},
           {"section", {{"begin", scn.section_begin}, {"end", scn.section_end}, {"min_position_margin", section_margin}}},
           {"dynamics_residual", dynamics_residual(xi, scn.params)},
           {"iterations_total", total},
           {"rounds", rounds}};
  if (scn.target) {
    doc["terminal_error"] = terminal_error(scn, xi);
    doc["rho"] = scn.target->rho;
  }
  return doc;
}

RunOutcome run(const ScenarioConfig& cfg_in, const RunConfig& rc, std::ostream& log) {
  ScenarioConfig cfg = cfg_in;
  apply_overrides(cfg, rc);
  const Scenario scn = build_scenario(cfg);

  std::error_code ec;
  fs::create_directories(rc.out_dir, ec);
  if (ec) throw ConfigError("--out", "cannot create " + rc.out_dir + ": " + ec.message());

  RunOutcome out;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const GridPtr grid = make_grid(scn, cfg.solver.grid_intervals);
    const TrajectoryCurve xi0 = initial_trajectory(scn, grid);
    const Problem problem = make_problem(scn, grid);
    log << "scenario " << scn.name << ": L = " << scn.path.length() << " m, N = " << grid->intervals()
        << ", initial T = " << time_of_flight(xi0) << " s\n";
    out.result = solve_continuation(problem, xi0, cfg.solver);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    out.exit_code = kExitInfeasible;
    out.status = "failed";
    out.message = e.what();
  }
  out.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (out.result) {
    const ContinuationResult& res = *out.result;
    const RoundReport& last = res.report.rounds.back();
    if (!(last.max_constraint <= cfg.solver.feasibility_tol)) {
      out.exit_code = kExitInfeasible;
      out.status = "infeasible";
      out.message = "final trajectory violates a constraint by " + num(last.max_constraint);
    } else if (!last.converged) {
      out.exit_code = kExitStalled;
      out.status = "stalled";
      out.message = last.stalled ? "line search stalled in the last round" : "iteration limit in the last round";
    } else {
      out.status = "converged";
    }
    out.summary = make_summary(scn, res, out.status);
    out.summary["partial"] = out.exit_code != kExitConverged;
    for (const auto& r : res.report.rounds) {
      log << "round " << r.round << (r.feasibility ? " (feasibility)" : "") << ": eps = " << r.epsilon
          << ", nu = " << r.nu << ", T = " << r.time_of_flight << " s, max c = " << r.max_constraint << ", "
          << r.iterations << " iterations" << (r.converged ? "" : ", not converged") << '\n';
    }
    if (rc.emit.csv) write_trajectory_csv(rc.out_dir + "/trajectory.csv", scn, res.trajectory);
    if (rc.emit.iterlog) write_iterations_csv(rc.out_dir + "/iterations.csv", res.report);
    if (rc.emit.plotdata) write_plotdata(rc.out_dir + "/plotdata", scn, res.trajectory);
  } else {
    out.summary = {{"scenario", scn.name}, {"status", out.status}, {"partial", true}};
  }
  if (!out.message.empty()) out.summary["message"] = out.message;
  if (rc.emit.summary) {
    std::ofstream f = open_out(rc.out_dir + "/summary.json");
    f << out.summary.dump(2) << '\n';
  }
  {
    std::ofstream f = open_out(rc.out_dir + "/timing.json");
    f << json{{"wall_time_s", out.wall_time}}.dump(2) << '\n';
  }
  log << "status " << out.status << " (exit " << out.exit_code << ")";
  if (!out.message.empty()) log << ": " << out.message;
  log << '\n';
  return out;
}

OracleOutcome run_oracle(const ScenarioConfig& cfg_in, const RunConfig& rc, std::ostream& log) {
  ScenarioConfig cfg = cfg_in;
  apply_overrides(cfg, rc);
  const Scenario scn = build_scenario(cfg);
  const GridPtr grid = make_grid(scn, cfg.solver.grid_intervals);
  const TrajectoryCurve xi0 = initial_trajectory(scn, grid);
  const ContinuationResult res = solve_continuation(make_problem(scn, grid), xi0, cfg.solver);
  OracleOutcome out;
  out.grid_intervals = grid->intervals();
  out.report = check_time_domain_equivalence(res.trajectory, scn.params, kOracleSubsteps);
  out.passed = out.report.terminal_position_error < kOraclePositionTol &&
               out.report.duration_relative_error < kOracleDurationTol;
  log << "oracle " << scn.name << " N = " << out.grid_intervals
      << ": terminal position error = " << out.report.terminal_position_error
      << " m, T = " << out.report.time_of_flight << " s, reconstructed = " << out.report.reconstructed_duration
      << " s, relative error = " << out.report.duration_relative_error << (out.passed ? " PASS" : " FAIL") << '\n';
  return out;
}

}  // namespace qmt
