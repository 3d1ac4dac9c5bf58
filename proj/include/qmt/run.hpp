#pragma once

// Scenario execution and artifact emission for the command-line tool.

#include <iosfwd>
#include <optional>
#include <string>

#include "json.hpp"

#include "qmt/config.hpp"
#include "qmt/pronto.hpp"
#include "qmt/transverse.hpp"

namespace qmt {

enum ExitCode : int { kExitConverged = 0, kExitOracleFailed = 1, kExitStalled = 2, kExitConfig = 3, kExitInfeasible = 4 };

struct RunOutcome {
  int exit_code = kExitConverged;
  std::string status;  // converged, stalled, infeasible, failed
  std::string message;
  std::optional<ContinuationResult> result;
  nlohmann::json summary;
  double wall_time = 0.0;  // s
};

/// Solves the scenario and writes the artifacts selected in run.emit into
/// run.out_dir. Solver failures are reported through the outcome (and a
/// summary flagged partial), not thrown. Throws ConfigError for bad
/// overrides or an unwritable output directory.
RunOutcome run(const ScenarioConfig& cfg, const RunConfig& run, std::ostream& log);

/// Summary document of a finished solve (no wall time, so identical inputs
/// give identical bytes).
nlohmann::json make_summary(const Scenario& scn, const ContinuationResult& res, const std::string& status);

void write_trajectory_csv(const std::string& file, const Scenario& scn, const TrajectoryCurve& xi);
void write_iterations_csv(const std::string& file, const ContinuationReport& rep);
void write_plotdata(const std::string& dir, const Scenario& scn, const TrajectoryCurve& xi);

/// Euclidean distance between the final state and the target.
double terminal_error(const Scenario& scn, const TrajectoryCurve& xi);

struct OracleOutcome {
  EquivalenceReport report;
  bool passed = false;
  int grid_intervals = 0;
};

inline constexpr double kOraclePositionTol = 1e-3;  // m
inline constexpr double kOracleDurationTol = 1e-4;  // relative
inline constexpr int kOracleSubsteps = 8;

/// Solves the scenario and replays the solution through the time-domain
/// model.
OracleOutcome run_oracle(const ScenarioConfig& cfg, const RunConfig& run, std::ostream& log);

}  // namespace qmt
