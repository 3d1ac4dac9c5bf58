#pragma once

// JSON run configuration. The schema is documented in docs/config_schema.md.

#include <optional>
#include <string>
#include <variant>

#include "json.hpp"

#include "qmt/scenarios.hpp"

namespace qmt {

/// Scenario builder parameters plus solver settings: everything needed to
/// rebuild a Scenario.
struct ScenarioConfig {
  std::variant<TubeParams, CorridorParams> builder = TubeParams{};
  SolverConfig solver{};
};

Scenario build_scenario(const ScenarioConfig& cfg);

struct EmitFlags {
  bool csv = true;
  bool summary = true;
  bool plotdata = true;
  bool iterlog = false;
};

/// Command-line level settings. Unset overrides leave the config untouched.
struct RunConfig {
  std::string config_path;
  std::string out_dir = "out";
  std::optional<int> grid;
  std::optional<double> shrink;
  std::optional<int> rounds;
  std::optional<double> v_init;
  std::optional<double> rho;
  std::optional<bool> gauss_newton;
  EmitFlags emit{};
};

struct ParsedConfig {
  ScenarioConfig config;
  Scenario scenario;
  RunConfig run;
};

/// Parses and validates a configuration document. Unknown keys and type
/// mismatches throw ConfigError with the dotted key path; scenario
/// construction failures propagate as ScenarioError.
ParsedConfig parse_config(const std::string& text);
ParsedConfig load_config(const std::string& path);

/// Applies the overrides of `run` and re-validates. Throws ConfigError.
void apply_overrides(ScenarioConfig& cfg, const RunConfig& run);

/// Full document for `cfg`; parse_config(to_json(cfg).dump()) rebuilds it.
nlohmann::json to_json(const ScenarioConfig& cfg, const EmitFlags& emit = {});

/// Parses "csv,summary,plotdata,iterlog" style lists. Throws ConfigError.
EmitFlags parse_emit_list(const std::string& list);

}  // namespace qmt
