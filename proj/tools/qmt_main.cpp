// qmt: minimum-time quadrotor trajectories along a reference path.

#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "qmt/config.hpp"
#include "qmt/errors.hpp"
#include "qmt/run.hpp"

namespace {

int with_config(const std::string& file, const auto& body) {
  try {
    const qmt::ParsedConfig parsed = qmt::load_config(file);
    return body(parsed);
  } catch (const qmt::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return qmt::kExitConfig;
  } catch (const qmt::ScenarioError& e) {
    std::cerr << "scenario error: " << e.what() << '\n';
    return qmt::kExitConfig;
  } catch (const qmt::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return qmt::kExitInfeasible;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minimum-time quadrotor trajectory optimizer in transverse coordinates"};
  app.require_subcommand(1);

  std::string config;
  qmt::RunConfig rc;
  std::string emit;
  bool gauss_newton = true;

  auto* solve = app.add_subcommand("solve", "Solve a scenario and write artifacts");
  solve->add_option("config", config, "JSON configuration")->required()->check(CLI::ExistingFile);
  solve->add_option("--out", rc.out_dir, "Output directory")->required();
  solve->add_option("--grid", rc.grid, "Grid intervals N")->check(CLI::PositiveNumber);
  solve->add_option("--shrink", rc.shrink, "Continuation factor for epsilon and nu");
  solve->add_option("--rounds", rc.rounds, "Maximum continuation rounds");
  solve->add_option("--v-init", rc.v_init, "Speed of the initial trajectory (m/s)");
  solve->add_option("--rho", rc.rho, "Terminal weight");
  auto* emit_opt = solve->add_option("--emit", emit, "Artifacts: csv,summary,plotdata,iterlog");
  auto* gn_opt = solve->add_option("--gauss-newton", gauss_newton, "Gauss-Newton Hessian (true|false)");

  auto* validate = app.add_subcommand("validate", "Parse and validate a configuration");
  validate->add_option("config", config, "JSON configuration")->required()->check(CLI::ExistingFile);

  auto* oracle = app.add_subcommand("oracle", "Solve, then replay the solution in the time domain");
  oracle->add_option("config", config, "JSON configuration")->required()->check(CLI::ExistingFile);
  oracle->add_option("--grid", rc.grid, "Grid intervals N")->check(CLI::PositiveNumber);

  std::string which;
  auto* defaults = app.add_subcommand("defaults", "Print the full default configuration of a scenario");
  defaults->add_option("scenario", which, "tube or corridor")->required()->check(CLI::IsMember({"tube", "corridor"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : qmt::kExitConfig;
  }

  if (*solve) {
    return with_config(config, [&](const qmt::ParsedConfig& parsed) {
      qmt::RunConfig run = rc;
      run.config_path = config;
      run.emit = *emit_opt ? qmt::parse_emit_list(emit) : parsed.run.emit;
      if (*gn_opt) run.gauss_newton = gauss_newton;
      return qmt::run(parsed.config, run, std::cout).exit_code;
    });
  }
  if (*defaults) {
    qmt::ScenarioConfig cfg;
    if (which == "corridor") cfg.builder = qmt::CorridorParams{};
    std::cout << qmt::to_json(cfg).dump(2) << '\n';
    return qmt::kExitConverged;
  }
  if (*validate) {
    return with_config(config, [&](const qmt::ParsedConfig& parsed) {
      const auto& scn = parsed.scenario;
      std::cout << "ok: " << scn.name << " scenario, L = " << scn.path.length() << " m, "
                << scn.constraints.count() << " constraints, N = " << scn.solver.grid_intervals << '\n';
      return qmt::kExitConverged;
    });
  }
  return with_config(config, [&](const qmt::ParsedConfig& parsed) {
    const auto out = qmt::run_oracle(parsed.config, rc, std::cout);
    return out.passed ? qmt::kExitConverged : qmt::kExitOracleFailed;
  });
}
