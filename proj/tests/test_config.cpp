#include <cmath>
#include <string>

#include "doctest.h"
#include "qmt/config.hpp"
#include "qmt/errors.hpp"

using namespace qmt;
using nlohmann::json;

namespace {

std::string key_path_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.key_path();
  }
  return "<no error>";
}

}  // namespace

TEST_CASE("minimal tube document uses the defaults") {
  const ParsedConfig pc = parse_config(R"({"scenario": "tube"})");
  REQUIRE(std::holds_alternative<TubeParams>(pc.config.builder));
  CHECK(pc.scenario.name == "tube");
  CHECK(pc.config.solver.grid_intervals == 500);
  CHECK(pc.run.emit.csv);
  CHECK(pc.run.emit.summary);
  CHECK(pc.run.emit.plotdata);
  CHECK_FALSE(pc.run.emit.iterlog);
  CHECK(pc.scenario.path.length() == doctest::Approx(build_tube_scenario().path.length()));
}

TEST_CASE("errors name the offending key") {
  CHECK(key_path_of(R"({"scenario": "tube", "constraints": {"thrust": 1}})") == "constraints.thrust");
  CHECK(key_path_of(R"({"scenario": "tube", "solver": {"shrink": "fast"}})") == "solver.shrink");
  CHECK(key_path_of(R"({"scenario": "tube", "solver": {"max_outer": 2.5}})") == "solver.max_outer");
  CHECK(key_path_of(R"({"scenario": "tube", "solver": {"shrink": 1.5}})") == "solver.shrink");
  CHECK(key_path_of(R"({"scenario": "tube", "solver": {"Rr": [1, 1, 1]}})") == "solver.Rr");
  CHECK(key_path_of(R"({"scenario": "tube", "target": {"rho": 1}})") == "target");
  CHECK(key_path_of(R"({"scenario": "tube", "path": {"family": "atan_s_curve"}})") == "path.family");
  CHECK(key_path_of(R"({"scenario": "tube", "colour": 1})") == "colour");
  CHECK(key_path_of(R"({"scenario": "boat"})") == "scenario");
  CHECK(key_path_of(R"({"scenario": "corridor", "target": {"rho": -1}})") == "target.rho");
  CHECK(key_path_of(R"({"scenario": "tube", "output": {"emit": ["pdf"]}})") == "output.emit");
  CHECK(key_path_of(R"({"scenario": "tube", "initial": {"v_init": 0.0}})") == "initial.v_init");
  CHECK(key_path_of(R"({"scenario": "tube", "grid_refinement": {"offset": 0}})") == "grid_refinement.offset");
  CHECK(key_path_of(R"({"scenario": "tube", "constraints": {"phi_max": {"steps": []}}})") ==
        "constraints.phi_max.base");
  CHECK(key_path_of("{not json") == "<root>");
}

TEST_CASE("thrust ordering and step shapes") {
  for (const char* scn : {"tube", "corridor"}) {
    const std::string doc = std::string(R"({"scenario": ")") + scn + R"(", "constraints": {"f_min": 0.4, "f_max": 0.3}})";
    CHECK(key_path_of(doc) == "constraints.thrust");
  }
  const std::string shaped = R"({"scenario": "tube", "constraints": {"phi_max": {"base": 0.5, "steps": [
      {"at": 1.0, "delta": 0.2, "sharpness": 4.0, "shape": "tanh"}]}}})";
  const ParsedConfig pc = parse_config(shaped);
  const Profile& phi = pc.scenario.constraints.phi_max;
  CHECK(phi(1.3) == doctest::Approx(0.5 + 0.1 * (1.0 + std::tanh(1.2))).epsilon(1e-12));
  CHECK(key_path_of(R"({"scenario": "tube", "constraints": {"phi_max": {"base": 0.5, "steps": [
      {"at": 1.0, "delta": 0.2, "sharpness": 4.0, "shape": "cubic"}]}}})") == "constraints.phi_max.steps[0].shape");
}

TEST_CASE("scenario construction failures are not config errors") {
  CHECK_THROWS_AS(parse_config(R"({"scenario": "tube", "tube": {"r_start": 3.5}})"), ScenarioError);
}

TEST_CASE("corridor target and profiles") {
  const ParsedConfig pc = parse_config(R"({
    "scenario": "corridor",
    "target": {"q_d": [0, -2, 0, 0, 0, 0, 0, 0], "rho": 50},
    "constraints": {"phi_max": {"base": 0.5, "steps": [{"at": 1.0, "delta": 0.1, "sharpness": 5}]}}
  })");
  REQUIRE(pc.scenario.target.has_value());
  CHECK(pc.scenario.target->q_d.w2() == -2.0);
  CHECK(pc.scenario.target->rho == 50.0);
  const Profile& phi = pc.scenario.constraints.phi_max;
  CHECK(phi.base() == 0.5);
  REQUIRE(phi.steps().size() == 1);
  CHECK(phi(1.0) == doctest::Approx(0.55));
}

TEST_CASE("to_json round trip") {
  CorridorParams cp;
  cp.rho = 77.0;
  cp.bounds.phi_max = Profile(0.5, {{2.0, 0.05, 3.0}});
  ScenarioConfig cfg{cp, SolverConfig{}};
  cfg.solver.Rr(3, 3) = 10.0;
  cfg.solver.shrink = 0.3;
  EmitFlags emit{true, false, false, true};
  const json doc = to_json(cfg, emit);
  const ParsedConfig back = parse_config(doc.dump());
  CHECK(to_json(back.config, back.run.emit) == doc);
  CHECK(back.config.solver.Rr(3, 3) == 10.0);
  CHECK(back.run.emit.iterlog);
  CHECK_FALSE(back.run.emit.summary);

  const json tube = to_json(ScenarioConfig{});
  CHECK(to_json(parse_config(tube.dump()).config) == tube);
}

TEST_CASE("shipped configs match the built-in defaults") {
  const ParsedConfig tube = load_config(QMT_SOURCE_DIR "/configs/tube.json");
  CHECK(to_json(tube.config) == to_json(ScenarioConfig{}));
  const ParsedConfig corridor = load_config(QMT_SOURCE_DIR "/configs/corridor.json");
  CHECK(to_json(corridor.config) == to_json(ScenarioConfig{CorridorParams{}, SolverConfig{}}));
  CHECK(load_config(QMT_SOURCE_DIR "/configs/tube_minimal.json").run.config_path ==
        QMT_SOURCE_DIR "/configs/tube_minimal.json");
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("emit lists") {
  const EmitFlags e = parse_emit_list("csv,iterlog");
  CHECK(e.csv);
  CHECK(e.iterlog);
  CHECK_FALSE(e.summary);
  CHECK_FALSE(e.plotdata);
  CHECK_FALSE(parse_emit_list("").csv);
  CHECK_THROWS_AS(parse_emit_list("csv,movie"), ConfigError);
}

TEST_CASE("overrides") {
  ScenarioConfig cfg{CorridorParams{}, SolverConfig{}};
  RunConfig rc;
  rc.grid = 200;
  rc.shrink = 0.5;
  rc.rounds = 3;
  rc.v_init = 1.5;
  rc.rho = 10.0;
  rc.gauss_newton = false;
  apply_overrides(cfg, rc);
  CHECK(cfg.solver.grid_intervals == 200);
  CHECK(cfg.solver.shrink == 0.5);
  CHECK(cfg.solver.max_outer == 3);
  CHECK_FALSE(cfg.solver.use_gauss_newton);
  CHECK(std::get<CorridorParams>(cfg.builder).v_init == 1.5);
  CHECK(std::get<CorridorParams>(cfg.builder).rho == 10.0);

  ScenarioConfig tube;
  RunConfig bad;
  bad.rho = 5.0;
  CHECK_THROWS_AS(apply_overrides(tube, bad), ConfigError);
  bad = RunConfig{};
  bad.grid = 0;
  CHECK_THROWS_AS(apply_overrides(tube, bad), ConfigError);
}
