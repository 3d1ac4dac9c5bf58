// Python module: configuration, solves and the barrier function.

#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qmt/config.hpp"
#include "qmt/constraints.hpp"
#include "qmt/errors.hpp"
#include "qmt/run.hpp"

namespace py = pybind11;
using namespace qmt;

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

py::dict trajectory_arrays(const Scenario& scn, const TrajectoryCurve& xi) {
  const int n = xi.grid->intervals() + 1;
  Eigen::VectorXd s(n);
  RowMat q(n, kStateDim), u(n, 4), p(n, 3);
  for (int i = 0; i < n; ++i) {
    const auto k = static_cast<size_t>(i);
    s(i) = xi.grid->station(i);
    q.row(i) = xi.states[k].vec().transpose();
    u.row(i) = xi.inputs[k].vec().transpose();
    p.row(i) = from_transverse(scn.path, s(i), xi.states[k]).p.transpose();
  }
  py::dict d;
  d["s"] = s;
  d["states"] = q;
  d["inputs"] = u;
  d["positions"] = p;
  d["time_of_flight"] = time_of_flight(xi);
  return d;
}

py::dict solve(const std::string& text, const std::string& out_dir, std::optional<int> grid,
               std::optional<double> shrink, std::optional<int> rounds, std::optional<double> v_init,
               std::optional<double> rho, const std::string& emit) {
  const ParsedConfig parsed = parse_config(text);
  RunConfig rc;
  rc.out_dir = out_dir;
  rc.grid = grid;
  rc.shrink = shrink;
  rc.rounds = rounds;
  rc.v_init = v_init;
  rc.rho = rho;
  rc.emit = parse_emit_list(emit);
  std::ostringstream log;
  RunOutcome out;
  {
    py::gil_scoped_release nogil;
    out = run(parsed.config, rc, log);
  }
  py::dict d;
  d["exit_code"] = out.exit_code;
  d["status"] = out.status;
  d["message"] = out.message;
  d["summary"] = out.summary.dump();
  d["wall_time"] = out.wall_time;
  d["log"] = log.str();
  if (out.result) {
    ScenarioConfig cfg = parsed.config;
    apply_overrides(cfg, rc);
    d["trajectory"] = trajectory_arrays(build_scenario(cfg), out.result->trajectory);
  }
  return d;
}

}  // namespace

PYBIND11_MODULE(_qmt, m) {
  m.doc() = "Minimum-time quadrotor trajectories in transverse coordinates";

  // Later registrations are tried first.
  py::register_exception<Error>(m, "SolverError", PyExc_RuntimeError);
  py::register_exception<ScenarioError>(m, "ScenarioError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def("default_config", [](const std::string& which) {
    ScenarioConfig cfg;
    if (which == "corridor") cfg.builder = CorridorParams{};
    else if (which != "tube") throw ConfigError("scenario", "expected tube or corridor");
    return to_json(cfg).dump(2);
  }, py::arg("scenario"), "Full default configuration document as JSON text.");

  m.def("validate", [](const std::string& text) {
    const ParsedConfig pc = parse_config(text);
    py::dict d;
    d["scenario"] = pc.scenario.name;
    d["length"] = pc.scenario.path.length();
    d["constraints"] = pc.scenario.constraints.count();
    d["grid_intervals"] = pc.scenario.solver.grid_intervals;
    return d;
  }, py::arg("config"));

  m.def("solve", &solve, py::arg("config"), py::arg("out_dir"), py::arg("grid") = py::none(),
        py::arg("shrink") = py::none(), py::arg("rounds") = py::none(), py::arg("v_init") = py::none(),
        py::arg("rho") = py::none(), py::arg("emit") = "summary",
        "Runs the solver on a JSON configuration and writes the selected artifacts to out_dir.");

  m.def("beta_nu", [](double x, double nu) {
    const BarrierValue b = beta_nu(x, nu);
    return py::make_tuple(b.value, b.d1, b.d2);
  }, py::arg("x"), py::arg("nu"), "Barrier value and first two derivatives.");
}
