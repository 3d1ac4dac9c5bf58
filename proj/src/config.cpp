#include "qmt/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "qmt/errors.hpp"
#include "qmt/transverse.hpp"

namespace qmt {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

// Object reader that records which keys were consumed so leftovers can be
// rejected with their full path.
class Obj {
 public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  const json* find(const std::string& key) {
    auto it = j_.find(key);
    if (it == j_.end()) return nullptr;
    seen_.insert(key);
    return &*it;
  }

  std::string key(const std::string& k) const { return join(path_, k); }

  void number(const std::string& k, double& out) {
    if (const json* v = find(k)) {
      if (!v->is_number()) throw ConfigError(key(k), "expected a number");
      out = v->get<double>();
    }
  }

  void integer(const std::string& k, int& out) {
    if (const json* v = find(k)) {
      if (!v->is_number_integer()) throw ConfigError(key(k), "expected an integer");
      out = v->get<int>();
    }
  }

  void boolean(const std::string& k, bool& out) {
    if (const json* v = find(k)) {
      if (!v->is_boolean()) throw ConfigError(key(k), "expected true or false");
      out = v->get<bool>();
    }
  }

  template <int Dim>
  void vector(const std::string& k, Eigen::Matrix<double, Dim, 1>& out) {
    if (const json* v = find(k)) out = read_vector<Dim>(*v, key(k));
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(key(it.key()), "unknown key");
    }
  }

  template <int Dim>
  static Eigen::Matrix<double, Dim, 1> read_vector(const json& v, const std::string& where) {
    if (!v.is_array() || v.size() != static_cast<size_t>(Dim)) {
      throw ConfigError(where, "expected an array of " + std::to_string(Dim) + " numbers");
    }
    Eigen::Matrix<double, Dim, 1> out;
    for (int i = 0; i < Dim; ++i) {
      if (!v[static_cast<size_t>(i)].is_number()) throw ConfigError(where, "expected numbers");
      out[i] = v[static_cast<size_t>(i)].get<double>();
    }
    return out;
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string step_path(const std::string& where, size_t i) {
  return join(where, "steps[" + std::to_string(i) + "]");
}

// A profile is either a number or
// {"base": b, "steps": [{"at", "delta", "sharpness", "shape"}]}, shape "atan" (default) or "tanh".
Profile read_profile(const json& v, const std::string& where) {
  if (v.is_number()) return Profile(v.get<double>());
  Obj o(v, where);
  double base = 0.0;
  if (!o.find("base")) throw ConfigError(join(where, "base"), "missing");
  o.number("base", base);
  std::vector<ProfileStep> steps;
  if (const json* st = o.find("steps")) {
    if (!st->is_array()) throw ConfigError(join(where, "steps"), "expected an array");
    for (size_t i = 0; i < st->size(); ++i) {
      Obj so((*st)[i], step_path(where, i));
      ProfileStep ps;
      so.number("at", ps.at);
      so.number("delta", ps.delta);
      so.number("sharpness", ps.sharpness);
      if (const json* sh = so.find("shape")) {
        if (*sh == "tanh") ps.shape = StepShape::kTanh;
        else if (*sh != "atan") throw ConfigError(join(step_path(where, i), "shape"), "expected \"atan\" or \"tanh\"");
      }
      so.finish();
      steps.push_back(ps);
    }
  }
  o.finish();
  return Profile(base, std::move(steps));
}

json profile_json(const Profile& p) {
  if (p.is_constant()) return p.base();
  json steps = json::array();
  for (const auto& st : p.steps()) {
    steps.push_back({{"at", st.at},
                     {"delta", st.delta},
                     {"sharpness", st.sharpness},
                     {"shape", st.shape == StepShape::kTanh ? "tanh" : "atan"}});
  }
  return {{"base", p.base()}, {"steps", steps}};
}

// Symmetric weight: a diagonal given as a flat array or the full matrix as
// an array of rows.
template <int Dim>
Eigen::Matrix<double, Dim, Dim> read_weight(const json& v, const std::string& where) {
  if (v.is_array() && !v.empty() && v[0].is_array()) {
    if (v.size() != static_cast<size_t>(Dim)) throw ConfigError(where, "expected " + std::to_string(Dim) + " rows");
    Eigen::Matrix<double, Dim, Dim> M;
    for (int r = 0; r < Dim; ++r) {
      M.row(r) = Obj::read_vector<Dim>(v[static_cast<size_t>(r)], where).transpose();
    }
    return M;
  }
  return Obj::read_vector<Dim>(v, where).asDiagonal();
}

template <int Dim>
json weight_json(const Eigen::Matrix<double, Dim, Dim>& M) {
  const bool diagonal = (M - Eigen::Matrix<double, Dim, Dim>(M.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0;
  json out = json::array();
  if (diagonal) {
    for (int i = 0; i < Dim; ++i) out.push_back(M(i, i));
    return out;
  }
  for (int r = 0; r < Dim; ++r) {
    json row = json::array();
    for (int c = 0; c < Dim; ++c) row.push_back(M(r, c));
    out.push_back(row);
  }
  return out;
}

template <int Dim>
json vector_json(const Eigen::Matrix<double, Dim, 1>& v) {
  json out = json::array();
  for (int i = 0; i < Dim; ++i) out.push_back(v[i]);
  return out;
}

void read_path(const json& v, AtanHelixSpec& p) {
  Obj o(v, "path");
  o.number("radius", p.radius);
  o.number("height", p.height);
  o.number("sharpness", p.sharpness);
  o.number("u_center", p.u_center);
  o.number("u_end", p.u_end);
  o.finish();
}

void read_path(const json& v, AtanSCurveSpec& p) {
  Obj o(v, "path");
  o.number("a", p.a);
  o.number("b", p.b);
  o.number("u_begin", p.u_begin);
  o.number("u_end", p.u_end);
  o.finish();
}

json path_json(const AtanHelixSpec& p) {
  return {{"family", "atan_helix"}, {"radius", p.radius}, {"height", p.height},
          {"sharpness", p.sharpness}, {"u_center", p.u_center}, {"u_end", p.u_end}};
}

json path_json(const AtanSCurveSpec& p) {
  return {{"family", "atan_s_curve"}, {"a", p.a}, {"b", p.b}, {"u_begin", p.u_begin}, {"u_end", p.u_end}};
}

void read_path_checked(const json& v, const char* family, auto& spec) {
  if (!v.is_object()) throw ConfigError("path", "expected an object");
  json copy = v;
  if (auto it = copy.find("family"); it != copy.end()) {
    if (*it != family) throw ConfigError("path.family", std::string("this scenario uses \"") + family + "\"");
    copy.erase("family");
  }
  read_path(copy, spec);
}

void read_constraints(const json& v, ConstraintSet& cs) {
  Obj o(v, "constraints");
  o.vector<3>("omega_max", cs.omega_max);
  o.number("f_min", cs.f_min);
  o.number("f_max", cs.f_max);
  if (const json* p = o.find("phi_max")) cs.phi_max = read_profile(*p, "constraints.phi_max");
  if (const json* p = o.find("theta_max")) cs.theta_max = read_profile(*p, "constraints.theta_max");
  o.finish();
}

json constraints_json(const ConstraintSet& cs) {
  return {{"omega_max", vector_json<3>(cs.omega_max)},
          {"f_min", cs.f_min},
          {"f_max", cs.f_max},
          {"phi_max", profile_json(cs.phi_max)},
          {"theta_max", profile_json(cs.theta_max)}};
}

void read_vehicle(const json& v, QuadParams& q) {
  Obj o(v, "vehicle");
  o.number("mass", q.mass);
  o.number("gravity", q.gravity);
  o.finish();
}

void read_refinement(const json& v, GridRefinement& g) {
  Obj o(v, "grid_refinement");
  o.number("strength", g.strength);
  o.number("offset", g.offset);
  o.finish();
  if (!(g.strength >= 0.0)) throw ConfigError("grid_refinement.strength", "must be non-negative");
  if (!(g.offset > 0.0)) throw ConfigError("grid_refinement.offset", "must be positive");
}

void read_solver(const json& v, SolverConfig& s) {
  Obj o(v, "solver");
  o.integer("grid_intervals", s.grid_intervals);
  if (const json* q = o.find("Qr")) s.Qr = read_weight<kStateDim>(*q, "solver.Qr");
  if (const json* r = o.find("Rr")) s.Rr = read_weight<kInputDim>(*r, "solver.Rr");
  o.number("armijo_alpha", s.armijo_alpha);
  o.number("armijo_beta", s.armijo_beta);
  o.number("eps0", s.eps0);
  o.number("nu0", s.nu0);
  o.number("shrink", s.shrink);
  o.number("tol_grad", s.tol_grad);
  o.integer("max_newton", s.max_newton);
  o.integer("max_outer", s.max_outer);
  o.boolean("use_gauss_newton", s.use_gauss_newton);
  o.integer("max_feasibility_rounds", s.max_feasibility_rounds);
  o.number("feasibility_tol", s.feasibility_tol);
  o.finish();
}

json solver_json(const SolverConfig& s) {
  return {{"grid_intervals", s.grid_intervals},
          {"Qr", weight_json<kStateDim>(s.Qr)},
          {"Rr", weight_json<kInputDim>(s.Rr)},
          {"armijo_alpha", s.armijo_alpha},
          {"armijo_beta", s.armijo_beta},
          {"eps0", s.eps0},
          {"nu0", s.nu0},
          {"shrink", s.shrink},
          {"tol_grad", s.tol_grad},
          {"max_newton", s.max_newton},
          {"max_outer", s.max_outer},
          {"use_gauss_newton", s.use_gauss_newton},
          {"max_feasibility_rounds", s.max_feasibility_rounds},
          {"feasibility_tol", s.feasibility_tol}};
}

void read_emit(const json& v, EmitFlags& e) {
  if (!v.is_array()) throw ConfigError("output.emit", "expected an array of names");
  e = EmitFlags{false, false, false, false};
  for (const auto& item : v) {
    if (!item.is_string()) throw ConfigError("output.emit", "expected strings");
    const std::string name = item.get<std::string>();
    if (name == "csv") e.csv = true;
    else if (name == "summary") e.summary = true;
    else if (name == "plotdata") e.plotdata = true;
    else if (name == "iterlog") e.iterlog = true;
    else throw ConfigError("output.emit", "unknown artifact \"" + name + "\"");
  }
}

json emit_json(const EmitFlags& e) {
  json out = json::array();
  if (e.csv) out.push_back("csv");
  if (e.summary) out.push_back("summary");
  if (e.plotdata) out.push_back("plotdata");
  if (e.iterlog) out.push_back("iterlog");
  return out;
}

void read_tube(const json& v, TubeParams& p) {
  Obj o(v, "tube");
  o.number("r_start", p.r_start);
  o.number("r_end", p.r_end);
  o.number("narrowing_at", p.narrowing_at);
  o.number("narrowing_sharpness", p.narrowing_sharpness);
  o.finish();
  if (!(p.narrowing_at >= 0.0 && p.narrowing_at <= 1.0)) {
    throw ConfigError("tube.narrowing_at", "must be a fraction of the path length in [0, 1]");
  }
}

void read_corridor(const json& v, CorridorParams& p) {
  Obj o(v, "corridor");
  o.number("room_half_width", p.room_half_width);
  o.number("corridor_side", p.corridor_side);
  o.number("corridor_begin", p.corridor_begin);
  o.number("corridor_end", p.corridor_end);
  o.number("wall_sharpness", p.wall_sharpness);
  o.boolean("obstacle", p.obstacle);
  o.number("obstacle_at", p.obstacle_at);
  o.number("obstacle_sharpness", p.obstacle_sharpness);
  o.number("w2_above_min", p.w2_above_min);
  o.number("w2_above_max", p.w2_above_max);
  o.finish();
}

void read_target(const json& v, CorridorParams& p) {
  Obj o(v, "target");
  o.vector<kStateDim>("q_d", p.q_d);
  o.number("rho", p.rho);
  o.finish();
  if (!(p.rho > 0.0)) throw ConfigError("target.rho", "must be positive");
}

}  // namespace

Scenario build_scenario(const ScenarioConfig& cfg) {
  Scenario scn = std::visit(
      [](const auto& p) -> Scenario {
        if constexpr (std::is_same_v<std::decay_t<decltype(p)>, TubeParams>) {
          return build_tube_scenario(p);
        } else {
          return build_corridor_scenario(p);
        }
      },
      cfg.builder);
  scn.solver = cfg.solver;
  return scn;
}

namespace {

struct Document {
  ScenarioConfig config;
  RunConfig run;
};

Document parse_document(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", std::string("malformed JSON: ") + e.what());
  }
  Obj root(doc, "");
  const json* kind = root.find("scenario");
  if (!kind || !kind->is_string()) throw ConfigError("scenario", "expected \"tube\" or \"corridor\"");

  Document out;
  ScenarioConfig& cfg = out.config;
  QuadParams* params = nullptr;
  ConstraintSet* bounds = nullptr;
  double* v_init = nullptr;
  GridRefinement* refinement = nullptr;
  if (*kind == "tube") {
    TubeParams p;
    if (const json* v = root.find("path")) read_path_checked(*v, "atan_helix", p.path);
    if (const json* v = root.find("tube")) read_tube(*v, p);
    if (root.find("corridor")) throw ConfigError("corridor", "not allowed for the tube scenario");
    if (root.find("target")) throw ConfigError("target", "the tube scenario has no terminal target");
    cfg.builder = p;
    auto& tp = std::get<TubeParams>(cfg.builder);
    params = &tp.params;
    bounds = &tp.bounds;
    v_init = &tp.v_init;
    refinement = &tp.grid_refinement;
  } else if (*kind == "corridor") {
    CorridorParams p;
    if (const json* v = root.find("path")) read_path_checked(*v, "atan_s_curve", p.path);
    if (const json* v = root.find("corridor")) read_corridor(*v, p);
    if (const json* v = root.find("target")) read_target(*v, p);
    if (root.find("tube")) throw ConfigError("tube", "not allowed for the corridor scenario");
    cfg.builder = p;
    auto& cp = std::get<CorridorParams>(cfg.builder);
    params = &cp.params;
    bounds = &cp.bounds;
    v_init = &cp.v_init;
    refinement = &cp.grid_refinement;
  } else {
    throw ConfigError("scenario", "expected \"tube\" or \"corridor\"");
  }

  if (const json* v = root.find("vehicle")) read_vehicle(*v, *params);
  if (const json* v = root.find("constraints")) read_constraints(*v, *bounds);
  if (const json* v = root.find("grid_refinement")) read_refinement(*v, *refinement);
  if (const json* v = root.find("initial")) {
    Obj o(*v, "initial");
    o.number("v_init", *v_init);
    o.finish();
  }
  if (const json* v = root.find("solver")) read_solver(*v, cfg.solver);
  if (const json* v = root.find("output")) {
    Obj o(*v, "output");
    if (const json* e = o.find("emit")) read_emit(*e, out.run.emit);
    o.finish();
  }
  root.finish();

  params->validate();
  cfg.solver.validate();
  if (!(*v_init > kMinForwardSpeed)) throw ConfigError("initial.v_init", "must exceed the forward speed floor");
  return out;
}

}  // namespace

ParsedConfig parse_config(const std::string& text) {
  Document d = parse_document(text);
  Scenario scn = build_scenario(d.config);
  return ParsedConfig{std::move(d.config), std::move(scn), std::move(d.run)};
}

ParsedConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  ParsedConfig out = parse_config(ss.str());
  out.run.config_path = path;
  return out;
}

void apply_overrides(ScenarioConfig& cfg, const RunConfig& run) {
  if (run.grid) cfg.solver.grid_intervals = *run.grid;
  if (run.shrink) cfg.solver.shrink = *run.shrink;
  if (run.rounds) cfg.solver.max_outer = *run.rounds;
  if (run.gauss_newton) cfg.solver.use_gauss_newton = *run.gauss_newton;
  cfg.solver.validate();
  if (run.v_init) {
    if (!(*run.v_init > kMinForwardSpeed)) throw ConfigError("initial.v_init", "must exceed the forward speed floor");
    std::visit([&](auto& p) { p.v_init = *run.v_init; }, cfg.builder);
  }
  if (run.rho) {
    auto* cp = std::get_if<CorridorParams>(&cfg.builder);
    if (!cp) throw ConfigError("target.rho", "the tube scenario has no terminal target");
    if (!(*run.rho > 0.0)) throw ConfigError("target.rho", "must be positive");
    cp->rho = *run.rho;
  }
}

json to_json(const ScenarioConfig& cfg, const EmitFlags& emit) {
  json doc;
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        doc["path"] = path_json(p.path);
        doc["vehicle"] = {{"mass", p.params.mass}, {"gravity", p.params.gravity}};
        doc["constraints"] = constraints_json(p.bounds);
        doc["grid_refinement"] = {{"strength", p.grid_refinement.strength}, {"offset", p.grid_refinement.offset}};
        doc["initial"] = {{"v_init", p.v_init}};
        if constexpr (std::is_same_v<T, TubeParams>) {
          doc["scenario"] = "tube";
          doc["tube"] = {{"r_start", p.r_start},
                         {"r_end", p.r_end},
                         {"narrowing_at", p.narrowing_at},
                         {"narrowing_sharpness", p.narrowing_sharpness}};
        } else {
          doc["scenario"] = "corridor";
          doc["corridor"] = {{"room_half_width", p.room_half_width},
                             {"corridor_side", p.corridor_side},
                             {"corridor_begin", p.corridor_begin},
                             {"corridor_end", p.corridor_end},
                             {"wall_sharpness", p.wall_sharpness},
                             {"obstacle", p.obstacle},
                             {"obstacle_at", p.obstacle_at},
                             {"obstacle_sharpness", p.obstacle_sharpness},
                             {"w2_above_min", p.w2_above_min},
                             {"w2_above_max", p.w2_above_max}};
          doc["target"] = {{"q_d", vector_json<kStateDim>(p.q_d)}, {"rho", p.rho}};
        }
      },
      cfg.builder);
  doc["solver"] = solver_json(cfg.solver);
  doc["output"] = {{"emit", emit_json(emit)}};
  return doc;
}

EmitFlags parse_emit_list(const std::string& list) {
  json arr = json::array();
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) arr.push_back(item);
  }
  EmitFlags e;
  read_emit(arr, e);
  return e;
}

}  // namespace qmt
