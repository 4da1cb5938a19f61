#include "nbhj/scenario_io.hpp"

#include <fstream>
#include <sstream>

#include "nbhj/central_config.hpp"

namespace nbhj {

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Json vec_json(const Vec& v) {
  Json a = Json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Json bodies_json(const MassSystem& ms, const Vec& flat) {
  Json a = Json::array();
  for (int i = 0; i < ms.bodies(); ++i) {
    Json row = Json::array();
    for (int c = 0; c < ms.dim(); ++c) row.push_back(flat[i * ms.dim() + c]);
    a.push_back(std::move(row));
  }
  return a;
}

Vec parse_configuration(const MassSystem& ms, const Json& j, const std::string& field) {
  Vec out(ms.dof());
  if (!j.is_array()) throw ShapeError("scenario." + field + ": expected an array");
  if (!j.empty() && j.front().is_array()) {
    if (static_cast<int>(j.size()) != ms.bodies())
      throw ShapeError("scenario." + field + ": expected one row per body");
    for (int i = 0; i < ms.bodies(); ++i) {
      const Json& row = j[static_cast<size_t>(i)];
      if (static_cast<int>(row.size()) != ms.dim())
        throw ShapeError("scenario." + field + ": row length must equal dim");
      for (int c = 0; c < ms.dim(); ++c) out[i * ms.dim() + c] = row[static_cast<size_t>(c)];
    }
  } else {
    if (static_cast<int>(j.size()) != ms.dof())
      throw ShapeError("scenario." + field + ": expected dim*N entries");
    for (int i = 0; i < ms.dof(); ++i) out[i] = j[static_cast<size_t>(i)];
  }
  return out;
}

namespace {

MinimizeOptions parse_solver(const Json& j) {
  MinimizeOptions o;
  if (j.is_null()) return o;
  o.nodes_per_decade = j.value("nodes_per_decade", o.nodes_per_decade);
  o.min_elements = j.value("min_elements", o.min_elements);
  o.t_initial = j.value("t_initial", o.t_initial);
  o.t_max = j.value("t_max", o.t_max);
  o.tol_grad = j.value("tol_grad", o.tol_grad);
  o.tol_horizon = j.value("tol_horizon", o.tol_horizon);
  o.restarts = j.value("restarts", o.restarts);
  o.perturb_sigma = j.value("perturb_sigma", o.perturb_sigma);
  o.seed = j.value("seed", o.seed);
  o.threads = j.value("threads", o.threads);
  o.polish = j.value("polish", o.polish);
  o.max_doublings = j.value("max_doublings", o.max_doublings);
  return o;
}

}  // namespace

ScenarioFile parse_scenario(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    throw ShapeError(std::string("scenario: not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ShapeError("scenario: top level must be an object");
  if (j.value("schema_version", -1) != 1)
    throw ShapeError("scenario.schema_version: expected 1");

  const int dim = j.value("dim", 0);
  if (dim < 2) throw ShapeError("scenario.dim: expected an integer >= 2");
  if (!j.contains("masses") || !j["masses"].is_array())
    throw ShapeError("scenario.masses: expected an array of positive reals");
  std::vector<double> masses = j["masses"].get<std::vector<double>>();
  MassSystem ms(dim, std::move(masses));

  const std::string kind = j.value("kind", "");
  MinimizeOptions minimize = parse_solver(j.contains("solver") ? j["solver"] : Json());
  std::string hash = fnv1a_hex(j.dump());

  const Vec x0 = project_com(
      ms, parse_configuration(ms, j.contains("x0") ? j["x0"] : Json::array(), "x0"));
  Vec a = Vec::Zero(ms.dof());
  if (j.contains("a")) a = project_com(ms, parse_configuration(ms, j["a"], "a"));

  Vec bm_seed;
  if (j.contains("b_m")) bm_seed = parse_configuration(ms, j["b_m"], "b_m");
  CentralConfigOptions cc;
  cc.seed = minimize.seed;
  cc.threads = minimize.threads;

  auto build = [&]() -> ScenarioSpec {
    if (kind == "hyperbolic") {
      if (collision_distance(ms, a) <= 0.0)
        throw ShapeError("scenario.a: hyperbolic motion requires a collision-free asymptotic "
                         "velocity (a not in the collision set)");
      return make_hyperbolic(ms, a, x0);
    }
    if (kind == "parabolic") {
      if (a.norm() != 0.0) throw ShapeError("scenario.a: parabolic motion requires a = 0");
      return make_parabolic(ms, x0, find_minimal_central(ms, bm_seed, cc));
    }
    if (kind == "hyperbolic_parabolic") {
      if (a.norm() == 0.0)
        throw ShapeError("scenario.a: hyperbolic-parabolic motion requires a != 0");
      if (collision_distance(ms, a) > 0.0)
        throw ShapeError("scenario.a: hyperbolic-parabolic motion requires a collision "
                         "configuration (some bodies share their asymptotic velocity)");
      const double tol = j.value("cluster_tol", 0.0);
      const ClusterPartition part = cluster_from_velocity(ms, a, tol);
      return make_hyperbolic_parabolic(ms, a, x0,
                                       find_minimal_clustered(ms, part, bm_seed, cc), tol);
    }
    throw ShapeError("scenario.kind: expected hyperbolic | parabolic | hyperbolic_parabolic");
  };
  return ScenarioFile{build(), minimize, std::move(hash), std::move(j)};
}

ScenarioFile load_scenario(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open scenario file: " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_scenario(ss.str());
}

void save_result(const std::string& path, const Json& bundle) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open output file: " + path);
  os << bundle.dump(2) << "\n";
  if (!os) throw std::runtime_error("write failed: " + path);
}

Json scenario_json(const ScenarioFile& sf) {
  return Json{{"content_hash", sf.content_hash},
              {"kind", to_string(sf.spec.kind)},
              {"dim", sf.spec.ms.dim()},
              {"masses", sf.spec.ms.masses()},
              {"a", bodies_json(sf.spec.ms, sf.spec.a)},
              {"scaled_bm", bodies_json(sf.spec.ms, sf.spec.scaled_bm)},
              {"x0", bodies_json(sf.spec.ms, sf.spec.x0)}};
}

Json central_config_json(const CentralConfigResult& cc) {
  return Json{{"b_m", vec_json(cc.b_m)},
              {"u_min", cc.u_min},
              {"beta", cc.beta},
              {"kkt_residual", cc.kkt_residual},
              {"converged_restarts", cc.converged_restarts},
              {"value_spread", cc.value_spread}};
}

Json minimize_result_json(const ScenarioSpec& spec, const MinimizeResult& mr) {
  Json minima = Json::array();
  for (const auto& m : mr.minima)
    minima.push_back(Json{{"action", m.action}, {"grad_norm", m.grad_norm}});
  Json hist = Json::array();
  for (const auto& h : mr.horizon_history)
    hist.push_back(Json{{"T", h.T},
                        {"elements", h.elements},
                        {"action", h.action},
                        {"tail", h.tail},
                        {"corrected", h.corrected()}});
  return Json{{"kind", to_string(spec.kind)},
              {"action", mr.action},
              {"tail", mr.tail},
              {"corrected", mr.action + mr.tail},
              {"multiplicity", mr.multiplicity},
              {"horizon_converged", mr.horizon_converged},
              {"T", mr.mesh->t_end()},
              {"elements", mr.mesh->elements()},
              {"minima", std::move(minima)},
              {"horizon_history", std::move(hist)}};
}

Json value_result_json(const ValueResult& vr) {
  Json out{{"v", vr.v},
           {"v_T", vr.v_T},
           {"k", vr.k},
           {"T", vr.T},
           {"action", vr.action},
           {"tail", vr.tail},
           {"horizon_converged", vr.horizon_converged}};
  out["grad_v"] = vr.grad_v ? vec_json(*vr.grad_v) : Json();
  out["hj_residual"] = vr.hj_residual ? Json(*vr.hj_residual) : Json();
  out["lambda1"] = vr.lambda1 ? Json(*vr.lambda1) : Json();
  Json vels = Json::array();
  for (const auto& v : vr.initial_velocities) vels.push_back(vec_json(v));
  out["initial_velocities"] = std::move(vels);
  Json hist = Json::array();
  for (const auto& h : vr.horizon_history)
    hist.push_back(Json{{"T", h.T},
                        {"elements", h.elements},
                        {"action", h.action},
                        {"tail", h.tail},
                        {"corrected", h.corrected()}});
  out["horizon_history"] = std::move(hist);
  return out;
}

GridSlice parse_slice(const MassSystem& ms, const Json& j) {
  if (!j.is_object()) throw ShapeError("slice: top level must be an object");
  GridSlice g;
  g.center = parse_configuration(ms, j.contains("center") ? j["center"] : Json::array(), "center");
  g.e1 = parse_configuration(ms, j.contains("e1") ? j["e1"] : Json::array(), "e1");
  g.e2 = parse_configuration(ms, j.contains("e2") ? j["e2"] : Json::array(), "e2");
  g.s1_min = j.value("s1_min", g.s1_min);
  g.s1_max = j.value("s1_max", g.s1_max);
  g.s2_min = j.value("s2_min", g.s2_min);
  g.s2_max = j.value("s2_max", g.s2_max);
  g.n1 = j.value("n1", g.n1);
  g.n2 = j.value("n2", g.n2);
  if (g.n1 < 0 || g.n2 < 0) throw ShapeError("slice.n1/n2: expected nonnegative counts");
  return g;
}

}  // namespace nbhj
