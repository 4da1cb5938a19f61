#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "nbhj/scenario_io.hpp"
#include "test_util.hpp"

using namespace nbhj;

namespace {

const char* kHyperbolic = R"({
  "schema_version": 1,
  "kind": "hyperbolic",
  "dim": 2,
  "masses": [1.0, 1.0],
  "a": [[1.0, 0.0], [-1.0, 0.0]],
  "x0": [[1.0, 0.5], [-1.0, -0.5]],
  "solver": {"t_initial": 50.0, "seed": 7, "restarts": 5}
})";

std::string slurp(const std::string& path) {
  std::ifstream is(path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE_BEGIN("scenario_io");

TEST_CASE("parse a minimal hyperbolic scenario") {
  ScenarioFile sf = parse_scenario(kHyperbolic);
  CHECK(sf.spec.kind == MotionClass::Hyperbolic);
  CHECK(sf.spec.ms.bodies() == 2);
  CHECK(sf.spec.ms.dim() == 2);
  CHECK(sf.spec.a[0] == 1.0);
  CHECK(sf.spec.clusters.is_discrete());
  CHECK(sf.minimize.t_initial == 50.0);
  CHECK(sf.minimize.seed == 7);
  CHECK(sf.minimize.restarts == 5);
  CHECK(!sf.content_hash.empty());
  // hash depends only on content
  CHECK(parse_scenario(kHyperbolic).content_hash == sf.content_hash);
}

TEST_CASE("validation errors carry field context") {
  CHECK_THROWS_AS(parse_scenario("not json"), ShapeError);
  CHECK_THROWS_AS(parse_scenario("[1,2]"), ShapeError);
  CHECK_THROWS_AS(parse_scenario(R"({"schema_version": 2})"), ShapeError);

  Json j = Json::parse(kHyperbolic);
  {
    Json bad = j;
    bad["dim"] = 1;
    CHECK_THROWS_AS(parse_scenario(bad.dump()), ShapeError);
  }
  {
    Json bad = j;
    bad["a"] = Json::array({Json::array({1.0, 0.0}), Json::array({1.0, 0.0})});
    CHECK_THROWS_WITH_AS(parse_scenario(bad.dump()),
                         doctest::Contains("collision"), ShapeError);
  }
  {
    Json bad = j;
    bad["kind"] = "parabolic";
    CHECK_THROWS_AS(parse_scenario(bad.dump()), ShapeError);  // a != 0
  }
  {
    Json bad = j;
    bad["kind"] = "hyperbolic_parabolic";
    CHECK_THROWS_AS(parse_scenario(bad.dump()), ShapeError);  // a all distinct
  }
  {
    Json bad = j;
    bad["x0"] = Json::array({Json::array({1.0, 0.0})});
    CHECK_THROWS_AS(parse_scenario(bad.dump()), ShapeError);  // one row per body
  }
}

TEST_CASE("parabolic scenarios fill the central configuration") {
  Json j{{"schema_version", 1},
         {"kind", "parabolic"},
         {"dim", 2},
         {"masses", Json::array({1.0, 1.0})},
         {"x0", Json::array({Json::array({1.0, 0.0}), Json::array({-1.0, 0.0})})}};
  ScenarioFile sf = parse_scenario(j.dump());
  CHECK(sf.spec.kind == MotionClass::Parabolic);
  CHECK(sf.spec.a.norm() == 0.0);
  CHECK(std::abs(mass_norm(sf.spec.ms, sf.spec.scaled_bm) -
                 std::cbrt(4.5 / std::sqrt(2.0))) <= 1e-8);
}

TEST_CASE("fnv1a hash") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") != fnv1a_hex("b"));
}

TEST_CASE("vector and configuration serialization round-trips") {
  ScenarioFile sf = parse_scenario(kHyperbolic);
  Json jx = bodies_json(sf.spec.ms, sf.spec.x0);
  Vec back = parse_configuration(sf.spec.ms, jx, "x0");
  CHECK(back == sf.spec.x0);

  Json js = scenario_json(sf);
  CHECK(js["content_hash"] == sf.content_hash);
}

TEST_CASE("save_result is deterministic") {
  Json bundle{{"alpha", 0.1 + 0.2}, {"list", Json::array({1.0, 2.5})},
              {"empty", Json::array()}};
  const std::string p1 = "/tmp/nbhj_io_test_1.json";
  const std::string p2 = "/tmp/nbhj_io_test_2.json";
  save_result(p1, bundle);
  save_result(p2, bundle);
  const std::string s1 = slurp(p1);
  CHECK(s1 == slurp(p2));
  CHECK(Json::parse(s1)["alpha"].get<double>() == 0.1 + 0.2);  // lossless doubles
  std::remove(p1.c_str());
  std::remove(p2.c_str());
}

TEST_CASE("slice parsing") {
  ScenarioFile sf = parse_scenario(kHyperbolic);
  Json j{{"center", Json::array({Json::array({-1.0, 0.0}), Json::array({1.0, 0.0})})},
         {"e1", Json::array({Json::array({0.5, 0.0}), Json::array({-0.5, 0.0})})},
         {"e2", Json::array({Json::array({0.0, 0.5}), Json::array({0.0, -0.5})})},
         {"s1_min", -0.5}, {"s1_max", 0.5}, {"n1", 5},
         {"s2_min", -0.5}, {"s2_max", 0.5}, {"n2", 5}};
  GridSlice g = parse_slice(sf.spec.ms, j);
  CHECK(g.n1 == 5);
  CHECK(g.n2 == 5);
  CHECK(g.e1[0] == 0.5);
  Json bad = j;
  bad["n1"] = -2;
  CHECK_THROWS_AS(parse_slice(sf.spec.ms, bad), ShapeError);
}

TEST_SUITE_END();
