#include "nbhj/reference_path.hpp"

#include <cmath>

namespace nbhj {

std::string to_string(MotionClass k) {
  switch (k) {
    case MotionClass::Hyperbolic: return "hyperbolic";
    case MotionClass::Parabolic: return "parabolic";
    case MotionClass::HyperbolicParabolic: return "hyperbolic_parabolic";
  }
  return "?";
}

void ScenarioSpec::validate() const {
  const int n = ms.dof();
  if (a.size() != n || scaled_bm.size() != n || x0.size() != n)
    throw ShapeError("ScenarioSpec: field sizes do not match the mass system");
  if (!has_zero_barycenter(ms, a) || !has_zero_barycenter(ms, x0) ||
      !has_zero_barycenter(ms, scaled_bm))
    throw ShapeError("ScenarioSpec: fields must have zero mass barycenter");
  switch (kind) {
    case MotionClass::Hyperbolic:
      if (collision_distance(ms, a) <= 0.0)
        throw ShapeError("hyperbolic scenario requires a collision-free asymptotic velocity");
      if (scaled_bm.norm() != 0.0)
        throw ShapeError("hyperbolic scenario must have no parabolic component");
      break;
    case MotionClass::Parabolic:
      if (a.norm() != 0.0) throw ShapeError("parabolic scenario requires a = 0");
      if (collision_distance(ms, scaled_bm) <= 0.0)
        throw ShapeError("parabolic scenario requires a collision-free central configuration");
      break;
    case MotionClass::HyperbolicParabolic:
      if (a.norm() == 0.0)
        throw ShapeError("hyperbolic-parabolic scenario requires a != 0");
      if (collision_distance(ms, a) > 0.0)
        throw ShapeError("hyperbolic-parabolic scenario requires a in the collision set");
      break;
  }
}

Vec ScenarioSpec::r0(double t) const { return a * t + scaled_bm * std::cbrt(t * t); }

Vec ScenarioSpec::r0_dot(double t) const {
  return a + (2.0 / 3.0) * scaled_bm * std::pow(t, -1.0 / 3.0);
}

Vec ScenarioSpec::r0_ddot(double t) const {
  return (-2.0 / 9.0) * scaled_bm * std::pow(t, -4.0 / 3.0);
}

double ScenarioSpec::asymptotic_energy() const { return 0.5 * mass_inner(ms, a, a); }

RefPathSample sample_ref(const ScenarioSpec& spec, double t) {
  if (t < 1.0 - spec.eps_back)
    throw std::range_error("sample_ref: t below the backward extension window");
  return RefPathSample{spec.r0(t), spec.r0_dot(t), spec.r0_ddot(t)};
}

ScenarioSpec make_hyperbolic(const MassSystem& ms, const Vec& a, const Vec& x0) {
  ScenarioSpec s{MotionClass::Hyperbolic, ms, a, Vec::Zero(ms.dof()), x0,
                 cluster_from_velocity(ms, a, 0.0)};
  s.validate();
  return s;
}

ScenarioSpec make_parabolic(const MassSystem& ms, const Vec& x0, const CentralConfigResult& cc) {
  ScenarioSpec s{MotionClass::Parabolic, ms, Vec::Zero(ms.dof()), cc.beta * cc.b_m, x0,
                 ClusterPartition{{[&] {
                   std::vector<int> all(static_cast<size_t>(ms.bodies()));
                   for (int i = 0; i < ms.bodies(); ++i) all[static_cast<size_t>(i)] = i;
                   return all;
                 }()}}};
  s.validate();
  return s;
}

ScenarioSpec make_hyperbolic_parabolic(const MassSystem& ms, const Vec& a, const Vec& x0,
                                       const ClusteredCentralConfig& ccc, double cluster_tol) {
  ScenarioSpec s{MotionClass::HyperbolicParabolic, ms, a, ccc.embedded_scaled, x0,
                 cluster_from_velocity(ms, a, cluster_tol)};
  s.validate();
  return s;
}

}  // namespace nbhj
