#pragma once

#include <random>

#include "nbhj/central_config.hpp"
#include "nbhj/model.hpp"
#include "nbhj/reference_path.hpp"

namespace nbhj::testutil {

inline Vec flat(std::initializer_list<double> xs) {
  Vec v(static_cast<int>(xs.size()));
  int i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

/// Random configuration with zero barycenter, bounded away from collisions.
inline Vec random_config(const MassSystem& ms, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  for (;;) {
    Vec raw(ms.dof());
    for (int i = 0; i < ms.dof(); ++i) raw[i] = g(rng);
    Vec x = project_com(ms, raw);
    if (min_separation(ms, x) > 0.2 * scale) return x;
  }
}

/// Random direction with zero barycenter, unit Euclidean norm.
inline Vec random_direction(const MassSystem& ms, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vec raw(ms.dof());
  for (int i = 0; i < ms.dof(); ++i) raw[i] = g(rng);
  Vec z = project_com(ms, raw);
  return z / z.norm();
}

inline MassSystem two_equal() { return MassSystem(2, {1.0, 1.0}); }

inline ScenarioSpec hyperbolic_twobody() {
  MassSystem ms = two_equal();
  Vec a = flat({1.0, 0.0, -1.0, 0.0});
  return make_hyperbolic(ms, a, a);
}

inline CentralConfigResult twobody_cc() {
  MassSystem ms = two_equal();
  CentralConfigOptions opts;
  opts.restarts = 8;
  return find_minimal_central(ms, flat({1.0, 0.3, -1.0, -0.3}), opts);
}

inline ScenarioSpec parabolic_homothetic() {
  MassSystem ms = two_equal();
  CentralConfigResult cc = twobody_cc();
  return make_parabolic(ms, cc.beta * cc.b_m, cc);
}

inline ScenarioSpec hp_threebody() {
  MassSystem ms(2, {1.0, 1.0, 1.0});
  Vec a = flat({1.0, 0.0, 1.0, 0.0, -2.0, 0.0});
  Vec x0 = flat({1.0, 1.0, 1.0, -1.0, -2.0, 0.0});
  ClusterPartition part = cluster_from_velocity(ms, a);
  ClusteredCentralConfig ccc = find_minimal_clustered(ms, part, x0);
  return make_hyperbolic_parabolic(ms, a, x0, ccc);
}

}  // namespace nbhj::testutil
