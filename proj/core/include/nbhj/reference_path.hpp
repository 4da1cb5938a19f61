#pragma once

#include <optional>
#include <string>

#include "nbhj/central_config.hpp"
#include "nbhj/model.hpp"

namespace nbhj {

enum class MotionClass { Hyperbolic, Parabolic, HyperbolicParabolic };

std::string to_string(MotionClass k);

/// One expansive-motion problem instance: the reference path
///   r0(t) = a t + c t^{2/3}
/// (a = 0 in the parabolic class, c = 0 in the hyperbolic class,
/// c = sum_K beta_K b^K embedded in the hyperbolic-parabolic class)
/// together with the initial configuration x0 at t = 1.
struct ScenarioSpec {
  MotionClass kind = MotionClass::Hyperbolic;
  MassSystem ms;
  Vec a;          // asymptotic velocity, flat dof
  Vec scaled_bm;  // c above: beta * b_m, or per-cluster beta_K b^K embedded
  Vec x0;         // initial configuration at t = 1
  ClusterPartition clusters;  // velocity clusters (trivial for P, discrete for H)
  double eps_back = 0.5;      // backward extension window (1 - eps_back, 1]

  /// Checks the class invariants (a in/out of Delta, barycenters, shapes).
  void validate() const;

  Vec r0(double t) const;
  Vec r0_dot(double t) const;
  Vec r0_ddot(double t) const;

  /// Energy level h = 1/2 <M a, a> of the associated HJ equation.
  double asymptotic_energy() const;

  /// x0 - r0(1): the constant offset in gamma = r0 + phi + x0 - r0(1).
  Vec offset() const { return x0 - r0(1.0); }
};

struct RefPathSample {
  Vec r0, r0_dot, r0_ddot;
};

RefPathSample sample_ref(const ScenarioSpec& spec, double t);

/// Convenience constructors; the central configuration layer fills scaled_bm.
ScenarioSpec make_hyperbolic(const MassSystem& ms, const Vec& a, const Vec& x0);
ScenarioSpec make_parabolic(const MassSystem& ms, const Vec& x0,
                            const CentralConfigResult& cc);
ScenarioSpec make_hyperbolic_parabolic(const MassSystem& ms, const Vec& a, const Vec& x0,
                                       const ClusteredCentralConfig& ccc,
                                       double cluster_tol = 0.0);

}  // namespace nbhj
