#pragma once

#include <memory>
#include <vector>

#include "nbhj/mesh.hpp"
#include "nbhj/model.hpp"
#include "nbhj/reference_path.hpp"

namespace nbhj {

/// Q/P decomposition of the renormalized action: q is the coercive quadratic
/// part (class-dependent), p = value - q the remainder.
struct StructureSplit {
  double q = 0.0;
  double p = 0.0;
};

/// Discretized renormalized action on a graded mesh.
///
/// Paths are gamma(t) = r0(t) + phi(t) + (x0 - r0(1)) with phi piecewise
/// linear and phi(1) = 0. The kinetic term is integrated exactly per element;
/// the renormalized potential term
///     U(gamma) - U(r0) - <M r0dd, phi>
/// uses a two-point Gauss rule. The gradient is the exact adjoint of the
/// discrete value, so finite-difference checks hold to quadrature precision.
class ActionContext {
 public:
  /// with_tail adds the frozen-phi tail integral over (T, infinity) to the
  /// value and gradient. Minimizing the combined functional replaces the free
  /// natural boundary condition phi_dot(T) = 0 by the asymptotically correct
  /// decay, which removes the leading finite-horizon bias from the terminal
  /// velocity (and hence from energy and gamma_dot(1)).
  ActionContext(ScenarioSpec spec, std::shared_ptr<const TimeMesh> mesh, bool with_tail = true);

  const ScenarioSpec& scenario() const { return spec_; }
  const std::shared_ptr<const TimeMesh>& mesh() const { return mesh_; }
  int dof() const { return mesh_->elements() * n_; }
  int node_dof() const { return n_; }

  /// Action value; fills *grad (size dof()) when non-null.
  /// Throws CollisionError (with the quadrature time) on collision.
  double eval(const Vec& phi, Vec* grad = nullptr) const;

  /// out = Hessian of the discrete action at phi applied to psi.
  void hessian_apply(const Vec& phi, const Vec& psi, Vec& out) const;

  double dnorm2(const Vec& phi) const;
  StructureSplit structure_split(const Vec& phi) const;

  /// Bound on the neglected potential tail over (T, infinity):
  /// fits C from |f(t)| t^beta on the last decade of quadrature points and
  /// returns C T^(1-beta)/(beta-1) with beta = 3/2 (hyperbolic) or 7/6.
  double tail_bound(const Vec& phi) const;

  PathField field(const Vec& phi) const;

 private:
  struct QuadPoint {
    int e;             // element
    double t, w, theta;
    Vec r0;            // reference path at t
    Vec m_r0dd;        // M r0dd(t)
  };

  double integrand(const QuadPoint& qp, const Vec& phi_q) const;

  ScenarioSpec spec_;
  std::shared_ptr<const TimeMesh> mesh_;
  int n_;
  bool with_tail_;
  Vec offset_;  // x0 - r0(1)
  std::vector<QuadPoint> qp_;
};

/// U(x + delta) - U(x), organized to avoid cancellation when the difference
/// is much smaller than either value. Optional partition as in u_value.
double u_diff(const MassSystem& ms, const Vec& x, const Vec& delta,
              const ClusterPartition* part = nullptr);

/// Tail of the renormalized potential integral over (T, infinity) with phi
/// frozen at phi_T. Substituting t = T/u^3 makes the integrand smooth in u,
/// then a composite Gauss rule on (0, 1] converges fast.
double tail_integral(const ScenarioSpec& spec, const Vec& phi_T, double T, int panels = 128);

}  // namespace nbhj
