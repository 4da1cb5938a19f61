#include "nbhj/action.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nbhj/potential.hpp"

namespace nbhj {

double u_diff(const MassSystem& ms, const Vec& x, const Vec& delta,
              const ClusterPartition* part) {
  const int nb = ms.bodies();
  double acc = 0.0;
  for (int i = 0; i < nb; ++i) {
    for (int j = i + 1; j < nb; ++j) {
      if (part && part->block_of(i) != part->block_of(j)) continue;
      Eigen::VectorXd r = body(ms, x, i) - body(ms, x, j);
      Eigen::VectorXd dd = body(ms, delta, i) - body(ms, delta, j);
      const double s0 = r.norm();
      const double s1 = (r + dd).norm();
      if (s0 < 1e-300 || s1 < 1e-300)
        throw CollisionError(i, j, std::numeric_limits<double>::quiet_NaN(),
                             "u_diff: bodies coincide");
      // 1/s1 - 1/s0 = (s0^2 - s1^2) / (s0 s1 (s0 + s1)), no cancellation
      const double num = -(2.0 * r.dot(dd) + dd.squaredNorm());
      acc += ms.mass(i) * ms.mass(j) * num / (s0 * s1 * (s0 + s1));
    }
  }
  return acc;
}

namespace {

constexpr int kTailPanels = 128;

/// Shared quadrature for the frozen-phi tail over (T, infinity); *grad (size
/// ms.dof()) receives the derivative with respect to the frozen node phi_T.
double tail_quadrature(const ScenarioSpec& spec, const Vec& phi_T, double T, int panels,
                       Vec* grad) {
  if (phi_T.size() != spec.ms.dof()) throw ShapeError("tail_integral: size mismatch");
  const Vec shift = phi_T + spec.offset();
  const Vec& md = spec.ms.metric_diagonal();
  if (grad) grad->setZero(spec.ms.dof());
  // t = T/u^3, dt = -3T u^-4 du: integral = 3T int_0^1 f(T/u^3) u^-4 du
  double acc = 0.0;
  const double du = 1.0 / panels;
  for (int p = 0; p < panels; ++p) {
    for (int q = 0; q < 2; ++q) {
      const double u = (p + kGauss2Theta[q]) * du;
      const double t = T / (u * u * u);
      const double w = kGauss2Weight[q] * du / (u * u * u * u);
      const Vec m_r0dd = md.cwiseProduct(spec.r0_ddot(t));
      try {
        acc += w * (u_diff(spec.ms, spec.r0(t), shift) - m_r0dd.dot(phi_T));
        if (grad) *grad += (3.0 * T * w) * (u_gradient(spec.ms, spec.r0(t) + shift) - m_r0dd);
      } catch (CollisionError& err) {
        throw CollisionError(err.body_i, err.body_j, t, err.what());
      }
    }
  }
  return 3.0 * T * acc;
}

}  // namespace

ActionContext::ActionContext(ScenarioSpec spec, std::shared_ptr<const TimeMesh> mesh,
                             bool with_tail)
    : spec_(std::move(spec)), mesh_(std::move(mesh)), n_(spec_.ms.dof()), with_tail_(with_tail) {
  spec_.validate();
  offset_ = spec_.offset();
  qp_.reserve(static_cast<size_t>(2 * mesh_->elements()));
  const Vec& md = spec_.ms.metric_diagonal();
  for (int e = 0; e < mesh_->elements(); ++e) {
    const double h = mesh_->h(e);
    for (int q = 0; q < 2; ++q) {
      QuadPoint p;
      p.e = e;
      p.theta = kGauss2Theta[q];
      p.t = mesh_->node(e) + p.theta * h;
      p.w = kGauss2Weight[q] * h;
      p.r0 = spec_.r0(p.t);
      p.m_r0dd = md.cwiseProduct(spec_.r0_ddot(p.t));
      qp_.push_back(std::move(p));
    }
  }
}

double ActionContext::integrand(const QuadPoint& qp, const Vec& phi_q) const {
  try {
    return u_diff(spec_.ms, qp.r0, phi_q + offset_) - qp.m_r0dd.dot(phi_q);
  } catch (CollisionError& err) {
    throw CollisionError(err.body_i, err.body_j, qp.t, err.what());
  }
}

double ActionContext::eval(const Vec& phi, Vec* grad) const {
  if (phi.size() != dof()) throw ShapeError("ActionContext::eval: size mismatch");
  const Vec& md = spec_.ms.metric_diagonal();
  if (grad) grad->setZero(dof());
  PathField f = field(phi);

  double value = 0.0;
  for (int e = 0; e < mesh_->elements(); ++e) {
    const Vec d = f.at_node(e + 1) - f.at_node(e);
    const Vec md_d = md.cwiseProduct(d) / mesh_->h(e);
    value += 0.5 * d.dot(md_d);
    if (grad) {
      if (e >= 1) grad->segment((e - 1) * n_, n_) -= md_d;
      grad->segment(e * n_, n_) += md_d;
    }
  }
  for (const QuadPoint& qp : qp_) {
    const Vec phi_q = (1.0 - qp.theta) * f.at_node(qp.e) + qp.theta * f.at_node(qp.e + 1);
    value += qp.w * integrand(qp, phi_q);
    if (grad) {
      Vec g;
      try {
        g = u_gradient(spec_.ms, qp.r0 + phi_q + offset_) - qp.m_r0dd;
      } catch (CollisionError& err) {
        throw CollisionError(err.body_i, err.body_j, qp.t, err.what());
      }
      if (qp.e >= 1) grad->segment((qp.e - 1) * n_, n_) += qp.w * (1.0 - qp.theta) * g;
      grad->segment(qp.e * n_, n_) += qp.w * qp.theta * g;
    }
  }
  if (with_tail_) {
    const int K = mesh_->elements();
    Vec tg;
    value += tail_quadrature(spec_, f.at_node(K), mesh_->t_end(), kTailPanels,
                             grad ? &tg : nullptr);
    if (grad) grad->segment((K - 1) * n_, n_) += tg;
  }
  return value;
}

void ActionContext::hessian_apply(const Vec& phi, const Vec& psi, Vec& out) const {
  // The tail block (int_T^inf of the frozen-path Hessian of U, acting on the
  // last node) is O(T^-1) against a kinetic diagonal of O(K/T) and is omitted;
  // Newton-CG directions stay descent directions and the line search absorbs
  // the inexactness.
  if (phi.size() != dof() || psi.size() != dof())
    throw ShapeError("ActionContext::hessian_apply: size mismatch");
  const Vec& md = spec_.ms.metric_diagonal();
  out.setZero(dof());
  PathField f = field(phi);
  PathField g = field(psi);

  for (int e = 0; e < mesh_->elements(); ++e) {
    const Vec d = g.at_node(e + 1) - g.at_node(e);
    const Vec md_d = md.cwiseProduct(d) / mesh_->h(e);
    if (e >= 1) out.segment((e - 1) * n_, n_) -= md_d;
    out.segment(e * n_, n_) += md_d;
  }
  for (const QuadPoint& qp : qp_) {
    const Vec phi_q = (1.0 - qp.theta) * f.at_node(qp.e) + qp.theta * f.at_node(qp.e + 1);
    const Vec psi_q = (1.0 - qp.theta) * g.at_node(qp.e) + qp.theta * g.at_node(qp.e + 1);
    Vec hp;
    try {
      hp = u_hessian_apply(spec_.ms, qp.r0 + phi_q + offset_, psi_q);
    } catch (CollisionError& err) {
      throw CollisionError(err.body_i, err.body_j, qp.t, err.what());
    }
    if (qp.e >= 1) out.segment((qp.e - 1) * n_, n_) += qp.w * (1.0 - qp.theta) * hp;
    out.segment(qp.e * n_, n_) += qp.w * qp.theta * hp;
  }
}

double ActionContext::dnorm2(const Vec& phi) const { return field(phi).dnorm2(spec_.ms); }

StructureSplit ActionContext::structure_split(const Vec& phi) const {
  StructureSplit out;
  out.q = 0.5 * dnorm2(phi);
  if (spec_.kind != MotionClass::Hyperbolic) {
    // parabolic classes keep the clustered Hessian of U along the scaling
    // part of the reference path inside the quadratic form
    PathField f = field(phi);
    for (const QuadPoint& qp : qp_) {
      const Vec phi_q = (1.0 - qp.theta) * f.at_node(qp.e) + qp.theta * f.at_node(qp.e + 1);
      const Vec point = spec_.scaled_bm * std::cbrt(qp.t * qp.t);
      out.q += 0.5 * qp.w * phi_q.dot(u_hessian_apply(spec_.ms, point, phi_q, &spec_.clusters));
    }
  }
  out.p = eval(phi) - out.q;
  return out;
}

double ActionContext::tail_bound(const Vec& phi) const {
  const double beta = spec_.kind == MotionClass::Hyperbolic ? 1.5 : 7.0 / 6.0;
  const double T = mesh_->t_end();
  const double t_lo = std::max(mesh_->t_begin(), T / 10.0);
  PathField f = field(phi);
  double c = 0.0;
  for (const QuadPoint& qp : qp_) {
    if (qp.t < t_lo) continue;
    const Vec phi_q = (1.0 - qp.theta) * f.at_node(qp.e) + qp.theta * f.at_node(qp.e + 1);
    c = std::max(c, std::abs(integrand(qp, phi_q)) * std::pow(qp.t, beta));
  }
  return c * std::pow(T, 1.0 - beta) / (beta - 1.0);
}

PathField ActionContext::field(const Vec& phi) const {
  PathField f;
  f.mesh = mesh_;
  f.n = n_;
  f.values = phi;
  return f;
}

double tail_integral(const ScenarioSpec& spec, const Vec& phi_T, double T, int panels) {
  return tail_quadrature(spec, phi_T, T, panels, nullptr);
}

}  // namespace nbhj
