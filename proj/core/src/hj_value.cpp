#include "nbhj/hj_value.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <random>

#include "nbhj/parallel.hpp"
#include "nbhj/potential.hpp"

namespace nbhj {

namespace {
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
}

ScenarioSpec with_x(const ScenarioSpec& spec, const Vec& x) {
  ScenarioSpec out = spec;
  out.x0 = project_com(spec.ms, x);
  out.validate();
  return out;
}

ValueResult value_at(const ScenarioSpec& spec, const ValueOptions& opts) {
  return value_from(spec, minimize_action(spec, opts.minimize), opts);
}

ValueResult value_from(const ScenarioSpec& spec, const MinimizeResult& mr,
                       const ValueOptions& opts) {
  const MassSystem& ms = spec.ms;

  ValueResult out;
  out.T = mr.mesh->t_end();
  out.action = mr.action;
  out.tail = mr.tail;
  out.k = mr.multiplicity;
  out.horizon_converged = mr.horizon_converged;
  out.horizon_history = mr.horizon_history;
  out.v = mr.value_corrected - mass_inner(ms, spec.a, spec.x0);
  out.v_T = mr.action - mass_inner(ms, spec.r0_dot(out.T), spec.x0);

  ActionContext ctx(spec, mr.mesh);
  Trajectory best;
  for (int i = 0; i < out.k && i < static_cast<int>(mr.minima.size()); ++i) {
    Trajectory tr = reconstruct(ctx, mr.minima[static_cast<size_t>(i)].phi);
    out.initial_velocities.push_back(tr.initial_velocity);
    if (i == 0) best = std::move(tr);
  }
  if (out.k == 1) {
    const Vec& v1 = out.initial_velocities.front();
    out.grad_v = -ms.metric_diagonal().cwiseProduct(v1);
    out.hj_residual =
        0.5 * mass_inner(ms, v1, v1) - u_value(ms, spec.x0) - spec.asymptotic_energy();
  }
  if (opts.want_lambda1) {
    SpectralOptions so = opts.spectral;
    so.t_max = std::min(so.t_max, out.T);
    auto sampler = std::make_shared<PathSampler>(ms, best, 1.0);
    out.lambda1 = lambda1(ms, hessian_along(ms, sampler), 1.0, so);
  }
  return out;
}

GradCheckReport grad_check(const ScenarioSpec& spec, double h_fd, int directions,
                           const ValueOptions& opts, const ValueResult* base_in) {
  ValueResult computed;
  if (!base_in) {
    computed = value_at(spec, opts);
    base_in = &computed;
  }
  const ValueResult& base = *base_in;
  GradCheckReport rep;
  if (base.k > 1 || !base.grad_v) {
    rep.differentiable = false;
    return rep;
  }
  rep.grad_v = *base.grad_v;

  // all finite-difference evaluations share the base point's horizon so that
  // the (smooth-in-x) discretization error cancels in the differences; one
  // restart suffices since the perturbed minimizers stay near the base one
  ValueOptions fd = opts;
  fd.want_lambda1 = false;
  fd.minimize.t_initial = base.T;
  fd.minimize.max_doublings = 0;
  fd.minimize.restarts = 1;

  std::mt19937_64 rng(opts.minimize.seed * 0x9e3779b97f4a7c15ULL + 0x5bd1e995ULL);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double scale = std::max(rep.grad_v.norm(), 1e-12);
  for (int k = 0; k < directions; ++k) {
    Vec e(spec.ms.dof());
    for (int i = 0; i < e.size(); ++i) e[i] = gauss(rng);
    e = project_com(spec.ms, e);
    e /= e.norm();
    const double vp = value_at(with_x(spec, spec.x0 + h_fd * e), fd).v;
    const double vm = value_at(with_x(spec, spec.x0 - h_fd * e), fd).v;
    const double fd_slope = (vp - vm) / (2.0 * h_fd);
    rep.max_rel_dev = std::max(rep.max_rel_dev, std::abs(fd_slope - rep.grad_v.dot(e)) / scale);
  }
  return rep;
}

BolzaReport bolza_u(const ScenarioSpec& spec, double T, const ValueOptions& opts) {
  const MassSystem& ms = spec.ms;
  const int n = ms.dof();
  BolzaReport rep;

  // fixed-horizon renormalized value
  ValueOptions fo = opts;
  fo.want_lambda1 = false;
  fo.minimize.t_initial = T;
  fo.minimize.max_doublings = 0;
  fo.minimize.with_tail = false;  // the identity lives at the finite horizon
  MinimizeResult mr = minimize_action(spec, fo.minimize);
  T = mr.mesh->t_end();  // the mesh snaps the horizon to a power of its ratio
  rep.v_T = mr.action - mass_inner(ms, spec.r0_dot(T), spec.x0);

  // direct Bolza problem on the same mesh: eta = x0 + psi, psi(1) = 0
  auto mesh = mr.mesh;
  const int K = mesh->elements();
  const Vec r0dT_m = ms.metric_diagonal().cwiseProduct(spec.r0_dot(T));
  Objective bolza = [&](const Vec& psi, Vec* grad) {
    if (grad) grad->setZero(psi.size());
    PathField f{mesh, n, psi};
    double val = -r0dT_m.dot(spec.x0 + f.at_node(K));
    if (grad) grad->segment((K - 1) * n, n) -= r0dT_m;
    for (int e = 0; e < K; ++e) {
      const double h = mesh->h(e);
      const Vec d = f.at_node(e + 1) - f.at_node(e);
      const Vec md_d = ms.metric_diagonal().cwiseProduct(d) / h;
      val += 0.5 * d.dot(md_d);
      if (grad) {
        if (e >= 1) grad->segment((e - 1) * n, n) -= md_d;
        grad->segment(e * n, n) += md_d;
      }
      for (int q = 0; q < 2; ++q) {
        const double theta = kGauss2Theta[q];
        const double w = kGauss2Weight[q] * h;
        const Vec eta = spec.x0 + (1.0 - theta) * f.at_node(e) + theta * f.at_node(e + 1);
        val += w * u_value(ms, eta);
        if (grad) {
          const Vec g = u_gradient(ms, eta);
          if (e >= 1) grad->segment((e - 1) * n, n) += w * (1.0 - theta) * g;
          grad->segment(e * n, n) += w * theta * g;
        }
      }
    }
    return val;
  };

  // warm start from the renormalized minimizer: psi = r0(t) - r0(1) + phi
  Vec psi(K * n);
  {
    PathField f{mesh, n, mr.minima.front().phi};
    for (int k = 1; k <= K; ++k)
      psi.segment((k - 1) * n, n) = spec.r0(mesh->node(k)) - spec.r0(1.0) + f.at_node(k);
  }
  SolverOptions so = fo.minimize.solver;
  so.tol_grad = fo.minimize.tol_grad;
  SolverReport sr = lbfgs(bolza, psi, so);
  rep.u = sr.value;

  // reference integral int_1^T 1/2|r0_dot|^2_M + U(r0) dt on a fine mesh
  {
    auto fine = TimeMesh::graded(T, 4096);
    double acc = 0.0;
    for (int e = 0; e < fine->elements(); ++e) {
      const double h = fine->h(e);
      for (int q = 0; q < 2; ++q) {
        const double t = fine->node(e) + kGauss2Theta[q] * h;
        const Vec rd = spec.r0_dot(t);
        acc += kGauss2Weight[q] * h * (0.5 * mass_inner(ms, rd, rd) + u_value(ms, spec.r0(t)));
      }
    }
    rep.reference_integral = acc;
  }

  const double rhs = rep.u - rep.reference_integral +
                     mass_inner(ms, spec.r0_dot(T), spec.r0(T) - spec.r0(1.0));
  rep.identity_residual = std::abs(rep.v_T - rhs) / (1.0 + std::abs(rep.v_T));

  // terminal transversality eta_dot(T) = r0_dot(T)
  {
    PathField f{mesh, n, psi};
    const Vec eta_k = spec.x0 + f.at_node(K);
    const Vec eta_p = spec.x0 + f.at_node(K - 1);
    const double h = mesh->h(K - 1);
    const Vec a_k = u_gradient(ms, eta_k).cwiseQuotient(ms.metric_diagonal());
    const Vec a_p = u_gradient(ms, eta_p).cwiseQuotient(ms.metric_diagonal());
    const Vec etadot = (eta_k - eta_p) / h + h * (a_p + 2.0 * a_k) / 6.0;
    rep.terminal_residual = (etadot - spec.r0_dot(T)).norm();
  }
  return rep;
}

double semiconcavity_probe(const MassSystem& ms, const std::function<double(const Vec&)>& value,
                           const Vec& x, const std::vector<Vec>& z_set) {
  double worst = -std::numeric_limits<double>::infinity();
  bool any = false;
  const double v0 = value(x);
  for (const Vec& z : z_set) {
    try {
      const double q = (value(x + z) + value(x - z) - 2.0 * v0) / mass_inner(ms, z, z);
      worst = std::max(worst, q);
      any = true;
    } catch (const std::exception&) {
      // probe hit the collision set; skip
    }
  }
  return any ? worst : kNan;
}

std::vector<ScanRecord> scan_grid(const ScenarioSpec& spec, const GridSlice& grid,
                                  const ValueOptions& opts, int threads) {
  const MassSystem& ms = spec.ms;
  const int total = grid.n1 * grid.n2;
  std::vector<ScanRecord> out(static_cast<size_t>(total));
  parallel_for(total, threads, [&](int idx) {
    ScanRecord& rec = out[static_cast<size_t>(idx)];
    rec.i = idx / grid.n2;
    rec.j = idx % grid.n2;
    const double s1 = grid.n1 > 1
                          ? grid.s1_min + (grid.s1_max - grid.s1_min) * rec.i / (grid.n1 - 1)
                          : grid.s1_min;
    const double s2 = grid.n2 > 1
                          ? grid.s2_min + (grid.s2_max - grid.s2_min) * rec.j / (grid.n2 - 1)
                          : grid.s2_min;
    rec.x = project_com(ms, grid.center + s1 * grid.e1 + s2 * grid.e2);
    rec.coll_dist = collision_distance(ms, rec.x);
    rec.v = rec.v_T = rec.lambda1 = rec.hj_residual = rec.grad_norm = kNan;
    if (rec.coll_dist < opts.r_min) {
      rec.status = "near_delta";
      return;
    }
    const auto tic = std::chrono::steady_clock::now();
    try {
      ValueOptions po = opts;
      po.minimize.threads = 1;  // the scan parallelizes over points
      ValueResult r = value_at(with_x(spec, rec.x), po);
      rec.v = r.v;
      rec.v_T = r.v_T;
      rec.k = r.k;
      if (r.lambda1) rec.lambda1 = *r.lambda1;
      if (r.hj_residual) rec.hj_residual = *r.hj_residual;
      if (r.grad_v) rec.grad_norm = r.grad_v->norm();
      rec.status = "ok";
    } catch (const std::exception& e) {
      std::string why = e.what();
      for (char& c : why)
        if (c == ',' || c == '\n') c = ';';
      rec.status = "error:" + why;
    }
    rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - tic).count();
  });
  return out;
}

void write_scan_csv(std::ostream& os, const MassSystem& ms, const std::vector<ScanRecord>& recs) {
  os << "i,j";
  for (int c = 0; c < ms.dof(); ++c) os << ",x" << c;
  os << ",v,vT,k,lambda1,hjres,gradnorm,colldist,status\n";
  char buf[40];
  auto put = [&](double x) {
    std::snprintf(buf, sizeof buf, "%.17g", x);
    os << buf;
  };
  for (const ScanRecord& r : recs) {
    os << r.i << "," << r.j;
    for (int c = 0; c < ms.dof(); ++c) {
      os << ",";
      put(r.x[c]);
    }
    os << ",";
    put(r.v);
    os << ",";
    put(r.v_T);
    os << "," << r.k << ",";
    put(r.lambda1);
    os << ",";
    put(r.hj_residual);
    os << ",";
    put(r.grad_norm);
    os << ",";
    put(r.coll_dist);
    os << "," << r.status << "\n";
  }
}

}  // namespace nbhj
