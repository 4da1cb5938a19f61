#include "nbhj/minimize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <random>

#include "nbhj/parallel.hpp"

namespace nbhj {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double safe_eval(const Objective& fn, const Vec& x, Vec* g) {
  try {
    return fn(x, g);
  } catch (const CollisionError&) {
    return kInf;
  }
}

struct LinePoint {
  double alpha = 0.0;
  double value = kInf;
  Vec x, g;
  bool has_grad = false;
};

/// Strong-Wolfe line search (bracket + bisection zoom). Collisions act as
/// +infinity, which simply shrinks the bracket.
bool wolfe_search(const Objective& fn, const Vec& x0, double f0, const Vec& g0, const Vec& p,
                  double alpha_init, double c1, double c2, LinePoint& out) {
  const double d0 = g0.dot(p);
  if (!(d0 < 0.0)) return false;

  LinePoint fallback;  // best Armijo point seen, in case curvature never holds
  auto probe = [&](double a) {
    LinePoint pt;
    pt.alpha = a;
    pt.x = x0 + a * p;
    pt.g.resize(x0.size());
    pt.value = safe_eval(fn, pt.x, &pt.g);
    pt.has_grad = std::isfinite(pt.value);
    if (pt.has_grad && pt.value <= f0 + c1 * a * d0 &&
        (fallback.alpha == 0.0 || pt.value < fallback.value))
      fallback = pt;
    return pt;
  };

  auto zoom = [&](double lo, double flo, double hi) -> bool {
    for (int it = 0; it < 60; ++it) {
      LinePoint pt = probe(0.5 * (lo + hi));
      if (!std::isfinite(pt.value) || pt.value > f0 + c1 * pt.alpha * d0 || pt.value >= flo) {
        hi = pt.alpha;
        continue;
      }
      const double d = pt.g.dot(p);
      if (std::abs(d) <= -c2 * d0) {
        out = pt;
        return true;
      }
      if (d * (hi - lo) >= 0.0) hi = lo;
      lo = pt.alpha;
      flo = pt.value;
    }
    if (fallback.alpha > 0.0) {
      out = fallback;
      return true;
    }
    return false;
  };

  double a_prev = 0.0, f_prev = f0;
  double a = alpha_init;
  for (int it = 0; it < 30; ++it) {
    LinePoint pt = probe(a);
    if (!std::isfinite(pt.value) || pt.value > f0 + c1 * a * d0 ||
        (it > 0 && pt.value >= f_prev))
      return zoom(a_prev, f_prev, a);
    const double d = pt.g.dot(p);
    if (std::abs(d) <= -c2 * d0) {
      out = pt;
      return true;
    }
    if (d >= 0.0) return zoom(a, pt.value, a_prev);
    a_prev = a;
    f_prev = pt.value;
    a = std::min(2.0 * a, 1e6);
  }
  if (fallback.alpha > 0.0) {
    out = fallback;
    return true;
  }
  return false;
}

}  // namespace

SolverReport lbfgs(const Objective& fn, Vec& x, const SolverOptions& opts) {
  const int n = static_cast<int>(x.size());
  SolverReport rep;
  Vec g(n);
  double f = safe_eval(fn, x, &g);
  if (!std::isfinite(f)) throw OptimizationError("lbfgs: infeasible starting point");

  std::vector<Vec> S, Y;
  std::vector<double> rho;
  double gamma = 1.0;

  for (int it = 0; it < opts.max_iters; ++it) {
    rep.iters = it;
    rep.value = f;
    rep.grad_norm = g.norm();
    if (rep.grad_norm <= opts.tol_grad) {
      rep.converged = true;
      return rep;
    }

    // two-loop recursion
    Vec q = g;
    const int m = static_cast<int>(S.size());
    std::vector<double> alpha(static_cast<size_t>(m));
    for (int i = m - 1; i >= 0; --i) {
      alpha[static_cast<size_t>(i)] = rho[static_cast<size_t>(i)] * S[static_cast<size_t>(i)].dot(q);
      q -= alpha[static_cast<size_t>(i)] * Y[static_cast<size_t>(i)];
    }
    q *= gamma;
    for (int i = 0; i < m; ++i) {
      const double beta = rho[static_cast<size_t>(i)] * Y[static_cast<size_t>(i)].dot(q);
      q += (alpha[static_cast<size_t>(i)] - beta) * S[static_cast<size_t>(i)];
    }
    Vec p = -q;
    if (!(g.dot(p) < 0.0)) {  // safeguard: reset to steepest descent
      p = -g;
      S.clear();
      Y.clear();
      rho.clear();
      gamma = 1.0;
    }

    const double a0 = (it == 0 && m == 0) ? std::min(1.0, 1.0 / std::max(1.0, rep.grad_norm)) : 1.0;
    LinePoint pt;
    if (!wolfe_search(fn, x, f, g, p, a0, opts.c1, opts.c2, pt)) {
      return rep;  // line search failed; report the current point
    }

    const Vec s = pt.x - x;
    const Vec y = pt.g - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      S.push_back(s);
      Y.push_back(y);
      rho.push_back(1.0 / sy);
      if (static_cast<int>(S.size()) > opts.memory) {
        S.erase(S.begin());
        Y.erase(Y.begin());
        rho.erase(rho.begin());
      }
      gamma = sy / y.squaredNorm();
    }
    x = pt.x;
    f = pt.value;
    g = pt.g;
  }
  rep.value = f;
  rep.grad_norm = g.norm();
  rep.converged = rep.grad_norm <= opts.tol_grad;
  return rep;
}

SolverReport newton_cg(const Objective& fn, const HessApply& hess, Vec& x,
                       const SolverOptions& opts) {
  const int n = static_cast<int>(x.size());
  SolverReport rep;
  Vec g(n);
  double f = safe_eval(fn, x, &g);
  if (!std::isfinite(f)) throw OptimizationError("newton_cg: infeasible starting point");

  for (int it = 0; it < opts.max_iters; ++it) {
    rep.iters = it;
    rep.value = f;
    rep.grad_norm = g.norm();
    if (rep.grad_norm <= opts.tol_grad) {
      rep.converged = true;
      return rep;
    }

    // truncated CG on H d = -g
    Vec d = Vec::Zero(n);
    Vec r = -g;
    Vec q = r;
    Vec hq(n);
    double rr = r.squaredNorm();
    const double forcing = std::min(0.5, std::sqrt(rep.grad_norm)) * rep.grad_norm;
    for (int j = 0; j < 2 * n + 10; ++j) {
      hess(x, q, hq);
      const double qhq = q.dot(hq);
      if (qhq <= 1e-14 * q.squaredNorm()) {
        if (j == 0) d = -g;  // negative curvature straight away
        break;
      }
      const double step = rr / qhq;
      d += step * q;
      r -= step * hq;
      const double rr_new = r.squaredNorm();
      if (std::sqrt(rr_new) <= forcing) break;
      q = r + (rr_new / rr) * q;
      rr = rr_new;
    }
    if (!(g.dot(d) < 0.0)) d = -g;

    LinePoint pt;
    if (!wolfe_search(fn, x, f, g, d, 1.0, opts.c1, opts.c2, pt)) return rep;
    x = pt.x;
    f = pt.value;
    g = pt.g;
  }
  rep.value = f;
  rep.grad_norm = g.norm();
  rep.converged = rep.grad_norm <= opts.tol_grad;
  return rep;
}

namespace {

bool trace_enabled() {
  static const bool on = std::getenv("NBHJ_TRACE") != nullptr;
  return on;
}

/// Smooth random perturbation: a few bounded modes 1 - t^{-j/2} (zero at t=1,
/// finite D-norm), Gaussian coefficients, zero barycenter at every node.
Vec perturbation(const ActionContext& ctx, std::uint64_t seed, int pair, double sigma) {
  constexpr int kModes = 4;
  std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(pair) * 0x100000001b3ULL + 7);
  std::normal_distribution<double> gauss(0.0, sigma);
  const int n = ctx.node_dof();
  Mat coef(n, kModes);
  for (int j = 0; j < kModes; ++j)
    for (int i = 0; i < n; ++i) coef(i, j) = gauss(rng);
  const auto& mesh = *ctx.mesh();
  Vec phi(ctx.dof());
  for (int k = 1; k <= mesh.elements(); ++k) {
    const double t = mesh.node(k);
    Vec node = Vec::Zero(n);
    for (int j = 0; j < kModes; ++j)
      node += (1.0 - std::pow(t, -0.5 * (j + 1))) * coef.col(j);
    phi.segment((k - 1) * n, n) = project_com(ctx.scenario().ms, node);
  }
  return phi;
}

LocalMinimum run_chain(const ActionContext& ctx, Vec x, const MinimizeOptions& opts) {
  Objective fn = [&ctx](const Vec& v, Vec* g) { return ctx.eval(v, g); };
  SolverOptions so = opts.solver;
  so.tol_grad = opts.tol_grad;
  if (opts.polish) so.max_iters = std::min(so.max_iters, 400);  // Newton finishes the job
  SolverReport rep = lbfgs(fn, x, so);
  if (opts.polish) {
    HessApply ha = [&ctx](const Vec& at, const Vec& v, Vec& out) {
      ctx.hessian_apply(at, v, out);
    };
    SolverOptions po = opts.solver;
    po.tol_grad = opts.tol_grad;
    po.max_iters = 60;
    rep = newton_cg(fn, ha, x, po);
  }
  return LocalMinimum{std::move(x), rep.value, rep.grad_norm};
}

}  // namespace

std::vector<LocalMinimum> distinct_minima(const ActionContext& ctx,
                                          std::vector<LocalMinimum> found, int* k,
                                          double rel_cluster, double rel_action) {
  std::sort(found.begin(), found.end(), [](const LocalMinimum& a, const LocalMinimum& b) {
    if (a.action != b.action) return a.action < b.action;
    return std::lexicographical_compare(a.phi.data(), a.phi.data() + a.phi.size(),
                                        b.phi.data(), b.phi.data() + b.phi.size());
  });
  std::vector<LocalMinimum> reps;
  for (auto& cand : found) {
    bool fresh = true;
    const double scale = std::max(1.0, std::sqrt(ctx.dnorm2(cand.phi)));
    for (const auto& r : reps) {
      if (std::sqrt(ctx.dnorm2(cand.phi - r.phi)) <= rel_cluster * scale) {
        fresh = false;
        break;
      }
    }
    if (fresh) reps.push_back(std::move(cand));
  }
  if (k) {
    *k = 0;
    if (!reps.empty()) {
      const double cut = reps.front().action + rel_action * (1.0 + std::abs(reps.front().action));
      for (const auto& r : reps)
        if (r.action <= cut) ++*k;
    }
  }
  return reps;
}

double horizon_exponent(MotionClass kind) {
  return kind == MotionClass::Hyperbolic ? 1.0 : 1.0 / 3.0;
}

double horizon_extrapolated(const std::vector<HorizonRecord>& history, size_t k, double p) {
  if (k >= history.size()) throw ShapeError("horizon_extrapolated: index out of range");
  std::vector<double> row(k + 1);
  for (size_t i = 0; i <= k; ++i) row[i] = history[i].corrected();
  const size_t depth = std::min<size_t>(k, 4);
  for (size_t m = 1; m <= depth; ++m) {
    const double f = 1.0 / (std::pow(2.0, static_cast<double>(m) * p) - 1.0);
    for (size_t i = k; i >= m; --i) row[i] += f * (row[i] - row[i - 1]);
  }
  return row[k];
}

MinimizeResult minimize_action(const ScenarioSpec& spec, const MinimizeOptions& opts) {
  spec.validate();
  MinimizeResult out;

  // Fixed-ratio geometric meshes with nodes 2^(j/E): horizon doubling appends
  // E elements to a nested mesh, so the discretization error on the shared
  // prefix cancels exactly in horizon differences and the tail-corrected
  // sequence stays clean enough for deep Richardson extrapolation.
  const int e_oct = std::max(4, static_cast<int>(std::lround(opts.nodes_per_decade *
                                                             std::log10(2.0))));
  int K = std::max(opts.min_elements,
                   static_cast<int>(std::ceil(e_oct * std::log2(opts.t_initial) - 1e-9)));
  double T = std::pow(2.0, static_cast<double>(K) / e_oct);
  auto mesh = TimeMesh::graded(T, K);
  ActionContext ctx(spec, mesh, opts.with_tail);

  // multistart on the initial horizon: zero seed plus mirrored random pairs
  const int pairs = std::max(0, (opts.restarts - 1) / 2);
  const int total = 1 + 2 * pairs;
  std::vector<LocalMinimum> found(static_cast<size_t>(total));
  std::vector<char> ok(static_cast<size_t>(total), 0);
  const double accept = std::max(1e3 * opts.tol_grad, 1e-7);
  parallel_for(total, opts.threads, [&](int r) {
    Vec x0 = Vec::Zero(ctx.dof());
    if (r > 0) {
      const int pair = (r - 1) / 2;
      const double sign = (r % 2 == 1) ? 1.0 : -1.0;
      x0 = sign * perturbation(ctx, opts.seed, pair, opts.perturb_sigma);
    }
    try {
      LocalMinimum lm = run_chain(ctx, std::move(x0), opts);
      ok[static_cast<size_t>(r)] = lm.grad_norm <= accept;
      found[static_cast<size_t>(r)] = std::move(lm);
    } catch (const OptimizationError&) {
      ok[static_cast<size_t>(r)] = 0;
    }
  });

  std::vector<LocalMinimum> converged;
  for (int r = 0; r < total; ++r) {
    if (trace_enabled())
      std::fprintf(stderr, "[minimize] T=%g K=%d restart %d: ok=%d f=%.12g |g|=%.3g\n", T,
                   mesh->elements(), r, static_cast<int>(ok[static_cast<size_t>(r)]),
                   found[static_cast<size_t>(r)].action, found[static_cast<size_t>(r)].grad_norm);
    if (ok[static_cast<size_t>(r)]) converged.push_back(std::move(found[static_cast<size_t>(r)]));
  }
  if (converged.empty()) throw OptimizationError("minimize_action: no restart converged");

  int k = 0;
  std::vector<LocalMinimum> reps = distinct_minima(ctx, std::move(converged), &k);

  auto record = [&](const ActionContext& c, const std::vector<LocalMinimum>& r) {
    HorizonRecord h;
    h.T = c.mesh()->t_end();
    h.elements = c.mesh()->elements();
    h.tail = tail_integral(spec, c.field(r.front().phi).at_node(c.mesh()->elements()), h.T);
    // r.front().action is the minimized objective; keep h.action the plain
    // discrete action on [1, T] so corrected() = action + tail either way
    h.action = r.front().action - (opts.with_tail ? h.tail : 0.0);
    return h;
  };
  out.horizon_history.push_back(record(ctx, reps));

  const double p = horizon_exponent(spec.kind);
  for (int round = 0; round < opts.max_doublings; ++round) {
    if (2.0 * T > opts.t_max) break;
    const double prev = horizon_extrapolated(out.horizon_history, out.horizon_history.size() - 1, p);
    K += e_oct;
    T = std::pow(2.0, static_cast<double>(K) / e_oct);
    auto mesh2 = TimeMesh::graded(T, K);
    ActionContext ctx2(spec, mesh2, opts.with_tail);

    std::vector<LocalMinimum> warm(reps.size());
    std::vector<char> wok(reps.size(), 0);
    parallel_for(static_cast<int>(reps.size()), opts.threads, [&](int i) {
      PathField f = transfer_field(ctx.field(reps[static_cast<size_t>(i)].phi), mesh2);
      try {
        LocalMinimum lm = run_chain(ctx2, std::move(f.values), opts);
        wok[static_cast<size_t>(i)] = lm.grad_norm <= accept;
        warm[static_cast<size_t>(i)] = std::move(lm);
      } catch (const OptimizationError&) {
        wok[static_cast<size_t>(i)] = 0;
      }
    });
    std::vector<LocalMinimum> conv2;
    for (size_t i = 0; i < warm.size(); ++i) {
      if (trace_enabled())
        std::fprintf(stderr, "[minimize] T=%g K=%d warm %zu: ok=%d f=%.12g |g|=%.3g\n", T,
                     mesh2->elements(), i, static_cast<int>(wok[i]), warm[i].action,
                     warm[i].grad_norm);
      if (wok[i]) conv2.push_back(std::move(warm[i]));
    }
    if (conv2.empty()) throw OptimizationError("minimize_action: horizon doubling lost all minima");

    reps = distinct_minima(ctx2, std::move(conv2), &k);
    ctx = std::move(ctx2);
    mesh = mesh2;
    out.horizon_history.push_back(record(ctx, reps));
    const double cur = horizon_extrapolated(out.horizon_history, out.horizon_history.size() - 1, p);
    if (std::abs(cur - prev) <= opts.tol_horizon * (1.0 + std::abs(cur))) {
      out.horizon_converged = true;
      break;
    }
  }

  out.mesh = mesh;
  out.minima = std::move(reps);
  out.multiplicity = k;
  out.action = out.horizon_history.back().action;
  out.tail = out.horizon_history.back().tail;
  out.value_corrected = horizon_extrapolated(out.horizon_history, out.horizon_history.size() - 1, p);
  return out;
}

}  // namespace nbhj
