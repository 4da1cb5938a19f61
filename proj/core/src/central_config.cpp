#include "nbhj/central_config.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "nbhj/parallel.hpp"
#include "nbhj/potential.hpp"

namespace nbhj {

namespace {

Vec normalize_ellipsoid(const MassSystem& ms, const Vec& x) {
  const double n = mass_norm(ms, x);
  if (n < 1e-300) throw OptimizationError("central_config: degenerate seed");
  return x / n;
}

double kkt_residual_at(const MassSystem& ms, const Vec& b, const Vec& grad) {
  const double mu = grad.dot(b);
  return (grad - mu * ms.metric_diagonal().cwiseProduct(b)).norm();
}

struct LocalResult {
  Vec b;
  double u = std::numeric_limits<double>::infinity();
  double kkt = std::numeric_limits<double>::infinity();
  bool ok = false;
};

// Projected gradient with BB steps on the ellipsoid <M b, b> = 1.
LocalResult descend(const MassSystem& ms, Vec x, const CentralConfigOptions& opts) {
  LocalResult res;
  x = normalize_ellipsoid(ms, project_com(ms, x));
  if (collision_distance(ms, x) <= 0.0) return res;

  const Vec& md = ms.metric_diagonal();
  auto tangent_grad = [&](const Vec& b, const Vec& grad_eucl) -> Vec {
    // gradient in the mass metric, projected to the tangent space
    Vec gm = grad_eucl.cwiseQuotient(md);
    return gm - mass_inner(ms, gm, b) * b;
  };

  double u;
  Vec g;
  try {
    u = u_value(ms, x);
    g = tangent_grad(x, u_gradient(ms, x));
  } catch (const CollisionError&) {
    return res;
  }

  double alpha = 1e-2;
  Vec x_prev = x, g_prev = g;
  for (int it = 0; it < opts.max_iters; ++it) {
    const double kkt = kkt_residual_at(ms, x, u_gradient(ms, x));
    if (kkt <= opts.tol) {
      res.b = x;
      res.u = u;
      res.kkt = kkt;
      res.ok = true;
      return res;
    }
    // backtracking around the BB step so the value never increases
    double step = alpha;
    for (int bt = 0; bt < 60; ++bt) {
      Vec trial = normalize_ellipsoid(ms, project_com(ms, x - step * g));
      double ut;
      try {
        ut = u_value(ms, trial);
      } catch (const CollisionError&) {
        step *= 0.5;
        continue;
      }
      if (ut <= u) {
        x_prev = x;
        g_prev = g;
        x = trial;
        u = ut;
        g = tangent_grad(x, u_gradient(ms, x));
        break;
      }
      step *= 0.5;
      if (bt == 59) return res;  // stuck
    }
    const Vec dx = x - x_prev;
    const Vec dg = g - g_prev;
    const double sy = mass_inner(ms, dx, dg);
    if (sy > 1e-300)
      alpha = std::clamp(mass_inner(ms, dx, dx) / sy, 1e-8, 1e4);
  }
  // ran out of iterations; report what we have
  res.b = x;
  res.u = u;
  res.kkt = kkt_residual_at(ms, x, u_gradient(ms, x));
  res.ok = res.kkt <= 1e3 * opts.tol;
  return res;
}

}  // namespace

CentralConfigResult find_minimal_central(const MassSystem& ms, const Vec& seed,
                                         const CentralConfigOptions& opts) {
  const int total = std::max(1, opts.restarts);
  std::vector<LocalResult> results(static_cast<size_t>(total));
  parallel_for(total, opts.threads, [&](int k) {
    Vec x0;
    if (k == 0 && seed.size() == ms.dof() && collision_distance(ms, seed) > 0.0) {
      x0 = seed;
    } else {
      std::mt19937_64 rng(opts.seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(k) + 1);
      std::normal_distribution<double> gauss(0.0, 1.0);
      x0.resize(ms.dof());
      for (int i = 0; i < ms.dof(); ++i) x0[i] = gauss(rng);
    }
    results[static_cast<size_t>(k)] = descend(ms, x0, opts);
  });

  CentralConfigResult out;
  double best = std::numeric_limits<double>::infinity();
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& r : results) {
    if (!r.ok) continue;
    ++out.converged_restarts;
    worst = std::max(worst, r.u);
    if (r.u < best) {
      best = r.u;
      out.b_m = r.b;
      out.u_min = r.u;
      out.kkt_residual = r.kkt;
    }
  }
  if (out.converged_restarts == 0)
    throw OptimizationError("central_config: no restart converged");
  out.value_spread = worst - best;
  out.beta = std::cbrt(4.5 * out.u_min);
  return out;
}

ClusteredCentralConfig find_minimal_clustered(const MassSystem& ms, const ClusterPartition& part,
                                              const Vec& seed, const CentralConfigOptions& opts) {
  part.validate(ms.bodies());
  ClusteredCentralConfig out;
  out.embedded_scaled = Vec::Zero(ms.dof());
  const int d = ms.dim();
  for (size_t k = 0; k < part.blocks.size(); ++k) {
    const auto& block = part.blocks[k];
    if (block.size() < 2) continue;
    std::vector<double> cluster_masses;
    cluster_masses.reserve(block.size());
    for (int i : block) cluster_masses.push_back(ms.mass(i));
    MassSystem sub(d, cluster_masses);
    Vec sub_seed;
    if (seed.size() == ms.dof()) {
      sub_seed.resize(sub.dof());
      for (size_t p = 0; p < block.size(); ++p)
        sub_seed.segment(static_cast<int>(p) * d, d) = seed.segment(block[p] * d, d);
    }
    CentralConfigResult r = find_minimal_central(sub, sub_seed, opts);
    for (size_t p = 0; p < block.size(); ++p)
      out.embedded_scaled.segment(block[p] * d, d) +=
          r.beta * r.b_m.segment(static_cast<int>(p) * d, d);
    out.block_index.push_back(static_cast<int>(k));
    out.per_cluster.push_back(std::move(r));
  }
  return out;
}

}  // namespace nbhj
