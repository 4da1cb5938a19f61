#include "nbhj/spectral.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "nbhj/parallel.hpp"

namespace nbhj {

namespace {

struct Assembled {
  Mat a, b;
  std::shared_ptr<const TimeMesh> mesh;
};

Assembled assemble(const MassSystem& ms, const HessianAt& hess, double t_start,
                   const SpectralOptions& opts) {
  if (!(opts.t_max > t_start)) throw ShapeError("spectral: t_max must exceed t_start");
  auto mesh = TimeMesh::graded_interval(t_start, opts.t_max, opts.elements);
  const int n = ms.dof();
  const int K = mesh->elements();
  const int dof = (K - 1) * n;  // Dirichlet at both ends
  Mat a = Mat::Zero(dof, dof);
  Mat b = Mat::Zero(dof, dof);
  const Vec& md = ms.metric_diagonal();

  // global interior index of mesh node k, or -1 on the boundary
  auto gi = [&](int k) { return (k >= 1 && k <= K - 1) ? (k - 1) * n : -1; };

  for (int e = 0; e < K; ++e) {
    const double h = mesh->h(e);
    const int ga = gi(e), gb = gi(e + 1);
    // exact kinetic block: (d psi)^T M (d psi) / h
    for (int c = 0; c < n; ++c) {
      const double v = md[c] / h;
      if (ga >= 0) a(ga + c, ga + c) += v;
      if (gb >= 0) a(gb + c, gb + c) += v;
      if (ga >= 0 && gb >= 0) {
        a(ga + c, gb + c) -= v;
        a(gb + c, ga + c) -= v;
      }
    }
    for (int q = 0; q < 2; ++q) {
      const double theta = kGauss2Theta[q];
      const double t = mesh->node(e) + theta * h;
      const double w = kGauss2Weight[q] * h;
      const Mat hq = hess(t);
      const double ha = 1.0 - theta, hb = theta;
      const double wm = w / (t * t * t);
      for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
          const double hv = w * hq(r, c);
          if (ga >= 0) a(ga + r, ga + c) += ha * ha * hv;
          if (gb >= 0) a(gb + r, gb + c) += hb * hb * hv;
          if (ga >= 0 && gb >= 0) {
            a(ga + r, gb + c) += ha * hb * hv;
            a(gb + r, ga + c) += hb * ha * hv;
          }
        }
        const double mv = wm * md[r];
        if (ga >= 0) b(ga + r, ga + r) += ha * ha * mv;
        if (gb >= 0) b(gb + r, gb + r) += hb * hb * mv;
        if (ga >= 0 && gb >= 0) {
          b(ga + r, gb + r) += ha * hb * mv;
          b(gb + r, ga + r) += hb * ha * mv;
        }
      }
    }
  }
  // symmetrize away assembly round-off
  a = 0.5 * (a + a.transpose()).eval();
  b = 0.5 * (b + b.transpose()).eval();
  return Assembled{std::move(a), std::move(b), std::move(mesh)};
}

}  // namespace

SpectralResult smallest_eigs(const MassSystem& ms, const HessianAt& hess, double t_start,
                             const SpectralOptions& opts) {
  Assembled sys = assemble(ms, hess, t_start, opts);
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> solver(sys.a, sys.b, Eigen::Ax_lBx | Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success)
    throw OptimizationError("spectral: generalized eigensolver failed");

  SpectralResult out;
  out.mesh = sys.mesh;
  out.node_dof = ms.dof();
  const int m = std::min<int>(opts.m, static_cast<int>(solver.eigenvalues().size()));
  out.eigenvalues.assign(solver.eigenvalues().data(), solver.eigenvalues().data() + m);
  out.eigenfields = solver.eigenvectors().leftCols(m);

  for (int i = 0; i < m; ++i) {
    const Vec& v = out.eigenfields.col(i);
    const double ray = v.dot(sys.a * v) / v.dot(sys.b * v);
    out.rayleigh_residual = std::max(
        out.rayleigh_residual,
        std::abs(ray - out.eigenvalues[static_cast<size_t>(i)]) /
            std::max(1.0, std::abs(out.eigenvalues[static_cast<size_t>(i)])));
    for (int j = 0; j <= i; ++j) {
      const double g = out.eigenfields.col(j).dot(sys.b * v);
      out.ortho_residual = std::max(out.ortho_residual, std::abs(g - (i == j ? 1.0 : 0.0)));
    }
  }
  return out;
}

double lambda1(const MassSystem& ms, const HessianAt& hess, double t_start,
               const SpectralOptions& opts) {
  SpectralOptions o = opts;
  o.m = 1;
  return smallest_eigs(ms, hess, t_start, o).eigenvalues.front();
}

std::vector<std::pair<double, double>> lambda_profile(const MassSystem& ms, const HessianAt& hess,
                                                      const std::vector<double>& t_grid,
                                                      const SpectralOptions& opts, int threads) {
  std::vector<std::pair<double, double>> out(t_grid.size());
  parallel_for(static_cast<int>(t_grid.size()), threads, [&](int i) {
    const double t = t_grid[static_cast<size_t>(i)];
    out[static_cast<size_t>(i)] = {t, lambda1(ms, hess, t, opts)};
  });
  return out;
}

ConjugateReport conjugate_scan(const MassSystem& ms, const HessianAt& hess, double t_lo,
                               double t_hi, const SpectralOptions& opts, double bisect_tol) {
  ConjugateReport rep;
  rep.lambda1_lo = lambda1(ms, hess, t_lo, opts);
  rep.lambda1_hi = lambda1(ms, hess, t_hi, opts);
  if (rep.lambda1_lo >= 0.0 || rep.lambda1_hi < 0.0) return rep;  // no sign change

  double lo = t_lo, hi = t_hi;
  for (int it = 0; it < 80 && (hi - lo) > bisect_tol * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (lambda1(ms, hess, mid, opts) < 0.0 ? lo : hi) = mid;
  }
  rep.conjugate_found = true;
  rep.t_star = 0.5 * (lo + hi);

  SpectralResult eig = smallest_eigs(ms, hess, rep.t_star, opts);
  const double scale =
      eig.eigenvalues.size() > 1 ? std::max(std::abs(eig.eigenvalues[1]), 1e-12) : 1e-12;
  for (double l : eig.eigenvalues)
    if (std::abs(l) <= 1e-6 * scale) ++rep.kernel_dim;
  if (rep.kernel_dim == 0) rep.kernel_dim = 1;  // the bisection root itself
  rep.kernel_field = eig.eigenfields.col(0);
  return rep;
}

}  // namespace nbhj
