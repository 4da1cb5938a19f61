#pragma once

#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "nbhj/mesh.hpp"
#include "nbhj/model.hpp"
#include "nbhj/potential.hpp"
#include "nbhj/trajectory.hpp"

namespace nbhj {

/// Hessian block of the potential along a path, as a function of time.
using HessianAt = std::function<Mat(double t)>;

inline HessianAt hessian_along(const MassSystem& ms, std::shared_ptr<const PathSampler> path);

struct SpectralOptions {
  int elements = 192;     // P1 elements on [t_start, t_max]
  int m = 4;              // eigenpairs returned
  double t_max = 1e3;     // Dirichlet truncation
};

/// Smallest eigenvalues of the weighted Sturm-Liouville form
///   A(psi) = int ||psi_dot||_M^2 + <H(t) psi, psi> dt
/// against the weighted mass B(psi) = int ||psi||_M^2 / t^3 dt,
/// with Dirichlet conditions at both truncation ends.
struct SpectralResult {
  std::vector<double> eigenvalues;       // ascending, first m
  Mat eigenfields;                       // (interior dof) x m, B-orthonormal
  std::shared_ptr<const TimeMesh> mesh;  // assembly mesh
  int node_dof = 0;
  double rayleigh_residual = 0.0;        // max relative |R(psi_i) - lambda_i|
  double ortho_residual = 0.0;           // max |<psi_i, psi_j>_B - delta_ij|
};

SpectralResult smallest_eigs(const MassSystem& ms, const HessianAt& hess, double t_start,
                             const SpectralOptions& opts = {});

double lambda1(const MassSystem& ms, const HessianAt& hess, double t_start,
               const SpectralOptions& opts = {});

/// lambda_1 of the form on [t, t_max] for each t in t_grid (parallel over t).
std::vector<std::pair<double, double>> lambda_profile(const MassSystem& ms, const HessianAt& hess,
                                                      const std::vector<double>& t_grid,
                                                      const SpectralOptions& opts = {},
                                                      int threads = 1);

struct ConjugateReport {
  bool conjugate_found = false;
  double t_star = 0.0;      // root of lambda_1(t) when found
  int kernel_dim = 0;       // count of |lambda_i(t_star)| <= 1e-6 * scale(lambda_2)
  double lambda1_lo = 0.0;  // lambda_1 at the bracket ends
  double lambda1_hi = 0.0;
  Vec kernel_field;         // discretized kernel generator (empty if none)
};

/// Bisection for the sign change of t -> lambda_1([t, t_max]) on [t_lo, t_hi].
/// Domain monotonicity makes lambda_1 nondecreasing in t, so a root exists
/// iff lambda_1(t_lo) < 0 <= lambda_1(t_hi).
ConjugateReport conjugate_scan(const MassSystem& ms, const HessianAt& hess, double t_lo,
                               double t_hi, const SpectralOptions& opts = {},
                               double bisect_tol = 1e-6);

inline HessianAt hessian_along(const MassSystem& ms, std::shared_ptr<const PathSampler> path) {
  return [ms, path = std::move(path)](double t) {
    return u_hessian_matrix(ms, path->position(t));
  };
}

}  // namespace nbhj
