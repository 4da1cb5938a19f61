#include <doctest.h>

#include <cmath>
#include <random>

#include "nbhj/potential.hpp"
#include "nbhj/spectral.hpp"
#include "test_util.hpp"

using namespace nbhj;

namespace {

HessianAt free_case(int n) {
  return [n](double) { return Mat::Zero(n, n); };
}

// Dirichlet problem -psi'' = lambda psi / t^3 on [a, b]: psi = sqrt(t) Z_1(2 sqrt(lambda/t)),
// eigenvalues are roots of the J1/Y1 cross-product.
double bessel_lambda1(double a, double b) {
  auto cross = [&](double lam) {
    const double ua = 2.0 * std::sqrt(lam / a);
    const double ub = 2.0 * std::sqrt(lam / b);
    return std::cyl_bessel_j(1.0, ua) * std::cyl_neumann(1.0, ub) -
           std::cyl_bessel_j(1.0, ub) * std::cyl_neumann(1.0, ua);
  };
  double lo = 1e-3;
  double flo = cross(lo);
  double hi = lo;
  for (;;) {
    hi *= 1.05;
    REQUIRE(hi < 1e6);
    if (cross(hi) * flo < 0.0) break;
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (cross(mid) * flo < 0.0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_SUITE_BEGIN("spectral");

TEST_CASE("free case: positivity, residuals, Bessel oracle") {
  MassSystem ms = testutil::two_equal();
  SpectralOptions opts;
  opts.t_max = 100.0;
  opts.elements = 256;
  SpectralResult sr = smallest_eigs(ms, free_case(ms.dof()), 1.0, opts);
  REQUIRE(sr.eigenvalues.size() == 4);
  CHECK(sr.eigenvalues[0] > 0.0);
  for (size_t i = 0; i + 1 < sr.eigenvalues.size(); ++i)
    CHECK(sr.eigenvalues[i] <= sr.eigenvalues[i + 1]);
  CHECK(sr.rayleigh_residual <= 1e-8);
  CHECK(sr.ortho_residual <= 1e-8);
  // equal masses and a scalar-free form: lambda_1 matches the separable problem
  CHECK(sr.eigenvalues[0] ==
        doctest::Approx(bessel_lambda1(1.0, 100.0)).epsilon(1e-4));
}

TEST_CASE("mass-weighted scalar shift moves the spectrum exactly") {
  MassSystem ms = testutil::two_equal();
  SpectralOptions opts;
  opts.t_max = 100.0;
  const double kappa = 3.75;
  HessianAt shifted = [&](double t) {
    return (-kappa / (t * t * t)) * Mat::Identity(ms.dof(), ms.dof());
  };
  SpectralResult base = smallest_eigs(ms, free_case(ms.dof()), 2.0, opts);
  SpectralResult sh = smallest_eigs(ms, shifted, 2.0, opts);
  for (size_t i = 0; i < base.eigenvalues.size(); ++i)
    CHECK(sh.eigenvalues[i] ==
          doctest::Approx(base.eigenvalues[i] - kappa).epsilon(1e-10));
}

TEST_CASE("domain monotonicity of lambda_1") {
  MassSystem ms = testutil::two_equal();
  SpectralOptions opts;
  opts.elements = 96;
  opts.t_max = 100.0;
  std::mt19937_64 rng(81);
  std::normal_distribution<double> g;
  std::vector<double> t_grid{1.0, 2.0, 4.0, 8.0};
  for (int rep = 0; rep < 4; ++rep) {
    Mat s0 = Mat::Zero(ms.dof(), ms.dof()), s1 = s0;
    for (int i = 0; i < ms.dof(); ++i)
      for (int j = 0; j <= i; ++j) {
        s0(i, j) = s0(j, i) = 0.3 * g(rng);
        s1(i, j) = s1(j, i) = 0.1 * g(rng);
      }
    HessianAt hess = [&](double t) { return Mat((s0 + std::sin(t) * s1) / (t * t * t)); };
    auto prof = lambda_profile(ms, hess, t_grid, opts, 2);
    for (size_t k = 0; k + 1 < prof.size(); ++k)
      CHECK(prof[k].second <= prof[k + 1].second + 1e-8);
  }
  // strictness on the free case
  auto prof = lambda_profile(ms, free_case(ms.dof()), t_grid, opts, 2);
  for (size_t k = 0; k + 1 < prof.size(); ++k)
    CHECK(prof[k + 1].second - prof[k].second > 1e-6);
}

TEST_CASE("conjugate root against the separable oracle") {
  MassSystem ms = testutil::two_equal();
  SpectralOptions opts;
  opts.t_max = 100.0;
  opts.elements = 192;
  const double t_star = 4.0;
  const double kappa = bessel_lambda1(t_star, opts.t_max);
  // -kappa/t^3 on one coordinate only: the root is simple
  HessianAt hess = [&](double t) {
    Vec d = Vec::Constant(ms.dof(), 5.0);
    d[0] = -kappa;
    return Mat((d / (t * t * t)).asDiagonal());
  };
  ConjugateReport rep = conjugate_scan(ms, hess, 1.0, 20.0, opts);
  REQUIRE(rep.conjugate_found);
  CHECK(std::abs(rep.t_star - t_star) <= 1e-4 * t_star);
  CHECK(rep.kernel_dim == 1);
  CHECK(rep.kernel_field.size() > 0);
}

TEST_CASE("homothetic parabolic path is coercive at t = 1") {
  ScenarioSpec spec = testutil::parabolic_homothetic();
  const MassSystem& ms = spec.ms;
  HessianAt hess = [&](double t) { return u_hessian_matrix(ms, spec.r0(t)); };
  SpectralOptions opts;
  opts.t_max = 1000.0;
  CHECK(lambda1(ms, hess, 1.0, opts) > 0.0);
  ConjugateReport rep = conjugate_scan(ms, hess, 1.0, 8.0, opts);
  CHECK(!rep.conjugate_found);
  CHECK(rep.lambda1_lo > 0.0);
}

TEST_CASE("lambda_1 mesh convergence is second order") {
  MassSystem ms = testutil::two_equal();
  auto lam = [&](int elements) {
    SpectralOptions opts;
    opts.elements = elements;
    opts.t_max = 100.0;
    return lambda1(ms, free_case(ms.dof()), 1.0, opts);
  };
  const double ref = lam(1024);
  const double e64 = std::abs(lam(64) - ref);
  const double e128 = std::abs(lam(128) - ref);
  const double e256 = std::abs(lam(256) - ref);
  CHECK(e128 <= 0.35 * e64);
  CHECK(e256 <= 0.35 * e128);
}

TEST_SUITE_END();
