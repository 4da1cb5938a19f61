#include <doctest.h>

#include <cmath>
#include <random>

#include "nbhj/minimize.hpp"
#include "nbhj/trajectory.hpp"
#include "test_util.hpp"

using namespace nbhj;
using testutil::flat;

namespace {

MinimizeOptions cheap_options() {
  MinimizeOptions o;
  o.nodes_per_decade = 16;
  o.restarts = 1;
  o.max_doublings = 0;
  return o;
}

}  // namespace

TEST_SUITE_BEGIN("trajectory");

TEST_CASE("mechanical energy") {
  MassSystem ms(2, {1.0, 1.0});
  Vec x = flat({1, 0, -1, 0});
  Vec v = flat({0, 1, 0, -1});
  CHECK(mechanical_energy(ms, x, v) == doctest::Approx(1.0 - 0.5).epsilon(1e-14));
}

TEST_CASE("circular Kepler orbit returns after one period") {
  MassSystem ms(2, {1.0, 1.0});
  Vec x = flat({0.5, 0, -0.5, 0});
  const double speed = std::sqrt(0.5);  // circular: v^2/r_c = F/m = 1 at r_c = 1/2
  Vec v = flat({0, speed, 0, -speed});
  const double period = 2.0 * M_PI * std::pow(1.0, 1.5) / std::sqrt(ms.total_mass());
  OdeState s = integrate_newton(ms, 0.0, x, v, period);
  CHECK((s.x - x).norm() <= 1e-6);
  CHECK((s.v - v).norm() <= 1e-6);
  CHECK(s.energy_drift <= 1e-8);
}

TEST_CASE("parabolic homothetic launch follows t^(2/3)") {
  ScenarioSpec spec = testutil::parabolic_homothetic();
  Vec c = spec.scaled_bm;
  OdeState s = integrate_newton(spec.ms, 1.0, c, (2.0 / 3.0) * c, 10.0);
  CHECK((s.x - std::pow(10.0, 2.0 / 3.0) * c).norm() <= 1e-7);
}

TEST_CASE("symmetric zero-velocity drop collides") {
  MassSystem ms(2, {1.0, 1.0});
  Vec x = flat({1, 0, -1, 0});
  CHECK_THROWS_AS(integrate_newton(ms, 0.0, x, Vec::Zero(4), 100.0), CollisionError);
}

TEST_CASE("time reversal consistency") {
  MassSystem ms(2, {1.0, 1.0, 1.0});
  std::mt19937_64 rng(71);
  Vec x = testutil::random_config(ms, rng, 2.0);
  Vec v = 0.3 * testutil::random_direction(ms, rng);
  ShootOptions opts;
  OdeState fwd = integrate_newton(ms, 0.0, x, v, 3.0, opts);
  OdeState back = integrate_newton(ms, 3.0, fwd.x, fwd.v, 0.0, opts);
  // local tolerances accumulate over the round trip; allow a few hundred rtol
  CHECK((back.x - x).norm() <= 1e3 * opts.rtol * (1.0 + x.norm()));
  CHECK((back.v - v).norm() <= 1e3 * opts.rtol * (1.0 + v.norm()));
}

TEST_CASE("reconstruct the homothetic trajectory") {
  ScenarioSpec spec = testutil::parabolic_homothetic();
  ActionContext ctx(spec, TimeMesh::graded(100.0, 64));
  Trajectory tr = reconstruct(ctx, Vec::Zero(ctx.dof()));
  CHECK(tr.positions.front().isApprox(spec.x0, 1e-14));
  CHECK((tr.initial_velocity - (2.0 / 3.0) * spec.scaled_bm).norm() <= 1e-8);
  for (size_t k = 0; k < tr.times.size(); ++k) {
    Vec expect = std::pow(tr.times[k], 2.0 / 3.0) * spec.scaled_bm;
    CHECK((tr.positions[k] - expect).norm() <= 1e-10 * (1.0 + expect.norm()));
    CHECK(std::abs(tr.energy[k]) <= 5e-8);
  }
  CHECK(tr.energy_stdev <= 1e-8);
}

TEST_CASE("hyperbolic asymptotics and growth") {
  ScenarioSpec spec = testutil::hyperbolic_twobody();
  MinimizeOptions opts = cheap_options();
  opts.t_initial = 1e4;
  MinimizeResult mr = minimize_action(spec, opts);
  ActionContext ctx(spec, mr.mesh);
  Trajectory tr = reconstruct(ctx, mr.minima.front().phi);

  AsymptoticsFit fit = hyperbolic_asymptotics(tr, spec);
  CHECK(fit.rel_error <= 0.05);

  // doubling a scales the expected log coefficient by 1/4
  ScenarioSpec spec2 = spec;
  spec2.a = 2.0 * spec.a;
  spec2.x0 = 2.0 * spec.x0;
  MinimizeResult mr2 = minimize_action(spec2, opts);
  ActionContext ctx2(spec2, mr2.mesh);
  AsymptoticsFit fit2 = hyperbolic_asymptotics(reconstruct(ctx2, mr2.minima.front().phi), spec2);
  CHECK((fit2.w_expected - 0.25 * fit.w_expected).norm() <= 1e-12);
  CHECK((fit2.w_fit - 0.25 * fit.w_fit).norm() <= 0.2 * fit.w_fit.norm());

  for (const PairGrowth& pg : growth_diagnostics(spec.ms, tr))
    CHECK(std::abs(pg.exponent - 1.0) <= 0.05);
}

TEST_CASE("growth exponents by class") {
  // parabolic pairs grow like t^(2/3)
  {
    ScenarioSpec spec = testutil::parabolic_homothetic();
    ActionContext ctx(spec, TimeMesh::graded(1e4, 64));
    Trajectory tr = reconstruct(ctx, Vec::Zero(ctx.dof()));
    for (const PairGrowth& pg : growth_diagnostics(spec.ms, tr))
      CHECK(std::abs(pg.exponent - 2.0 / 3.0) <= 0.05);
  }
  // hyperbolic-parabolic: 2/3 inside the cluster, 1 across
  {
    ScenarioSpec spec = testutil::hp_threebody();
    MinimizeOptions opts = cheap_options();
    opts.t_initial = 2e3;
    opts.restarts = 3;
    MinimizeResult mr = minimize_action(spec, opts);
    ActionContext ctx(spec, mr.mesh);
    Trajectory tr = reconstruct(ctx, mr.minima.front().phi);
    for (const PairGrowth& pg : growth_diagnostics(spec.ms, tr)) {
      const bool same = spec.clusters.block_of(pg.i) == spec.clusters.block_of(pg.j);
      CHECK(std::abs(pg.exponent - (same ? 2.0 / 3.0 : 1.0)) <= 0.05);
    }
  }
}

TEST_CASE("path sampler interpolates and extends backward") {
  ScenarioSpec spec = testutil::parabolic_homothetic();
  ActionContext ctx(spec, TimeMesh::graded(100.0, 64));
  Trajectory tr = reconstruct(ctx, Vec::Zero(ctx.dof()));
  PathSampler ps(spec.ms, tr, 0.6);
  CHECK(ps.t_min() <= 0.6);
  for (double t : {0.7, 1.0, 2.5, 50.0}) {
    Vec expect = std::pow(t, 2.0 / 3.0) * spec.scaled_bm;
    CHECK((ps.position(t) - expect).norm() <= 1e-6 * (1.0 + expect.norm()));
  }
}

TEST_SUITE_END();
