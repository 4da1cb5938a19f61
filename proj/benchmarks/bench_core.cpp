#include <benchmark/benchmark.h>

#include <random>

#include "nbhj/action.hpp"
#include "nbhj/minimize.hpp"
#include "nbhj/spectral.hpp"
#include "test_util.hpp"

using namespace nbhj;

namespace {

ActionContext make_ctx(int elements) {
  static ScenarioSpec spec = testutil::hyperbolic_twobody();
  return ActionContext(spec, TimeMesh::graded(1e4, elements));
}

Vec random_phi(const ActionContext& ctx, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.05);
  Vec phi(ctx.dof());
  for (int i = 0; i < phi.size(); ++i) phi[i] = g(rng);
  return phi;
}

void BM_action_eval(benchmark::State& state) {
  ActionContext ctx = make_ctx(static_cast<int>(state.range(0)));
  Vec phi = random_phi(ctx, 1);
  for (auto _ : state) benchmark::DoNotOptimize(ctx.eval(phi));
}
BENCHMARK(BM_action_eval)->Arg(128)->Arg(512)->Arg(2048);

void BM_action_gradient(benchmark::State& state) {
  ActionContext ctx = make_ctx(static_cast<int>(state.range(0)));
  Vec phi = random_phi(ctx, 1);
  Vec grad(ctx.dof());
  for (auto _ : state) benchmark::DoNotOptimize(ctx.eval(phi, &grad));
}
BENCHMARK(BM_action_gradient)->Arg(128)->Arg(512)->Arg(2048);

void BM_hessian_apply(benchmark::State& state) {
  ActionContext ctx = make_ctx(static_cast<int>(state.range(0)));
  Vec phi = random_phi(ctx, 1);
  Vec psi = random_phi(ctx, 2);
  Vec out(ctx.dof());
  for (auto _ : state) {
    ctx.hessian_apply(phi, psi, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_hessian_apply)->Arg(128)->Arg(512)->Arg(2048);

void BM_lambda1(benchmark::State& state) {
  MassSystem ms(2, {1.0, 1.0});
  HessianAt free = [&](double) { return Mat::Zero(ms.dof(), ms.dof()); };
  SpectralOptions opts;
  opts.elements = static_cast<int>(state.range(0));
  opts.t_max = 100.0;
  for (auto _ : state) benchmark::DoNotOptimize(lambda1(ms, free, 1.0, opts));
}
BENCHMARK(BM_lambda1)->Arg(96)->Arg(192)->Arg(384);

void BM_minimize_small(benchmark::State& state) {
  ScenarioSpec spec = testutil::hyperbolic_twobody();
  MinimizeOptions opts;
  opts.nodes_per_decade = 32;
  opts.restarts = 1;
  opts.max_doublings = 0;
  for (auto _ : state) benchmark::DoNotOptimize(minimize_action(spec, opts));
}
BENCHMARK(BM_minimize_small)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
