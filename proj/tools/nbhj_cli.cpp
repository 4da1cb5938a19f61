// Command-line front end: expansive N-body trajectories by direct action
// minimization, value-function evaluation, HJ verification, spectral scans.
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nbhj/hj_value.hpp"
#include "nbhj/parallel.hpp"
#include "nbhj/scenario_io.hpp"
#include "nbhj/spectral.hpp"
#include "nbhj/trajectory.hpp"

namespace {

using namespace nbhj;

struct GlobalFlags {
  int threads = default_threads();
  std::uint64_t seed = 0;
  bool seed_given = false;
};

ScenarioFile load_with_overrides(const std::string& path, const GlobalFlags& g) {
  ScenarioFile sf = load_scenario(path);
  sf.minimize.threads = g.threads;
  if (g.seed_given) sf.minimize.seed = g.seed;
  return sf;
}

ClusterPartition parse_cluster(const std::string& text, int n_bodies) {
  ClusterPartition part;
  std::stringstream blocks(text);
  std::string block;
  while (std::getline(blocks, block, ';')) {
    std::vector<int> ids;
    std::stringstream ss(block);
    std::string tok;
    while (std::getline(ss, tok, ',')) ids.push_back(std::stoi(tok));
    part.blocks.push_back(std::move(ids));
  }
  part.validate(n_bodies);
  return part;
}

int cmd_central_config(const std::vector<double>& masses, int dim, const std::string& cluster,
                       const GlobalFlags& g, int restarts) {
  MassSystem ms(dim, masses);
  CentralConfigOptions opts;
  opts.restarts = restarts;
  opts.seed = g.seed;
  opts.threads = g.threads;
  Json out;
  if (cluster.empty()) {
    out = central_config_json(find_minimal_central(ms, Vec(), opts));
  } else {
    ClusteredCentralConfig ccc =
        find_minimal_clustered(ms, parse_cluster(cluster, ms.bodies()), Vec(), opts);
    Json per = Json::array();
    for (size_t k = 0; k < ccc.per_cluster.size(); ++k)
      per.push_back(Json{{"block", ccc.block_index[k]},
                         {"result", central_config_json(ccc.per_cluster[k])}});
    out = Json{{"clusters", std::move(per)},
               {"embedded_scaled", vec_json(ccc.embedded_scaled)}};
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_solve(const std::string& scenario, const std::string& out_dir, const GlobalFlags& g) {
  ScenarioFile sf = load_with_overrides(scenario, g);
  std::cerr << "solving " << to_string(sf.spec.kind) << " scenario (hash " << sf.content_hash
            << ")\n";
  MinimizeResult mr = minimize_action(sf.spec, sf.minimize);
  ActionContext ctx(sf.spec, mr.mesh);
  Trajectory tr = reconstruct(ctx, mr.minima.front().phi);

  Json result{{"scenario", scenario_json(sf)},
              {"minimize", minimize_result_json(sf.spec, mr)},
              {"energy_mean", tr.energy_mean},
              {"energy_stdev", tr.energy_stdev},
              {"initial_velocity", vec_json(tr.initial_velocity)}};
  Json growth = Json::array();
  for (const auto& gd : growth_diagnostics(sf.spec.ms, tr))
    growth.push_back(Json{{"i", gd.i}, {"j", gd.j}, {"exponent", gd.exponent}});
  result["growth"] = std::move(growth);

  if (!out_dir.empty()) {
    save_result(out_dir + "/result.json", result);
    std::ofstream csv(out_dir + "/trajectory.csv");
    if (!csv) throw std::runtime_error("cannot open " + out_dir + "/trajectory.csv");
    write_trajectory_csv(csv, sf.spec.ms, tr);
  }
  std::cout << result.dump(2) << "\n";
  return 0;
}

int cmd_value(const std::string& scenario, bool want_lambda1, const GlobalFlags& g) {
  ScenarioFile sf = load_with_overrides(scenario, g);
  ValueOptions vo;
  vo.minimize = sf.minimize;
  vo.want_lambda1 = want_lambda1;
  ValueResult vr = value_at(sf.spec, vo);
  Json out{{"scenario", scenario_json(sf)}, {"value", value_result_json(vr)}};
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_scan(const std::string& scenario, const std::string& slice_path, const std::string& out,
             bool want_lambda1, const GlobalFlags& g) {
  ScenarioFile sf = load_with_overrides(scenario, g);
  std::ifstream sl(slice_path);
  if (!sl) throw std::runtime_error("cannot open slice file: " + slice_path);
  Json slice_json;
  try {
    sl >> slice_json;
  } catch (const Json::exception& e) {
    throw ShapeError(std::string("slice: not valid JSON: ") + e.what());
  }
  GridSlice grid = parse_slice(sf.spec.ms, slice_json);
  ValueOptions vo;
  vo.minimize = sf.minimize;
  vo.want_lambda1 = want_lambda1;
  std::cerr << "scanning " << grid.n1 << "x" << grid.n2 << " grid\n";
  std::vector<ScanRecord> recs = scan_grid(sf.spec, grid, vo, g.threads);

  std::ofstream csv(out);
  if (!csv) throw std::runtime_error("cannot open output file: " + out);
  write_scan_csv(csv, sf.spec.ms, recs);

  int ok = 0, k2 = 0, near_delta = 0, errors = 0;
  for (const auto& r : recs) {
    if (r.status == "ok") ++ok;
    else if (r.status == "near_delta") ++near_delta;
    else ++errors;
    if (r.k >= 2) ++k2;
  }
  Json summary{{"points", recs.size()}, {"ok", ok},        {"multi_minimizer", k2},
               {"near_delta", near_delta}, {"errors", errors}, {"csv", out}};
  std::cout << summary.dump(2) << "\n";
  return errors == 0 ? 0 : 1;
}

int cmd_spectrum(const std::string& scenario, const std::string& t_grid_text, double t_max,
                 int elements, const std::string& out, const GlobalFlags& g) {
  ScenarioFile sf = load_with_overrides(scenario, g);
  double lo = 1.0, hi = 8.0;
  int n = 8;
  if (!t_grid_text.empty() &&
      std::sscanf(t_grid_text.c_str(), "%lf:%lf:%d", &lo, &hi, &n) != 3)
    throw ShapeError("--t-grid: expected lo:hi:n");

  MinimizeResult mr = minimize_action(sf.spec, sf.minimize);
  ActionContext ctx(sf.spec, mr.mesh);
  Trajectory tr = reconstruct(ctx, mr.minima.front().phi);
  const double t_back = 1.0 - sf.spec.eps_back + 1e-3;
  auto sampler = std::make_shared<PathSampler>(sf.spec.ms, tr, std::min(lo, t_back));
  HessianAt hess = hessian_along(sf.spec.ms, sampler);

  SpectralOptions so;
  so.t_max = std::min(t_max, mr.mesh->t_end());
  so.elements = elements;
  std::vector<double> grid(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i)
    grid[static_cast<size_t>(i)] = n > 1 ? lo + (hi - lo) * i / (n - 1) : lo;
  auto profile = lambda_profile(sf.spec.ms, hess, grid, so, g.threads);
  ConjugateReport rep = conjugate_scan(sf.spec.ms, hess, t_back, std::max(2.0, grid.back()), so);

  Json prof = Json::array();
  for (const auto& [t, l1] : profile) prof.push_back(Json{{"t", t}, {"lambda1", l1}});
  Json result{{"scenario", scenario_json(sf)},
              {"t_max", so.t_max},
              {"profile", std::move(prof)},
              {"conjugate",
               Json{{"found", rep.conjugate_found},
                    {"t_star", rep.conjugate_found ? Json(rep.t_star) : Json()},
                    {"kernel_dim", rep.kernel_dim},
                    {"lambda1_lo", rep.lambda1_lo},
                    {"lambda1_hi", rep.lambda1_hi}}}};
  if (!out.empty()) save_result(out, result);
  std::cout << result.dump(2) << "\n";
  return 0;
}

int cmd_verify(const std::string& scenario, const std::string& out, double tol_hj,
               const GlobalFlags& g) {
  ScenarioFile sf = load_with_overrides(scenario, g);
  const MassSystem& ms = sf.spec.ms;
  Json checks = Json::array();
  bool all = true;
  auto check = [&](const std::string& name, bool pass, double value, double tol) {
    checks.push_back(Json{{"name", name}, {"passed", pass}, {"value", value}, {"tol", tol}});
    all = all && pass;
    std::cerr << (pass ? "PASS " : "FAIL ") << name << "  (value " << value << ", tol " << tol
              << ")\n";
  };

  ValueOptions vo;
  vo.minimize = sf.minimize;
  MinimizeResult mr = minimize_action(sf.spec, sf.minimize);
  ValueResult vr = value_from(sf.spec, mr, vo);
  check("horizon_converged", vr.horizon_converged, vr.T, 0.0);
  const double hp = horizon_exponent(sf.spec.kind);
  bool gaps_decreasing = true;
  double final_gap = 0.0;
  for (size_t k = 0; k + 1 < vr.horizon_history.size(); ++k) {
    const double gap = std::abs(horizon_extrapolated(vr.horizon_history, k + 1, hp) -
                                horizon_extrapolated(vr.horizon_history, k, hp));
    if (k + 2 == vr.horizon_history.size()) final_gap = gap;
    if (k > 0 && gap > std::abs(horizon_extrapolated(vr.horizon_history, k, hp) -
                                horizon_extrapolated(vr.horizon_history, k - 1, hp)) * (1.0 + 1e-9))
      gaps_decreasing = false;
  }
  check("horizon_gaps_decreasing", gaps_decreasing, final_gap, 0.0);

  ActionContext ctx(sf.spec, mr.mesh);
  Trajectory tr = reconstruct(ctx, mr.minima.front().phi);
  const double h_level = sf.spec.asymptotic_energy();
  const double tol_energy = 1e-6 * (1.0 + std::abs(h_level));
  check("energy_conservation_stdev", tr.energy_stdev <= tol_energy, tr.energy_stdev, tol_energy);
  check("energy_level", std::abs(tr.energy_mean - h_level) <= 10 * tol_energy,
        std::abs(tr.energy_mean - h_level), 10 * tol_energy);

  if (vr.k == 1 && vr.hj_residual) {
    check("hj_residual", std::abs(*vr.hj_residual) <= tol_hj, std::abs(*vr.hj_residual), tol_hj);
    GradCheckReport gc = grad_check(sf.spec, 1e-4, 2, vo, &vr);
    check("grad_fd_agreement", gc.max_rel_dev <= 1e-3, gc.max_rel_dev, 1e-3);
  } else {
    check("multiplicity_reported", vr.k >= 2, vr.k, 0.0);
  }

  // structure split consistency and Hardy bound on the computed minimizer
  {
    StructureSplit sp = ctx.structure_split(mr.minima.front().phi);
    // ctx folds the tail into eval, so q + p reproduces action + tail
    const double tot = mr.action + mr.tail;
    const double recon = std::abs(sp.q + sp.p - tot) / (1.0 + std::abs(tot));
    check("structure_split_consistent", recon <= 1e-10, recon, 1e-10);
    PathField f = ctx.field(mr.minima.front().phi);
    if (f.dnorm2(ms) > 1e-30) {
      const double hr = hardy_ratio(ms, f, 0.0);
      check("hardy_bound_minimizer", hr <= 4.0 * (1.0 + 1e-3), hr, 4.0);
    } else {
      check("hardy_bound_minimizer", true, 0.0, 4.0);  // zero field: nothing to bound
    }
  }

  // oracle agreement up to T/10
  {
    std::vector<double> probes;
    const double t_hi = mr.mesh->t_end() / 10.0;
    for (int k = 0; k <= mr.mesh->elements(); ++k) {
      const double t = mr.mesh->node(k);
      if (t > 1.0 && t <= t_hi) probes.push_back(t);
    }
    double worst = 0.0;
    if (!probes.empty()) {
      auto states = integrate_newton_path(ms, 1.0, tr.positions.front(), tr.initial_velocity,
                                          probes, ShootOptions{});
      size_t pi = 0;
      for (int k = 0; k <= mr.mesh->elements() && pi < states.size(); ++k) {
        const double t = mr.mesh->node(k);
        if (!(t > 1.0 && t <= t_hi)) continue;
        const Vec& ref = tr.positions[static_cast<size_t>(k)];
        worst = std::max(worst, (states[pi].x - ref).norm() / (1.0 + ref.norm()));
        ++pi;
      }
    }
    check("ode_oracle_agreement", worst <= 1e-4, worst, 1e-4);
  }

  Json result{{"scenario", scenario_json(sf)},
              {"all_passed", all},
              {"checks", std::move(checks)},
              {"value", value_result_json(vr)}};
  if (!out.empty()) save_result(out, result);
  std::cout << result.dump(2) << "\n";
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"expansive N-body action minimization and Hamilton-Jacobi verification"};
  app.require_subcommand(1);
  app.fallthrough();  // allow --threads/--seed after the subcommand
  GlobalFlags g;
  app.add_option("--threads", g.threads, "worker threads (default: NBODYHJ_THREADS or hardware)");
  auto* seed_opt = app.add_option("--seed", g.seed, "RNG seed override");

  auto* cc = app.add_subcommand("central-config", "minimal central configuration");
  std::vector<double> masses;
  int dim = 2, cc_restarts = 32;
  std::string cluster;
  cc->add_option("--masses", masses, "body masses")->required()->expected(-1);
  cc->add_option("--dim", dim, "spatial dimension");
  cc->add_option("--cluster", cluster, "partition, e.g. \"0,1;2\"");
  cc->add_option("--restarts", cc_restarts, "multistart count");

  auto* solve = app.add_subcommand("solve", "minimize the renormalized action");
  std::string sc_solve, out_solve;
  solve->add_option("--scenario", sc_solve, "scenario JSON")->required();
  solve->add_option("--out", out_solve, "output directory");

  auto* value = app.add_subcommand("value", "value function at x0");
  std::string sc_value;
  bool value_lambda1 = false;
  value->add_option("--scenario", sc_value, "scenario JSON")->required();
  value->add_flag("--lambda1", value_lambda1, "also compute lambda_1");

  auto* scan = app.add_subcommand("scan", "grid scan over a 2-D slice");
  std::string sc_scan, slice_path, out_scan = "scan.csv";
  bool scan_lambda1 = false;
  scan->add_option("--scenario", sc_scan, "scenario JSON")->required();
  scan->add_option("--slice", slice_path, "slice JSON")->required();
  scan->add_option("--out", out_scan, "output CSV");
  scan->add_flag("--lambda1", scan_lambda1, "also compute lambda_1 per point");

  auto* spectrum = app.add_subcommand("spectrum", "lambda_1 profile and conjugate scan");
  std::string sc_spec, t_grid, out_spec;
  double spec_tmax = 1e3;
  int spec_elems = 192;
  spectrum->add_option("--scenario", sc_spec, "scenario JSON")->required();
  spectrum->add_option("--t-grid", t_grid, "left endpoints lo:hi:n");
  spectrum->add_option("--t-max", spec_tmax, "truncation horizon");
  spectrum->add_option("--elements", spec_elems, "mesh elements");
  spectrum->add_option("--out", out_spec, "output JSON");

  auto* verify = app.add_subcommand("verify", "run the invariant suite for a scenario");
  std::string sc_verify, out_verify;
  double tol_hj = 1e-3;
  verify->add_option("--scenario", sc_verify, "scenario JSON")->required();
  verify->add_option("--out", out_verify, "result JSON path");
  verify->add_option("--tol-hj", tol_hj, "HJ residual tolerance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  g.seed_given = seed_opt->count() > 0;

  try {
    if (*cc) return cmd_central_config(masses, dim, cluster, g, cc_restarts);
    if (*solve) return cmd_solve(sc_solve, out_solve, g);
    if (*value) return cmd_value(sc_value, value_lambda1, g);
    if (*scan) return cmd_scan(sc_scan, slice_path, out_scan, scan_lambda1, g);
    if (*spectrum) return cmd_spectrum(sc_spec, t_grid, spec_tmax, spec_elems, out_spec, g);
    if (*verify) return cmd_verify(sc_verify, out_verify, tol_hj, g);
  } catch (const ShapeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
