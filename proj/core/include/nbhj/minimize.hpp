#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "nbhj/action.hpp"

namespace nbhj {

/// Objective callback: value at x, gradient written to *grad when non-null.
/// May throw CollisionError; the line search treats that as +infinity.
using Objective = std::function<double(const Vec&, Vec*)>;
using HessApply = std::function<void(const Vec&, const Vec&, Vec&)>;

struct SolverOptions {
  int memory = 10;          // L-BFGS history
  int max_iters = 2000;
  double tol_grad = 1e-8;
  double c1 = 1e-4;         // Armijo
  double c2 = 0.9;          // curvature
};

struct SolverReport {
  double value = 0.0;
  double grad_norm = 0.0;
  int iters = 0;
  bool converged = false;
};

SolverReport lbfgs(const Objective& fn, Vec& x, const SolverOptions& opts = {});

/// A few Newton steps with CG inner solves (truncated on negative curvature),
/// to sharpen an L-BFGS minimum. Falls back to steepest descent directions.
SolverReport newton_cg(const Objective& fn, const HessApply& hess, Vec& x,
                       const SolverOptions& opts = {});

struct MinimizeOptions {
  int nodes_per_decade = 64;      // mesh resolution: K ~ npd * log10(T)
  int min_elements = 32;
  double t_initial = 100.0;
  double t_max = 1e7;
  double tol_grad = 1e-8;
  double tol_horizon = 1e-6;      // relative gap between tail-corrected values
  int restarts = 9;               // zero seed + mirrored perturbation pairs
  double perturb_sigma = 0.3;
  std::uint64_t seed = 0;
  int threads = 1;
  bool polish = true;
  bool with_tail = true;          // fold the frozen-phi tail into the objective
  int max_doublings = 12;
  SolverOptions solver;
};

struct LocalMinimum {
  Vec phi;
  double action = 0.0;  // objective value (includes the tail when folded in)
  double grad_norm = 0.0;
};

struct HorizonRecord {
  double T = 0.0;
  int elements = 0;
  double action = 0.0;      // discrete action of the best minimum
  double tail = 0.0;        // frozen-phi tail integral beyond T
  double corrected() const { return action + tail; }
};

struct MinimizeResult {
  std::shared_ptr<const TimeMesh> mesh;
  std::vector<LocalMinimum> minima;   // distinct, ascending action
  int multiplicity = 0;               // minima tied with the best, k >= 1
  double action = 0.0;                // best discrete action
  double tail = 0.0;
  double value_corrected = 0.0;       // horizon-extrapolated action + tail
  std::vector<HorizonRecord> horizon_history;
  bool horizon_converged = false;
};

/// Leading error exponent p of the tail-corrected value in 1/T: restricting
/// paths to be constant beyond T costs O(T^-1) for hyperbolic motion (the
/// log-time drift of the true path) but O(T^-1/3) when a parabolic cluster is
/// present (its slowest internal mode grows like t^1/3).
double horizon_exponent(MotionClass kind);

/// Corrected value at record k after Richardson extrapolation in the horizon:
/// the tail-corrected sequence has error terms T^-p, T^-2p, ..., and each
/// doubling divides the m-th term by 2^(m p); the table eliminates up to four
/// of them. The first record has no predecessor and is returned raw.
double horizon_extrapolated(const std::vector<HorizonRecord>& history, size_t k, double p = 1.0);

/// Full pipeline: multistart L-BFGS (+ Newton polish) on the initial horizon,
/// then horizon doubling with extension-by-constant warm starts until the
/// tail-corrected action settles. Deterministic for fixed seed, independent
/// of the thread count.
MinimizeResult minimize_action(const ScenarioSpec& spec, const MinimizeOptions& opts = {});

/// Cluster converged minima by D-distance and count those whose action ties
/// with the best within tol_action. Returns distinct representatives sorted
/// by action; multiplicity is written to *k.
std::vector<LocalMinimum> distinct_minima(const ActionContext& ctx,
                                          std::vector<LocalMinimum> found,
                                          int* k,
                                          double rel_cluster = 1e-3,
                                          double rel_action = 1e-5);

}  // namespace nbhj
