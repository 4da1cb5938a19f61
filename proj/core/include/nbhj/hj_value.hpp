#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nbhj/minimize.hpp"
#include "nbhj/spectral.hpp"
#include "nbhj/trajectory.hpp"

namespace nbhj {

struct ValueOptions {
  MinimizeOptions minimize;
  bool want_lambda1 = false;
  SpectralOptions spectral;    // used when want_lambda1 (t_max clamped to horizon)
  double r_min = 1e-3;         // near-collision exclusion radius for scans
};

struct ValueResult {
  double v = 0.0;              // tail-corrected full-horizon value, minus <a,x>_M
  double v_T = 0.0;            // working-horizon value, minus <r0_dot(T),x>_M
  std::optional<Vec> grad_v;   // -M gamma_dot(1), present when k = 1
  std::optional<double> hj_residual;  // 1/2|grad v|^2_{M^-1} - U(x) - |a|^2_M/2
  int k = 1;                   // minimizer multiplicity
  std::optional<double> lambda1;
  double T = 0.0;              // final horizon
  double action = 0.0;         // discrete renormalized action minimum
  double tail = 0.0;
  bool horizon_converged = false;
  std::vector<HorizonRecord> horizon_history;
  std::vector<Vec> initial_velocities;  // gamma_dot(1) of each tied minimizer
};

ScenarioSpec with_x(const ScenarioSpec& spec, const Vec& x);

ValueResult value_at(const ScenarioSpec& spec, const ValueOptions& opts = {});

/// Same as value_at with the minimization already done (mr must come from
/// minimize_action on this spec).
ValueResult value_from(const ScenarioSpec& spec, const MinimizeResult& mr,
                       const ValueOptions& opts = {});

/// Central differences of v along `directions` random zero-barycenter unit
/// vectors, against grad_v. All evaluations share the base point's horizon.
struct GradCheckReport {
  bool differentiable = true;  // false when k > 1
  double max_rel_dev = 0.0;
  Vec grad_v;
};
/// Pass `base` to skip recomputing the value at x; probes run single-restart
/// at the base horizon.
GradCheckReport grad_check(const ScenarioSpec& spec, double h_fd, int directions,
                           const ValueOptions& opts = {}, const ValueResult* base = nullptr);

/// Direct Bolza value u(T,x): minimize the plain action of eta = x + psi over
/// [1,T] minus <r0_dot(T), eta(T)>_M, no renormalization. Also evaluates the
/// identity linking u and the fixed-horizon renormalized value.
struct BolzaReport {
  double u = 0.0;
  double v_T = 0.0;                // independent renormalized computation
  double reference_integral = 0.0; // int_1^T 1/2|r0_dot|^2_M + U(r0) dt
  double identity_residual = 0.0;  // relative
  double terminal_residual = 0.0;  // |eta_dot(T) - r0_dot(T)|
};
BolzaReport bolza_u(const ScenarioSpec& spec, double T, const ValueOptions& opts = {});

/// max over z_set of (v(x+z) + v(x-z) - 2 v(x)) / |z|^2_M; probes that land
/// on a collision are skipped.
double semiconcavity_probe(const MassSystem& ms, const std::function<double(const Vec&)>& value,
                           const Vec& x, const std::vector<Vec>& z_set);

/// 2-D affine slice x(s1,s2) = center + s1 e1 + s2 e2, re-projected to zero
/// barycenter at every grid point.
struct GridSlice {
  Vec center, e1, e2;
  double s1_min = -1.0, s1_max = 1.0;
  double s2_min = -1.0, s2_max = 1.0;
  int n1 = 5, n2 = 5;
};

struct ScanRecord {
  int i = 0, j = 0;
  Vec x;
  double v = 0.0, v_T = 0.0;
  int k = 0;
  double lambda1 = 0.0;
  double hj_residual = 0.0;
  double grad_norm = 0.0;
  double coll_dist = 0.0;
  std::string status;  // ok | near_delta | error:<reason>
  double wall_time = 0.0;
};

std::vector<ScanRecord> scan_grid(const ScenarioSpec& spec, const GridSlice& grid,
                                  const ValueOptions& opts = {}, int threads = 1);

void write_scan_csv(std::ostream& os, const MassSystem& ms, const std::vector<ScanRecord>& recs);

}  // namespace nbhj
