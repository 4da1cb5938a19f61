#pragma once

#include <iosfwd>
#include <vector>

#include "nbhj/action.hpp"

namespace nbhj {

/// gamma = r0 + phi + (x0 - r0(1)) sampled at the mesh nodes, with
/// reconstructed velocities and per-node mechanical energy.
struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> positions;
  std::vector<Vec> velocities;
  Vec initial_velocity;            // gamma_dot(1), shooting-polished
  std::vector<double> energy;      // 1/2 |v|_M^2 - U(x)
  double energy_mean = 0.0;        // over interior nodes
  double energy_stdev = 0.0;
};

struct ShootOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  double guard_factor = 1e-6;      // collision radius relative to initial min separation
  long max_steps = 2000000;
  bool polish = true;              // Newton-collocation correction of gamma_dot(1)
};

double mechanical_energy(const MassSystem& ms, const Vec& x, const Vec& v);

struct OdeState {
  double t = 0.0;
  Vec x, v;
  double energy_drift = 0.0;       // max |E - E(t0)| over accepted steps so far
  long steps = 0;
};

/// Embedded Dormand-Prince 5(4) integration of M xdd = grad U(x); forward or
/// backward in time. Throws CollisionError when a pair enters the guard radius.
OdeState integrate_newton(const MassSystem& ms, double t0, Vec x, Vec v, double t1,
                          const ShootOptions& opts = {});

/// Same, sampling the state at each time in `times` (monotone, starting at t0).
std::vector<OdeState> integrate_newton_path(const MassSystem& ms, double t0, Vec x, Vec v,
                                            const std::vector<double>& times,
                                            const ShootOptions& opts = {});

Trajectory reconstruct(const ActionContext& ctx, const Vec& phi, const ShootOptions& opts = {});

/// Least-squares fit of gamma(t) - a t against w log t + c on the last decade.
/// The expected log coefficient is -M^{-1} grad U(a).
struct AsymptoticsFit {
  Vec w_fit, w_expected;
  double rel_error = 0.0;          // |w_fit - w_expected| / |w_expected|
  double residual_rms = 0.0;       // scale of the O(1) remainder
};
AsymptoticsFit hyperbolic_asymptotics(const Trajectory& traj, const ScenarioSpec& spec);

/// Log-log growth exponent of each pairwise distance over the last decade.
struct PairGrowth {
  int i = 0, j = 0;
  double exponent = 0.0;
};
std::vector<PairGrowth> growth_diagnostics(const MassSystem& ms, const Trajectory& traj);

/// Columns: t, body-major positions, velocities, energy.
void write_trajectory_csv(std::ostream& os, const MassSystem& ms, const Trajectory& traj);

/// C^1 evaluation of gamma at arbitrary times: cubic Hermite through the
/// trajectory nodes, with an ODE backward extension below the first node
/// (shot from (gamma(1), gamma_dot(1)) reversed in time).
class PathSampler {
 public:
  PathSampler(const MassSystem& ms, const Trajectory& traj, double t_min,
              const ShootOptions& opts = {});

  Vec position(double t) const;
  double t_min() const { return ts_.front(); }
  double t_max() const { return ts_.back(); }

 private:
  std::vector<double> ts_;
  std::vector<Vec> xs_, vs_;
};

}  // namespace nbhj
