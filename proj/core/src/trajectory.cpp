#include "nbhj/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "nbhj/potential.hpp"

namespace nbhj {

double mechanical_energy(const MassSystem& ms, const Vec& x, const Vec& v) {
  return 0.5 * mass_inner(ms, v, v) - u_value(ms, x);
}

namespace {

// Dormand-Prince 5(4) tableau
constexpr double A21 = 1.0 / 5;
constexpr double A31 = 3.0 / 40, A32 = 9.0 / 40;
constexpr double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9;
constexpr double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561,
                 A54 = -212.0 / 729;
constexpr double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247, A64 = 49.0 / 176,
                 A65 = -5103.0 / 18656;
constexpr double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192, B5 = -2187.0 / 6784,
                 B6 = 11.0 / 84;
constexpr double E1 = 35.0 / 384 - 5179.0 / 57600, E3 = 500.0 / 1113 - 7571.0 / 16695,
                 E4 = 125.0 / 192 - 393.0 / 640, E5 = -2187.0 / 6784 + 92097.0 / 339200,
                 E6 = 11.0 / 84 - 187.0 / 2100, E7 = -1.0 / 40;

std::pair<int, int> nearest_pair(const MassSystem& ms, const Vec& x) {
  double best = std::numeric_limits<double>::infinity();
  std::pair<int, int> p{0, 1};
  for (int i = 0; i < ms.bodies(); ++i)
    for (int j = i + 1; j < ms.bodies(); ++j) {
      const double s = (body(ms, x, i) - body(ms, x, j)).norm();
      if (s < best) {
        best = s;
        p = {i, j};
      }
    }
  return p;
}

// state y = (x, v); ydot = (v, M^-1 grad U(x))
Vec newton_rhs(const MassSystem& ms, const Vec& y) {
  const int n = ms.dof();
  Vec out(2 * n);
  out.head(n) = y.tail(n);
  out.tail(n) = u_gradient(ms, y.head(n)).cwiseQuotient(ms.metric_diagonal());
  return out;
}

struct StepRecord {
  double t0, t1;
  Vec y0, y1;   // accepted states
  Vec f0, f1;   // derivatives at both ends (for Hermite sampling)
};

/// Adaptive integration; on_step is called after every accepted step.
template <typename OnStep>
OdeState integrate_core(const MassSystem& ms, double t0, Vec x, Vec v, double t_end,
                        const ShootOptions& opts, OnStep&& on_step) {
  const int n = ms.dof();
  if (x.size() != n || v.size() != n) throw ShapeError("integrate_newton: size mismatch");
  const double guard = opts.guard_factor * min_separation(ms, x);
  const double e0 = mechanical_energy(ms, x, v);

  OdeState st;
  st.t = t0;
  st.x = std::move(x);
  st.v = std::move(v);
  if (t_end == t0) return st;
  const double dir = t_end > t0 ? 1.0 : -1.0;

  Vec y(2 * n);
  y.head(n) = st.x;
  y.tail(n) = st.v;
  Vec f1 = newton_rhs(ms, y);
  double h = dir * std::min(1e-3, std::abs(t_end - t0));

  while (dir * (t_end - st.t) > 0.0) {
    if (++st.steps > opts.max_steps) throw OptimizationError("integrate_newton: step limit");
    if (std::abs(h) < 1e-14 * std::max(1.0, std::abs(st.t))) {
      const auto p = nearest_pair(ms, y.head(n));
      throw CollisionError(p.first, p.second, st.t, "integrate_newton: step underflow (near collision)");
    }
    if (dir * (st.t + h - t_end) > 0.0) h = t_end - st.t;

    Vec k2, k3, k4, k5, k6, k7;
    Vec y_new;
    double err;
    try {
      k2 = newton_rhs(ms, y + h * (A21 * f1));
      k3 = newton_rhs(ms, y + h * (A31 * f1 + A32 * k2));
      k4 = newton_rhs(ms, y + h * (A41 * f1 + A42 * k2 + A43 * k3));
      k5 = newton_rhs(ms, y + h * (A51 * f1 + A52 * k2 + A53 * k3 + A54 * k4));
      k6 = newton_rhs(ms, y + h * (A61 * f1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5));
      y_new = y + h * (B1 * f1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6);
      k7 = newton_rhs(ms, y_new);
      const Vec e = h * (E1 * f1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);
      double acc = 0.0;
      for (int i = 0; i < 2 * n; ++i) {
        const double sc = opts.atol + opts.rtol * std::max(std::abs(y[i]), std::abs(y_new[i]));
        acc += (e[i] / sc) * (e[i] / sc);
      }
      err = std::sqrt(acc / (2 * n));
    } catch (const CollisionError&) {
      h *= 0.25;  // stage left the feasible region; retry smaller
      continue;
    }

    if (err > 1.0) {
      h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
      continue;
    }

    StepRecord rec{st.t, st.t + h, y, y_new, f1, k7};
    st.t += h;
    y = std::move(y_new);
    f1 = std::move(k7);
    st.x = y.head(n);
    st.v = y.tail(n);
    st.energy_drift =
        std::max(st.energy_drift, std::abs(mechanical_energy(ms, st.x, st.v) - e0));
    if (min_separation(ms, st.x) < guard) {
      const auto p = nearest_pair(ms, st.x);
      throw CollisionError(p.first, p.second, st.t, "integrate_newton: inside collision guard");
    }
    on_step(rec, st);
    h *= std::min(5.0, std::max(0.2, 0.9 * std::pow(std::max(err, 1e-10), -0.2)));
  }
  return st;
}

Vec hermite(const StepRecord& r, double t, int half, int n) {
  // cubic Hermite on [t0, t1] for the selected half of the state
  const double h = r.t1 - r.t0;
  const double s = (t - r.t0) / h;
  const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
  const double h10 = s * (1 - s) * (1 - s);
  const double h01 = s * s * (3 - 2 * s);
  const double h11 = s * s * (s - 1);
  const int off = half * n;
  return h00 * r.y0.segment(off, n) + h10 * h * r.f0.segment(off, n) +
         h01 * r.y1.segment(off, n) + h11 * h * r.f1.segment(off, n);
}

}  // namespace

OdeState integrate_newton(const MassSystem& ms, double t0, Vec x, Vec v, double t1,
                          const ShootOptions& opts) {
  return integrate_core(ms, t0, std::move(x), std::move(v), t1, opts,
                        [](const StepRecord&, const OdeState&) {});
}

std::vector<OdeState> integrate_newton_path(const MassSystem& ms, double t0, Vec x, Vec v,
                                            const std::vector<double>& times,
                                            const ShootOptions& opts) {
  std::vector<OdeState> out;
  if (times.empty()) return out;
  const int n = ms.dof();
  const double dir = times.back() >= t0 ? 1.0 : -1.0;
  size_t next = 0;
  auto emit_exact = [&](const OdeState& st) {
    while (next < times.size() && times[next] == st.t) {
      out.push_back(st);
      ++next;
    }
  };
  OdeState start;
  start.t = t0;
  start.x = x;
  start.v = v;
  emit_exact(start);
  OdeState last = integrate_core(ms, t0, std::move(x), std::move(v), times.back(), opts,
                 [&](const StepRecord& rec, const OdeState& st) {
                   while (next < times.size() && dir * (times[next] - rec.t1) < 0.0) {
                     OdeState s;
                     s.t = times[next];
                     s.x = hermite(rec, s.t, 0, n);
                     s.v = hermite(rec, s.t, 1, n);
                     s.energy_drift = st.energy_drift;
                     s.steps = st.steps;
                     out.push_back(std::move(s));
                     ++next;
                   }
                   emit_exact(st);
                 });
  while (next < times.size()) {  // rounding can leave the terminal sample pending
    last.t = times[next];
    out.push_back(last);
    ++next;
  }
  return out;
}

Trajectory reconstruct(const ActionContext& ctx, const Vec& phi, const ShootOptions& opts) {
  const ScenarioSpec& spec = ctx.scenario();
  const MassSystem& ms = spec.ms;
  const int n = ms.dof();
  const auto& mesh = *ctx.mesh();
  const int K = mesh.elements();
  PathField f = ctx.field(phi);
  const Vec offset = spec.offset();

  Trajectory tr;
  tr.times.resize(static_cast<size_t>(K) + 1);
  tr.positions.resize(static_cast<size_t>(K) + 1);
  std::vector<Vec> accel(static_cast<size_t>(K) + 1);
  for (int k = 0; k <= K; ++k) {
    tr.times[static_cast<size_t>(k)] = mesh.node(k);
    tr.positions[static_cast<size_t>(k)] = spec.r0(mesh.node(k)) + f.at_node(k) + offset;
    accel[static_cast<size_t>(k)] =
        u_gradient(ms, tr.positions[static_cast<size_t>(k)]).cwiseQuotient(ms.metric_diagonal());
  }

  // Hermite-consistent nodal velocities from positions + analytic accelerations
  tr.velocities.resize(static_cast<size_t>(K) + 1);
  for (int k = 0; k <= K; ++k) {
    Vec est = Vec::Zero(n);
    int cnt = 0;
    if (k < K) {  // left-end formula on element k
      const double h = mesh.h(k);
      est += (tr.positions[static_cast<size_t>(k) + 1] - tr.positions[static_cast<size_t>(k)]) / h -
             h * (2.0 * accel[static_cast<size_t>(k)] + accel[static_cast<size_t>(k) + 1]) / 6.0;
      ++cnt;
    }
    if (k > 0) {  // right-end formula on element k-1
      const double h = mesh.h(k - 1);
      est += (tr.positions[static_cast<size_t>(k)] - tr.positions[static_cast<size_t>(k) - 1]) / h +
             h * (accel[static_cast<size_t>(k) - 1] + 2.0 * accel[static_cast<size_t>(k)]) / 6.0;
      ++cnt;
    }
    tr.velocities[static_cast<size_t>(k)] = est / cnt;
  }

  // Newton-collocation polish of gamma_dot(1): shoot from (x0, v) and match
  // the first node at t >= 2 (or the last node on short meshes).
  tr.initial_velocity = tr.velocities.front();
  bool polished = false;
  if (opts.polish) {
    int m = K;
    for (int k = 1; k <= K; ++k)
      if (mesh.node(k) >= 2.0) {
        m = k;
        break;
      }
    const Vec& target = tr.positions[static_cast<size_t>(m)];
    const double tm = mesh.node(m);
    try {
      Vec v1 = tr.initial_velocity;
      for (int it = 0; it < 4; ++it) {
        const Vec r = integrate_newton(ms, 1.0, tr.positions.front(), v1, tm, opts).x - target;
        if (r.norm() <= 1e-12 * (1.0 + target.norm())) break;
        const double eps = 1e-7 * (1.0 + v1.norm());
        Mat J(n, n);
        for (int c = 0; c < n; ++c) {
          Vec vp = v1;
          vp[c] += eps;
          J.col(c) =
              (integrate_newton(ms, 1.0, tr.positions.front(), vp, tm, opts).x - target - r) / eps;
        }
        v1 -= J.fullPivLu().solve(r);
      }
      tr.initial_velocity = v1;
      tr.velocities.front() = v1;
      polished = true;
    } catch (const CollisionError&) {
      // keep the Hermite estimate if the shot grazes a collision
    }
  }

  // With a polished initial velocity, take velocities and energies along the
  // shot Newton flow: the Hermite nodal estimates carry O(h^2) interpolation
  // error that would otherwise dominate both.
  tr.energy.resize(static_cast<size_t>(K) + 1);
  if (polished) {
    try {
      const std::vector<double> ts(tr.times.begin() + 1, tr.times.end());
      auto states = integrate_newton_path(ms, 1.0, tr.positions.front(), tr.initial_velocity,
                                          ts, opts);
      tr.energy[0] = mechanical_energy(ms, tr.positions.front(), tr.initial_velocity);
      for (int k = 1; k <= K; ++k) {
        tr.velocities[static_cast<size_t>(k)] = states[static_cast<size_t>(k) - 1].v;
        tr.energy[static_cast<size_t>(k)] = mechanical_energy(
            ms, states[static_cast<size_t>(k) - 1].x, states[static_cast<size_t>(k) - 1].v);
      }
    } catch (const CollisionError&) {
      polished = false;
    }
  }
  if (!polished)
    for (int k = 0; k <= K; ++k)
      tr.energy[static_cast<size_t>(k)] = mechanical_energy(
          ms, tr.positions[static_cast<size_t>(k)], tr.velocities[static_cast<size_t>(k)]);
  double sum = 0.0, sum2 = 0.0;
  for (int k = 1; k < K; ++k) sum += tr.energy[static_cast<size_t>(k)];
  tr.energy_mean = sum / std::max(1, K - 1);
  for (int k = 1; k < K; ++k) {
    const double d = tr.energy[static_cast<size_t>(k)] - tr.energy_mean;
    sum2 += d * d;
  }
  tr.energy_stdev = std::sqrt(sum2 / std::max(1, K - 1));
  return tr;
}

AsymptoticsFit hyperbolic_asymptotics(const Trajectory& traj, const ScenarioSpec& spec) {
  if (spec.kind != MotionClass::Hyperbolic)
    throw ShapeError("hyperbolic_asymptotics: hyperbolic scenario required");
  const double T = traj.times.back();
  if (T < 1e3) throw std::range_error("hyperbolic_asymptotics: horizon below 1e3");
  const int n = spec.ms.dof();

  double s_ll = 0.0, s_l1 = 0.0, s_11 = 0.0;
  Vec b_l = Vec::Zero(n), b_1 = Vec::Zero(n);
  std::vector<size_t> rows;
  for (size_t k = 0; k < traj.times.size(); ++k) {
    const double t = traj.times[k];
    if (t < T / 10.0) continue;
    rows.push_back(k);
    const double l = std::log(t);
    const Vec y = traj.positions[k] - spec.a * t;
    s_ll += l * l;
    s_l1 += l;
    s_11 += 1.0;
    b_l += l * y;
    b_1 += y;
  }
  if (rows.size() < 4) throw std::range_error("hyperbolic_asymptotics: too few nodes in the last decade");
  const double det = s_ll * s_11 - s_l1 * s_l1;

  AsymptoticsFit fit;
  fit.w_fit = (s_11 * b_l - s_l1 * b_1) / det;
  const Vec c = (s_ll * b_1 - s_l1 * b_l) / det;
  double res2 = 0.0;
  for (size_t k : rows) {
    const double l = std::log(traj.times[k]);
    res2 += (traj.positions[k] - spec.a * traj.times[k] - l * fit.w_fit - c).squaredNorm();
  }
  fit.residual_rms = std::sqrt(res2 / (static_cast<double>(rows.size()) * n));
  fit.w_expected = -u_gradient(spec.ms, spec.a).cwiseQuotient(spec.ms.metric_diagonal());
  fit.rel_error = (fit.w_fit - fit.w_expected).norm() / fit.w_expected.norm();
  return fit;
}

std::vector<PairGrowth> growth_diagnostics(const MassSystem& ms, const Trajectory& traj) {
  const double T = traj.times.back();
  std::vector<PairGrowth> out;
  for (int i = 0; i < ms.bodies(); ++i) {
    for (int j = i + 1; j < ms.bodies(); ++j) {
      double s_ll = 0.0, s_l1 = 0.0, s_11 = 0.0, b_l = 0.0, b_1 = 0.0;
      for (size_t k = 0; k < traj.times.size(); ++k) {
        const double t = traj.times[k];
        if (t < T / 10.0) continue;
        const double sep = (body(ms, traj.positions[k], i) - body(ms, traj.positions[k], j)).norm();
        if (sep <= 0.0) continue;
        const double l = std::log(t), y = std::log(sep);
        s_ll += l * l;
        s_l1 += l;
        s_11 += 1.0;
        b_l += l * y;
        b_1 += y;
      }
      PairGrowth g;
      g.i = i;
      g.j = j;
      const double det = s_ll * s_11 - s_l1 * s_l1;
      g.exponent = det != 0.0 ? (s_11 * b_l - s_l1 * b_1) / det
                              : std::numeric_limits<double>::quiet_NaN();
      out.push_back(g);
    }
  }
  return out;
}

void write_trajectory_csv(std::ostream& os, const MassSystem& ms, const Trajectory& traj) {
  const int d = ms.dim();
  os << "t";
  for (int i = 0; i < ms.bodies(); ++i)
    for (int c = 0; c < d; ++c) os << ",x" << i << "_" << c;
  for (int i = 0; i < ms.bodies(); ++i)
    for (int c = 0; c < d; ++c) os << ",v" << i << "_" << c;
  os << ",energy\n";
  char buf[40];
  auto put = [&](double x) {
    std::snprintf(buf, sizeof buf, "%.17g", x);
    os << buf;
  };
  for (size_t k = 0; k < traj.times.size(); ++k) {
    put(traj.times[k]);
    for (int i = 0; i < ms.dof(); ++i) {
      os << ",";
      put(traj.positions[k][i]);
    }
    for (int i = 0; i < ms.dof(); ++i) {
      os << ",";
      put(traj.velocities[k][i]);
    }
    os << ",";
    put(traj.energy[k]);
    os << "\n";
  }
}

PathSampler::PathSampler(const MassSystem& ms, const Trajectory& traj, double t_min,
                         const ShootOptions& opts) {
  if (traj.times.empty()) throw ShapeError("PathSampler: empty trajectory");
  if (t_min < traj.times.front()) {
    // backward extension on a geometric grid down to t_min
    const double t1 = traj.times.front();
    constexpr int kBack = 32;
    std::vector<double> back(kBack);
    for (int j = 0; j < kBack; ++j)
      back[static_cast<size_t>(j)] = t1 * std::pow(t_min / t1, double(j + 1) / kBack);
    auto states =
        integrate_newton_path(ms, t1, traj.positions.front(), traj.initial_velocity, back, opts);
    for (auto it = states.rbegin(); it != states.rend(); ++it) {
      ts_.push_back(it->t);
      xs_.push_back(it->x);
      vs_.push_back(it->v);
    }
  }
  for (size_t k = 0; k < traj.times.size(); ++k) {
    ts_.push_back(traj.times[k]);
    xs_.push_back(traj.positions[k]);
    vs_.push_back(traj.velocities[k]);
  }
}

Vec PathSampler::position(double t) const {
  if (t < ts_.front() - 1e-12 || t > ts_.back() + 1e-12)
    throw std::range_error("PathSampler: time outside the sampled range");
  t = std::clamp(t, ts_.front(), ts_.back());
  const auto it = std::upper_bound(ts_.begin(), ts_.end(), t);
  size_t e = static_cast<size_t>(std::max<std::ptrdiff_t>(it - ts_.begin() - 1, 0));
  if (e + 1 >= ts_.size()) e = ts_.size() - 2;
  const double h = ts_[e + 1] - ts_[e];
  const double s = (t - ts_[e]) / h;
  const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
  const double h10 = s * (1 - s) * (1 - s);
  const double h01 = s * s * (3 - 2 * s);
  const double h11 = s * s * (s - 1);
  return h00 * xs_[e] + h10 * h * vs_[e] + h01 * xs_[e + 1] + h11 * h * vs_[e + 1];
}

}  // namespace nbhj
