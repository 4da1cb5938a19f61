#include "nbhj/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace nbhj {

MassSystem::MassSystem(int dim, std::vector<double> masses)
    : d_(dim), m_(std::move(masses)) {
  if (d_ < 2) throw ShapeError("MassSystem: spatial dimension must be >= 2");
  if (m_.size() < 2) throw ShapeError("MassSystem: need at least two bodies");
  for (double m : m_)
    if (!(m > 0.0)) throw ShapeError("MassSystem: masses must be positive");
  mtot_ = std::accumulate(m_.begin(), m_.end(), 0.0);
  mdiag_.resize(dof());
  for (int i = 0; i < bodies(); ++i)
    for (int c = 0; c < d_; ++c) mdiag_[i * d_ + c] = m_[static_cast<size_t>(i)];
}

bool ClusterPartition::is_discrete() const {
  return std::all_of(blocks.begin(), blocks.end(),
                     [](const std::vector<int>& b) { return b.size() == 1; });
}

bool ClusterPartition::is_trivial() const { return blocks.size() == 1; }

int ClusterPartition::block_of(int body) const {
  for (size_t k = 0; k < blocks.size(); ++k)
    for (int i : blocks[k])
      if (i == body) return static_cast<int>(k);
  throw ShapeError("ClusterPartition: body not in any block");
}

void ClusterPartition::validate(int n_bodies) const {
  std::vector<int> seen(static_cast<size_t>(n_bodies), 0);
  for (const auto& b : blocks)
    for (int i : b) {
      if (i < 0 || i >= n_bodies) throw ShapeError("ClusterPartition: index out of range");
      if (seen[static_cast<size_t>(i)]++) throw ShapeError("ClusterPartition: duplicate index");
    }
  for (int s : seen)
    if (!s) throw ShapeError("ClusterPartition: blocks do not cover all bodies");
}

double mass_inner(const MassSystem& ms, const Vec& x, const Vec& y) {
  if (x.size() != ms.dof() || y.size() != ms.dof())
    throw ShapeError("mass_inner: size mismatch with mass system");
  return x.cwiseProduct(ms.metric_diagonal()).dot(y);
}

double mass_norm(const MassSystem& ms, const Vec& x) {
  return std::sqrt(std::max(0.0, mass_inner(ms, x, x)));
}

Vec project_com(const MassSystem& ms, const Vec& raw) {
  if (raw.size() != ms.dof()) throw ShapeError("project_com: size mismatch");
  const int d = ms.dim();
  Eigen::VectorXd com = Eigen::VectorXd::Zero(d);
  for (int i = 0; i < ms.bodies(); ++i) com += ms.mass(i) * body(ms, raw, i);
  com /= ms.total_mass();
  Vec out = raw;
  for (int i = 0; i < ms.bodies(); ++i) out.segment(i * d, d) -= com;
  return out;
}

bool has_zero_barycenter(const MassSystem& ms, const Vec& x, double tol_scale) {
  const int d = ms.dim();
  Eigen::VectorXd com = Eigen::VectorXd::Zero(d);
  for (int i = 0; i < ms.bodies(); ++i) com += ms.mass(i) * body(ms, x, i);
  const double scale = std::max(1.0, x.lpNorm<Eigen::Infinity>());
  return com.lpNorm<Eigen::Infinity>() <= tol_scale * scale * ms.total_mass();
}

double collision_distance(const MassSystem& ms, const Vec& x) {
  // distance in the mass metric to {r_i = r_j} is |r_i - r_j| * sqrt(m_i m_j / (m_i + m_j))
  const int d = ms.dim();
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < ms.bodies(); ++i)
    for (int j = i + 1; j < ms.bodies(); ++j) {
      const double sep = (body(ms, x, i) - body(ms, x, j)).norm();
      const double mu = ms.mass(i) * ms.mass(j) / (ms.mass(i) + ms.mass(j));
      best = std::min(best, sep * std::sqrt(mu));
      (void)d;
    }
  return best;
}

double min_separation(const MassSystem& ms, const Vec& x) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < ms.bodies(); ++i)
    for (int j = i + 1; j < ms.bodies(); ++j)
      best = std::min(best, (body(ms, x, i) - body(ms, x, j)).norm());
  return best;
}

ClusterPartition cluster_from_velocity(const MassSystem& ms, const Vec& a, double tol) {
  if (a.size() != ms.dof()) throw ShapeError("cluster_from_velocity: size mismatch");
  if (tol < 0.0) throw ShapeError("cluster_from_velocity: tol must be >= 0");
  const int n = ms.bodies();
  // union-find over the relation |a_i - a_j| <= tol
  std::vector<int> parent(static_cast<size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int i) {
    while (parent[static_cast<size_t>(i)] != i) i = parent[static_cast<size_t>(i)];
    return i;
  };
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if ((body(ms, a, i) - body(ms, a, j)).norm() <= tol)
        parent[static_cast<size_t>(find(j))] = find(i);
  ClusterPartition part;
  std::vector<int> root_block(static_cast<size_t>(n), -1);
  for (int i = 0; i < n; ++i) {
    int r = find(i);
    if (root_block[static_cast<size_t>(r)] < 0) {
      root_block[static_cast<size_t>(r)] = static_cast<int>(part.blocks.size());
      part.blocks.emplace_back();
    }
    part.blocks[static_cast<size_t>(root_block[static_cast<size_t>(r)])].push_back(i);
  }
  return part;
}

}  // namespace nbhj
