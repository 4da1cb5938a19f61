#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace nbhj {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Thrown when two bodies coincide where the potential must be evaluated.
struct CollisionError : std::runtime_error {
  int body_i, body_j;
  double time;  // NaN when no time is associated
  CollisionError(int i, int j, double t, const std::string& what)
      : std::runtime_error(what), body_i(i), body_j(j), time(t) {}
};

struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct OptimizationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Point masses in dimension d. Configurations are stored flat, body-major:
/// coordinate (i, c) lives at index i*d + c.
class MassSystem {
 public:
  MassSystem(int dim, std::vector<double> masses);

  int dim() const { return d_; }
  int bodies() const { return static_cast<int>(m_.size()); }
  int dof() const { return d_ * bodies(); }
  double mass(int i) const { return m_[static_cast<size_t>(i)]; }
  double total_mass() const { return mtot_; }
  const std::vector<double>& masses() const { return m_; }

  /// Diagonal of the mass metric M, as a flat dof-length vector.
  const Vec& metric_diagonal() const { return mdiag_; }

 private:
  int d_;
  std::vector<double> m_;
  double mtot_;
  Vec mdiag_;
};

/// Partition of the body indices {0..N-1} into disjoint blocks.
struct ClusterPartition {
  std::vector<std::vector<int>> blocks;

  bool is_discrete() const;  // all singletons
  bool is_trivial() const;   // single block
  int block_of(int body) const;
  void validate(int n_bodies) const;
};

double mass_inner(const MassSystem& ms, const Vec& x, const Vec& y);
double mass_norm(const MassSystem& ms, const Vec& x);

/// Subtract the mass-weighted barycenter from every body.
Vec project_com(const MassSystem& ms, const Vec& raw);

bool has_zero_barycenter(const MassSystem& ms, const Vec& x, double tol_scale = 1e-12);

/// Mass-metric distance from x to the nearest collision hyperplane {r_i = r_j}.
double collision_distance(const MassSystem& ms, const Vec& x);

/// Smallest pairwise Euclidean separation |r_i - r_j|.
double min_separation(const MassSystem& ms, const Vec& x);

/// Equivalence classes of bodies under |a_i - a_j| <= tol (transitive closure).
ClusterPartition cluster_from_velocity(const MassSystem& ms, const Vec& a, double tol = 0.0);

inline Eigen::Map<const Eigen::VectorXd> body(const MassSystem& ms, const Vec& x, int i) {
  return Eigen::Map<const Eigen::VectorXd>(x.data() + i * ms.dim(), ms.dim());
}

}  // namespace nbhj
