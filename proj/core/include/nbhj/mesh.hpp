#pragma once

#include <memory>
#include <vector>

#include "nbhj/model.hpp"

namespace nbhj {

/// Graded mesh on [1, T]: nodes t_k = T^(k/K), so elements grow geometrically
/// and resolution concentrates near t = 1 where the integrands are largest.
class TimeMesh {
 public:
  static constexpr double kMaxRatio = 32.0;

  TimeMesh(std::vector<double> nodes);
  static std::shared_ptr<const TimeMesh> graded(double T, int elements);
  static std::shared_ptr<const TimeMesh> graded_interval(double t0, double T, int elements);

  int elements() const { return static_cast<int>(nodes_.size()) - 1; }
  double node(int k) const { return nodes_[static_cast<size_t>(k)]; }
  double h(int e) const { return nodes_[static_cast<size_t>(e) + 1] - nodes_[static_cast<size_t>(e)]; }
  double t_begin() const { return nodes_.front(); }
  double t_end() const { return nodes_.back(); }
  const std::vector<double>& nodes() const { return nodes_; }

 private:
  std::vector<double> nodes_;
};

/// Piecewise-linear perturbation field on a TimeMesh with phi(t_0) = 0.
/// The unknowns are the values at nodes 1..K, stored flat (node-major).
struct PathField {
  std::shared_ptr<const TimeMesh> mesh;
  int n = 0;   // dof per node
  Vec values;  // size elements() * n

  PathField() = default;
  PathField(std::shared_ptr<const TimeMesh> m, int dof_per_node);
  PathField(std::shared_ptr<const TimeMesh> m, int dof_per_node, Vec vals)
      : mesh(std::move(m)), n(dof_per_node), values(std::move(vals)) {}

  Vec at_node(int k) const;          // k = 0 gives zero
  Vec at_time(double t) const;       // linear interpolation, constant beyond T
  double dnorm2(const MassSystem& ms) const;
};

/// Interpolate a field onto a new mesh (linear inside, constant beyond T_old).
PathField transfer_field(const PathField& f, std::shared_ptr<const TimeMesh> target);

/// (weighted L2 mass) / (D-norm^2): integral of |phi|_M^2 / t^(2+eps) over the
/// mesh divided by the squared D-norm. Bounded by 4/(1+eps)^2.
double hardy_ratio(const MassSystem& ms, const PathField& phi, double eps);

/// Gauss-Legendre 2-point rule on (0,1): points and weights.
inline constexpr double kGauss2Theta[2] = {0.21132486540518711775, 0.78867513459481288225};
inline constexpr double kGauss2Weight[2] = {0.5, 0.5};

}  // namespace nbhj
