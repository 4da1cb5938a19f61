#pragma once

#include "nbhj/model.hpp"

namespace nbhj {

/// Newtonian potential U(x) = sum_{i<j} m_i m_j / |r_i - r_j| and its
/// derivatives in flat coordinates. Gradients are Euclidean, so Newton's
/// equations read M xdd = grad U(x).
///
/// Every routine throws CollisionError when a required pair coincides.
/// An optional ClusterPartition restricts the pair sum to intra-cluster
/// pairs (the clustered potential U_a); pass nullptr for the full sum.

double u_value(const MassSystem& ms, const Vec& x, const ClusterPartition* part = nullptr);
Vec u_gradient(const MassSystem& ms, const Vec& x, const ClusterPartition* part = nullptr);
Vec u_hessian_apply(const MassSystem& ms, const Vec& x, const Vec& psi,
                    const ClusterPartition* part = nullptr);
Mat u_hessian_matrix(const MassSystem& ms, const Vec& x, const ClusterPartition* part = nullptr);

inline double u_clustered(const MassSystem& ms, const ClusterPartition& part, const Vec& x) {
  return u_value(ms, x, &part);
}

}  // namespace nbhj
