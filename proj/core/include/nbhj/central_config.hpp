#pragma once

#include <cstdint>
#include <vector>

#include "nbhj/model.hpp"

namespace nbhj {

struct CentralConfigOptions {
  int restarts = 32;
  int max_iters = 5000;
  double tol = 1e-11;        // KKT residual target
  std::uint64_t seed = 0;
  int threads = 1;
};

struct CentralConfigResult {
  Vec b_m;               // on the inertia ellipsoid <M b, b> = 1
  double u_min = 0.0;
  double beta = 0.0;     // cbrt(9/2 * u_min)
  double kkt_residual = 0.0;
  int converged_restarts = 0;
  double value_spread = 0.0;  // max - min accepted U over restarts (seed sensitivity)
};

/// Minimal central configuration: minimize U over the inertia ellipsoid by
/// projected gradient with Barzilai-Borwein steps, best of `restarts` seeds.
CentralConfigResult find_minimal_central(const MassSystem& ms, const Vec& seed,
                                         const CentralConfigOptions& opts = {});

/// Per-cluster minimal central configurations of the clustered potential.
/// Each block with >= 2 bodies is solved in its own restricted mass form and
/// embedded into the full configuration space (zeros outside the cluster).
/// Singleton blocks contribute nothing.
struct ClusteredCentralConfig {
  std::vector<int> block_index;             // blocks with internal structure
  std::vector<CentralConfigResult> per_cluster;
  Vec embedded_scaled;                      // sum over clusters of beta_K * b^K, full dof
};

ClusteredCentralConfig find_minimal_clustered(const MassSystem& ms, const ClusterPartition& part,
                                              const Vec& seed, const CentralConfigOptions& opts = {});

}  // namespace nbhj
