#include "nbhj/potential.hpp"

#include <cmath>
#include <limits>

namespace nbhj {

namespace {

constexpr double kSepFloor = 1e-300;

template <typename PairFn>
void for_pairs(const MassSystem& ms, const ClusterPartition* part, PairFn&& fn) {
  if (part == nullptr) {
    for (int i = 0; i < ms.bodies(); ++i)
      for (int j = i + 1; j < ms.bodies(); ++j) fn(i, j);
  } else {
    for (const auto& block : part->blocks)
      for (size_t p = 0; p < block.size(); ++p)
        for (size_t q = p + 1; q < block.size(); ++q) fn(block[p], block[q]);
  }
}

[[noreturn]] void throw_collision(int i, int j) {
  throw CollisionError(i, j, std::numeric_limits<double>::quiet_NaN(),
                       "potential: bodies " + std::to_string(i) + " and " +
                           std::to_string(j) + " coincide");
}

}  // namespace

double u_value(const MassSystem& ms, const Vec& x, const ClusterPartition* part) {
  if (x.size() != ms.dof()) throw ShapeError("u_value: size mismatch");
  double u = 0.0;
  for_pairs(ms, part, [&](int i, int j) {
    const double s = (body(ms, x, i) - body(ms, x, j)).norm();
    if (s < kSepFloor) throw_collision(i, j);
    u += ms.mass(i) * ms.mass(j) / s;
  });
  return u;
}

Vec u_gradient(const MassSystem& ms, const Vec& x, const ClusterPartition* part) {
  if (x.size() != ms.dof()) throw ShapeError("u_gradient: size mismatch");
  const int d = ms.dim();
  Vec g = Vec::Zero(ms.dof());
  for_pairs(ms, part, [&](int i, int j) {
    const Eigen::VectorXd u = body(ms, x, i) - body(ms, x, j);
    const double s = u.norm();
    if (s < kSepFloor) throw_collision(i, j);
    const Eigen::VectorXd f = -ms.mass(i) * ms.mass(j) / (s * s * s) * u;
    g.segment(i * d, d) += f;
    g.segment(j * d, d) -= f;
  });
  return g;
}

Vec u_hessian_apply(const MassSystem& ms, const Vec& x, const Vec& psi,
                    const ClusterPartition* part) {
  if (x.size() != ms.dof() || psi.size() != ms.dof())
    throw ShapeError("u_hessian_apply: size mismatch");
  const int d = ms.dim();
  Vec out = Vec::Zero(ms.dof());
  for_pairs(ms, part, [&](int i, int j) {
    const Eigen::VectorXd u = body(ms, x, i) - body(ms, x, j);
    const double s = u.norm();
    if (s < kSepFloor) throw_collision(i, j);
    const Eigen::VectorXd w = psi.segment(i * d, d) - psi.segment(j * d, d);
    const double s3 = s * s * s;
    // d^2(1/s)/du^2 applied to w: (3 (u.w) u - s^2 w) / s^5
    const Eigen::VectorXd hw =
        ms.mass(i) * ms.mass(j) * (3.0 * u.dot(w) / (s3 * s * s) * u - w / s3);
    out.segment(i * d, d) += hw;
    out.segment(j * d, d) -= hw;
  });
  return out;
}

Mat u_hessian_matrix(const MassSystem& ms, const Vec& x, const ClusterPartition* part) {
  if (x.size() != ms.dof()) throw ShapeError("u_hessian_matrix: size mismatch");
  const int d = ms.dim();
  Mat h = Mat::Zero(ms.dof(), ms.dof());
  for_pairs(ms, part, [&](int i, int j) {
    const Eigen::VectorXd u = body(ms, x, i) - body(ms, x, j);
    const double s = u.norm();
    if (s < kSepFloor) throw_collision(i, j);
    const double s3 = s * s * s;
    const Mat block = ms.mass(i) * ms.mass(j) *
                      (3.0 / (s3 * s * s) * (u * u.transpose()) - Mat::Identity(d, d) / s3);
    h.block(i * d, i * d, d, d) += block;
    h.block(j * d, j * d, d, d) += block;
    h.block(i * d, j * d, d, d) -= block;
    h.block(j * d, i * d, d, d) -= block;
  });
  return h;
}

}  // namespace nbhj
