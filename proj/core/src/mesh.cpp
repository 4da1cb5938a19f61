#include "nbhj/mesh.hpp"

#include <algorithm>
#include <cmath>

namespace nbhj {

TimeMesh::TimeMesh(std::vector<double> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.size() < 17) throw ShapeError("TimeMesh: need at least 16 elements");
  for (size_t k = 0; k + 1 < nodes_.size(); ++k) {
    if (!(nodes_[k + 1] > nodes_[k])) throw ShapeError("TimeMesh: nodes must increase");
    if (nodes_[k + 1] / nodes_[k] > kMaxRatio)
      throw ShapeError("TimeMesh: grading ratio too large");
  }
}

std::shared_ptr<const TimeMesh> TimeMesh::graded(double T, int elements) {
  return graded_interval(1.0, T, elements);
}

std::shared_ptr<const TimeMesh> TimeMesh::graded_interval(double t0, double T, int elements) {
  if (!(T > t0) || t0 <= 0.0) throw ShapeError("TimeMesh: need 0 < t0 < T");
  std::vector<double> nodes(static_cast<size_t>(elements) + 1);
  const double r = std::log(T / t0) / elements;
  for (int k = 0; k <= elements; ++k) nodes[static_cast<size_t>(k)] = t0 * std::exp(r * k);
  nodes.front() = t0;
  nodes.back() = T;
  return std::make_shared<TimeMesh>(std::move(nodes));
}

PathField::PathField(std::shared_ptr<const TimeMesh> m, int dof_per_node)
    : mesh(std::move(m)), n(dof_per_node), values(Vec::Zero(mesh->elements() * dof_per_node)) {}

Vec PathField::at_node(int k) const {
  if (k == 0) return Vec::Zero(n);
  return values.segment((k - 1) * n, n);
}

Vec PathField::at_time(double t) const {
  const auto& nd = mesh->nodes();
  if (t <= nd.front()) return Vec::Zero(n);
  if (t >= nd.back()) return at_node(mesh->elements());
  const auto it = std::upper_bound(nd.begin(), nd.end(), t);
  const int e = static_cast<int>(it - nd.begin()) - 1;
  const double theta = (t - nd[static_cast<size_t>(e)]) / mesh->h(e);
  return (1.0 - theta) * at_node(e) + theta * at_node(e + 1);
}

double PathField::dnorm2(const MassSystem& ms) const {
  double acc = 0.0;
  for (int e = 0; e < mesh->elements(); ++e) {
    const Vec d = at_node(e + 1) - at_node(e);
    acc += mass_inner(ms, d, d) / mesh->h(e);
  }
  return acc;
}

PathField transfer_field(const PathField& f, std::shared_ptr<const TimeMesh> target) {
  PathField out(std::move(target), f.n);
  for (int k = 1; k <= out.mesh->elements(); ++k)
    out.values.segment((k - 1) * f.n, f.n) = f.at_time(out.mesh->node(k));
  return out;
}

double hardy_ratio(const MassSystem& ms, const PathField& phi, double eps) {
  const double den = phi.dnorm2(ms);
  if (!(den > 0.0)) throw std::domain_error("hardy_ratio: zero field");
  double num = 0.0;
  for (int e = 0; e < phi.mesh->elements(); ++e) {
    const Vec a = phi.at_node(e);
    const Vec b = phi.at_node(e + 1);
    const double h = phi.mesh->h(e);
    for (int q = 0; q < 2; ++q) {
      const double theta = kGauss2Theta[q];
      const double t = phi.mesh->node(e) + theta * h;
      const Vec v = (1.0 - theta) * a + theta * b;
      num += kGauss2Weight[q] * h * mass_inner(ms, v, v) / std::pow(t, 2.0 + eps);
    }
  }
  return num / den;
}

}  // namespace nbhj
