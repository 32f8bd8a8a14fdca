#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <span>
#include <vector>

#include "sfot/density_mesh.hpp"
#include "sfot/parallel.hpp"
#include "sfot/power_diagram.hpp"

namespace sfot {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

/// G(psi): the rho-mass of every Laguerre cell.
using MassVector = Vector;

/// DG(psi): symmetric, nonnegative off-diagonal, zero row sums.
using MassJacobian = SparseMatrix;

inline std::span<const double> as_span(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

/// Alias kept for facet-shaped callers.
inline double facet_density_integral(const Facet& facet, const DensityMesh& mesh) {
  return segment_density_integral(facet.a, facet.b, mesh);
}

inline MassVector mass_vector(const PowerDiagram& diagram, const DensityMesh& mesh) {
  const std::size_t n = diagram.size();
  MassVector g(static_cast<Eigen::Index>(n));
  parallel_for(n, [&](std::size_t i) { g[static_cast<Eigen::Index>(i)] = integrate_density(diagram.cells[i], mesh); });
  return g;
}

/// dG^i/dpsi^j = (1 / (2 |y_i - y_j|)) * integral of rho over the shared facet, for i != j;
/// the diagonal makes every row sum to zero.
inline MassJacobian mass_jacobian(const PowerDiagram& diagram, const DensityMesh& mesh,
                                  const std::vector<Point2>& sites) {
  const auto n = static_cast<Eigen::Index>(diagram.size());
  std::vector<double> weight(diagram.facets.size());
  parallel_for(diagram.facets.size(), [&](std::size_t k) {
    const Facet& f = diagram.facets[k];
    weight[k] = facet_density_integral(f, mesh) / (2.0 * distance(sites[f.i], sites[f.j]));
  });
  std::vector<double> diag(static_cast<std::size_t>(n), 0.0);
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(3 * diagram.facets.size() + static_cast<std::size_t>(n));
  for (std::size_t k = 0; k < diagram.facets.size(); ++k) {
    const Facet& f = diagram.facets[k];
    const auto i = static_cast<Eigen::Index>(f.i), j = static_cast<Eigen::Index>(f.j);
    entries.emplace_back(i, j, weight[k]);
    entries.emplace_back(j, i, weight[k]);
    diag[f.i] -= weight[k];
    diag[f.j] -= weight[k];
  }
  for (Eigen::Index i = 0; i < n; ++i) entries.emplace_back(i, i, diag[static_cast<std::size_t>(i)]);
  MassJacobian m(n, n);
  m.setFromTriplets(entries.begin(), entries.end());
  return m;
}

/// Per-cell integrals of |x - y_i|^2 rho over cell i.
inline Vector cell_second_moments(const PowerDiagram& diagram, const DensityMesh& mesh,
                                  const std::vector<Point2>& sites) {
  const std::size_t n = diagram.size();
  Vector m(static_cast<Eigen::Index>(n));
  parallel_for(n, [&](std::size_t i) {
    m[static_cast<Eigen::Index>(i)] = integrate_second_moment(diagram.cells[i], mesh, sites[i]);
  });
  return m;
}

/// Cost of the map sending cell i to y_i: sum_i integral over cell i of |x - y_i|^2 rho.
inline double transport_cost(const PowerDiagram& diagram, const DensityMesh& mesh,
                             const std::vector<Point2>& sites) {
  return cell_second_moments(diagram, mesh, sites).sum();
}

/// B(psi) = integral of psi^{c*} dmu, where psi^{c*}(x) = max_i(-|x - y_i|^2 - psi_i).
/// Convex in psi with gradient -G(psi).
inline double dual_functional(const PowerDiagram& diagram, const DensityMesh& mesh, const Vector& psi,
                              const std::vector<Point2>& sites) {
  const Vector moments = cell_second_moments(diagram, mesh, sites);
  const MassVector g = mass_vector(diagram, mesh);
  return -moments.sum() - psi.dot(g);
}

}  // namespace sfot
