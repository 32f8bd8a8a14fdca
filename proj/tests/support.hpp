#pragma once

// Fixtures shared by the unit and acceptance suites.

#include <cstdint>
#include <vector>

#include "sfot/generate.hpp"
#include "sfot/sfot.hpp"

namespace sfot::testing {

inline DensityMesh uniform_unit_square() { return rectangle_mesh(0, 0, 1, 1, {1, 1, 1, 1}); }

/// rho(x, y) = 2x on the unit square (two triangles, already unit mass).
inline DensityMesh linear_ramp_unit_square() { return rectangle_mesh(0, 0, 1, 1, {0, 2, 2, 0}); }

/// Uniform density on [0,1]^2, sites (0.25, 0.5) and (0.75, 0.5).
inline Instance two_point_instance(double h = 1.0, double eps = 0.01, Vector w = Vector::Constant(2, 0.98)) {
  Instance inst;
  inst.domain = ConvexPolygon::rectangle(0, 0, 1, 1);
  inst.mesh = uniform_unit_square();
  inst.sites = {{0.25, 0.5}, {0.75, 0.5}};
  inst.params.h = h;
  inst.params.eps = eps;
  inst.params.w = std::move(w);
  return inst;
}

inline Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index k = 0;
  for (double x : xs) v[k++] = x;
  return v;
}

/// k x k grid mesh of [0,1]^2 with random vertex densities in [lo, hi], normalized.
inline DensityMesh random_grid_mesh(UnitRng& rng, int k, double lo = 0.2, double hi = 2.0) {
  std::vector<Point2> verts;
  std::vector<double> vals;
  for (int b = 0; b <= k; ++b)
    for (int a = 0; a <= k; ++a) {
      verts.push_back({static_cast<double>(a) / k, static_cast<double>(b) / k});
      vals.push_back(rng.uniform(lo, hi));
    }
  std::vector<DensityMesh::Triangle> tris;
  const auto id = [k](int a, int b) { return static_cast<std::uint32_t>(b * (k + 1) + a); };
  for (int b = 0; b < k; ++b)
    for (int a = 0; a < k; ++a) {
      tris.push_back({id(a, b), id(a + 1, b), id(a + 1, b + 1)});
      tris.push_back({id(a, b), id(a + 1, b + 1), id(a, b + 1)});
    }
  return DensityMesh(std::move(verts), std::move(tris), std::move(vals)).normalized();
}

/// Distinct sites spread over [0,1]^2: n of the slots of a jittered s x s grid.
inline std::vector<Point2> random_sites(UnitRng& rng, int n) {
  int s = 1;
  while (s * s < n) ++s;
  std::vector<int> slots(static_cast<std::size_t>(s * s));
  for (std::size_t k = 0; k < slots.size(); ++k) slots[k] = static_cast<int>(k);
  for (std::size_t k = slots.size() - 1; k > 0; --k) {
    const auto m = static_cast<std::size_t>(rng() * static_cast<double>(k + 1));
    std::swap(slots[k], slots[m]);
  }
  std::vector<Point2> sites;
  for (int k = 0; k < n; ++k) {
    const int a = slots[static_cast<std::size_t>(k)] % s, b = slots[static_cast<std::size_t>(k)] / s;
    sites.push_back({(a + rng.uniform(0.2, 0.8)) / s, (b + rng.uniform(0.2, 0.8)) / s});
  }
  return sites;
}

/// Random instance plus a dual vector whose cells all carry mass above `floor`.
struct RandomCase {
  Instance instance;
  Vector psi;
};

inline RandomCase random_case(std::uint64_t seed, double floor_above_eps = 0.05) {
  UnitRng rng(seed);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    const int n = 2 + static_cast<int>(rng() * 9.0);  // 2..10
    Instance inst;
    inst.domain = ConvexPolygon::rectangle(0, 0, 1, 1);
    inst.mesh = random_grid_mesh(rng, 3);
    inst.sites = random_sites(rng, n);
    inst.params.h = rng.uniform(0.2, 1.0);
    inst.params.eps = 0.2 / (2.0 * n);
    inst.params.w = Vector::Constant(n, std::min(1.0, 1.5 / n));
    Vector psi(n);
    for (int i = 0; i < n; ++i) psi[i] = rng.uniform(-0.02, 0.02);
    const auto masses = mass_vector(laguerre_cells(inst.domain, inst.sites, as_span(psi)), inst.mesh);
    if ((masses.array() > inst.params.eps + floor_above_eps).all()) return {std::move(inst), std::move(psi)};
  }
  throw std::runtime_error("could not draw a random case");
}

}  // namespace sfot::testing
