#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "sfot/density_mesh.hpp"
#include "sfot/error.hpp"
#include "sfot/solver.hpp"

namespace sfot {

enum class Template { KmtDensity, StorageRandom, Disconnected };

inline Template parse_template(std::string_view name) {
  if (name == "kmt-density") return Template::KmtDensity;
  if (name == "storage-random") return Template::StorageRandom;
  if (name == "disconnected") return Template::Disconnected;
  throw Error(ErrorCode::InvalidInput, "unknown template '" + std::string(name) + "'");
}

inline std::string_view template_name(Template t) {
  switch (t) {
    case Template::KmtDensity: return "kmt-density";
    case Template::StorageRandom: return "storage-random";
    case Template::Disconnected: return "disconnected";
  }
  return "unknown";
}

/// Uniform double in [0, 1) from the top 53 bits; identical on every platform for a given seed.
class UnitRng {
 public:
  explicit UnitRng(std::uint64_t seed) : engine_(seed) {}
  double operator()() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * (*this)(); }

 private:
  std::mt19937_64 engine_;
};

/// Two-triangle mesh of the rectangle [x0, x1] x [y0, y1] with the given corner values
/// (counterclockwise from (x0, y0)); the density is not normalized.
inline DensityMesh rectangle_mesh(double x0, double y0, double x1, double y1, std::array<double, 4> corner_values) {
  return DensityMesh({{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}, {{0, 1, 2}, {0, 2, 3}},
                     {corner_values.begin(), corner_values.end()});
}

/// The lattice {0,1,2,3}^2 split into 18 triangles. Each of the nine unit squares is cut along
/// the diagonal that points toward the centre (1.5, 1.5); the middle squares use the main diagonal.
inline DensityMesh lattice_mesh_18(const std::vector<double>& lattice_values) {
  std::vector<Point2> verts;
  for (int b = 0; b < 4; ++b)
    for (int a = 0; a < 4; ++a) verts.push_back({static_cast<double>(a), static_cast<double>(b)});
  const auto id = [](int a, int b) { return static_cast<std::uint32_t>(b * 4 + a); };
  std::vector<DensityMesh::Triangle> tris;
  for (int b = 0; b < 3; ++b) {
    for (int a = 0; a < 3; ++a) {
      const auto p00 = id(a, b), p10 = id(a + 1, b), p11 = id(a + 1, b + 1), p01 = id(a, b + 1);
      if ((a - 1) * (b - 1) >= 0) {
        tris.push_back({p00, p10, p11});
        tris.push_back({p00, p11, p01});
      } else {
        tris.push_back({p00, p10, p01});
        tris.push_back({p10, p11, p01});
      }
    }
  }
  return DensityMesh(std::move(verts), std::move(tris), lattice_values);
}

/// Density on [0,3]^2 for a generator template. kmt-density and storage-random are positive on
/// the outer boundary and zero on [1,2]^2; disconnected is positive on x in {0,3} and zero on
/// the strip [1,2] x [0,3].
inline DensityMesh template_density(Template t) {
  std::vector<double> values(16);
  for (int b = 0; b < 4; ++b) {
    for (int a = 0; a < 4; ++a) {
      const bool outer = a == 0 || a == 3 || b == 0 || b == 3;
      const bool side = a == 0 || a == 3;
      values[static_cast<std::size_t>(b * 4 + a)] = (t == Template::Disconnected ? side : outer) ? 1.0 : 0.0;
    }
  }
  return lattice_mesh_18(values).normalized();
}

/// Perturbed grid x grid sites in [0,1]^2, source on [0,3]^2, capacities per template.
inline Instance generate_instance(Template t, int grid, std::uint64_t seed, double h = 0.5, double eps = 1e-6) {
  if (grid < 2) throw Error(ErrorCode::InvalidInput, "grid must be at least 2");
  UnitRng rng(seed);
  Instance inst;
  inst.domain = ConvexPolygon::rectangle(0.0, 0.0, 3.0, 3.0);
  inst.mesh = template_density(t);

  const double spacing = 1.0 / grid;
  const double jitter = 0.2 / grid;
  for (int j = 0; j < grid; ++j) {
    for (int i = 0; i < grid; ++i) {
      const double x = (i + 0.5) * spacing + rng.uniform(-jitter, jitter);
      const double y = (j + 0.5) * spacing + rng.uniform(-jitter, jitter);
      inst.sites.push_back({x, y});
    }
  }

  const auto n = static_cast<Eigen::Index>(inst.sites.size());
  Vector u(n);
  for (Eigen::Index i = 0; i < n; ++i) u[i] = rng.uniform(0.5, 1.5);
  double total = 1.0;
  if (t == Template::StorageRandom) total = rng.uniform(1.2, 2.0);
  inst.params.w = (u / u.sum() * total).cwiseMin(1.0);
  inst.params.h = h;
  inst.params.eps = eps;
  return inst;
}

}  // namespace sfot
