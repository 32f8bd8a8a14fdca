#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "sfot/error.hpp"
#include "sfot/geometry.hpp"

namespace sfot {

/// Piecewise-linear density on a conforming triangulation: rho is the linear interpolant
/// of the per-vertex values on each triangle.
class DensityMesh {
 public:
  using Triangle = std::array<std::uint32_t, 3>;

  DensityMesh() = default;
  DensityMesh(std::vector<Point2> vertices, std::vector<Triangle> triangles, std::vector<double> values)
      : vertices_(std::move(vertices)), triangles_(std::move(triangles)), values_(std::move(values)) {
    if (values_.size() != vertices_.size())
      throw Error(ErrorCode::InvalidInput, "density needs one value per mesh vertex");
    if (triangles_.empty()) throw Error(ErrorCode::InvalidInput, "mesh has no triangles");
    for (std::size_t k = 0; k < values_.size(); ++k) {
      if (!std::isfinite(values_[k]) || values_[k] < 0.0)
        throw Error(ErrorCode::InvalidInput, "density value " + std::to_string(k) + " is negative or not finite");
      if (!std::isfinite(vertices_[k].x) || !std::isfinite(vertices_[k].y))
        throw Error(ErrorCode::InvalidInput, "mesh vertex " + std::to_string(k) + " is not finite");
    }
    for (std::size_t t = 0; t < triangles_.size(); ++t) {
      auto& tri = triangles_[t];
      for (auto v : tri)
        if (v >= vertices_.size())
          throw Error(ErrorCode::InvalidInput, "triangle " + std::to_string(t) + " references a missing vertex");
      const double twice = cross(vertices_[tri[1]] - vertices_[tri[0]], vertices_[tri[2]] - vertices_[tri[0]]);
      if (twice == 0.0) throw Error(ErrorCode::InvalidInput, "triangle " + std::to_string(t) + " is degenerate");
      if (twice < 0.0) std::swap(tri[1], tri[2]);
    }
    precompute();
  }

  const std::vector<Point2>& vertices() const noexcept { return vertices_; }
  const std::vector<Triangle>& triangles() const noexcept { return triangles_; }
  const std::vector<double>& values() const noexcept { return values_; }
  std::size_t triangle_count() const noexcept { return triangles_.size(); }

  ConvexPolygon triangle(std::size_t t) const { return polys_[t]; }

  /// Density on triangle t extended affinely to the plane.
  double affine_value(std::size_t t, Point2 p) const {
    const auto& c = coeffs_[t];
    return c[0] + c[1] * p.x + c[2] * p.y;
  }

  /// Density at p; zero outside the mesh.
  double value_at(Point2 p) const {
    const double tol = 1e-12;
    for (std::size_t t = 0; t < triangles_.size(); ++t)
      if (in_box(t, p, tol * diameter_) && polys_[t].contains(p, tol * diameter_)) return affine_value(t, p);
    return 0.0;
  }

  /// Mass of the whole mesh, sum over triangles of area x mean vertex value.
  double total_mass() const {
    double m = 0.0;
    for (std::size_t t = 0; t < triangles_.size(); ++t) {
      const auto& tri = triangles_[t];
      m += polys_[t].area() * (values_[tri[0]] + values_[tri[1]] + values_[tri[2]]) / 3.0;
    }
    return m;
  }

  double total_area() const {
    double a = 0.0;
    for (const auto& p : polys_) a += p.area();
    return a;
  }

  /// Copy with values rescaled so that the density integrates to one.
  DensityMesh normalized() const {
    const double m = total_mass();
    if (!(m > 0.0)) throw Error(ErrorCode::InvalidInput, "density has zero total mass");
    std::vector<double> v(values_);
    for (auto& x : v) x /= m;
    return DensityMesh(vertices_, triangles_, std::move(v));
  }

  /// Checks that the triangles tile the domain: every vertex inside and total area matching.
  void check_covers(const ConvexPolygon& domain, double rel_tol = 1e-9) const {
    const double tol = 1e-9 * domain.diameter();
    for (std::size_t k = 0; k < vertices_.size(); ++k)
      if (!domain.contains(vertices_[k], tol))
        throw Error(ErrorCode::InvalidInput, "mesh vertex " + std::to_string(k) + " lies outside the domain");
    const double da = domain.area();
    if (std::abs(total_area() - da) > rel_tol * da)
      throw Error(ErrorCode::InvalidInput, "mesh area does not match domain area");
  }

  /// Bounding-box overlap test used to skip triangles quickly.
  bool box_overlaps(std::size_t t, double xmin, double ymin, double xmax, double ymax) const {
    const auto& b = boxes_[t];
    return !(b[2] < xmin || b[0] > xmax || b[3] < ymin || b[1] > ymax);
  }

 private:
  bool in_box(std::size_t t, Point2 p, double tol) const {
    const auto& b = boxes_[t];
    return p.x >= b[0] - tol && p.x <= b[2] + tol && p.y >= b[1] - tol && p.y <= b[3] + tol;
  }

  void precompute() {
    polys_.clear();
    coeffs_.clear();
    boxes_.clear();
    double xmin = vertices_[0].x, xmax = xmin, ymin = vertices_[0].y, ymax = ymin;
    for (const auto& tri : triangles_) {
      const Point2 a = vertices_[tri[0]], b = vertices_[tri[1]], c = vertices_[tri[2]];
      polys_.emplace_back(std::vector<Point2>{a, b, c});
      // Solve rho(p) = k0 + k1 x + k2 y through the three vertex values.
      const double fa = values_[tri[0]], fb = values_[tri[1]], fc = values_[tri[2]];
      const double det = cross(b - a, c - a);
      const double k1 = ((fb - fa) * (c.y - a.y) - (fc - fa) * (b.y - a.y)) / det;
      const double k2 = ((fc - fa) * (b.x - a.x) - (fb - fa) * (c.x - a.x)) / det;
      coeffs_.push_back({fa - k1 * a.x - k2 * a.y, k1, k2});
      boxes_.push_back({std::min({a.x, b.x, c.x}), std::min({a.y, b.y, c.y}), std::max({a.x, b.x, c.x}),
                        std::max({a.y, b.y, c.y})});
      xmin = std::min({xmin, a.x, b.x, c.x});
      xmax = std::max({xmax, a.x, b.x, c.x});
      ymin = std::min({ymin, a.y, b.y, c.y});
      ymax = std::max({ymax, a.y, b.y, c.y});
    }
    diameter_ = std::hypot(xmax - xmin, ymax - ymin);
  }

  std::vector<Point2> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<double> values_;
  std::vector<ConvexPolygon> polys_;
  std::vector<std::array<double, 3>> coeffs_;
  std::vector<std::array<double, 4>> boxes_;  // xmin, ymin, xmax, ymax
  double diameter_ = 0.0;
};

namespace detail {

inline std::array<double, 4> bounding_box(const ConvexPolygon& poly) {
  std::array<double, 4> b{poly[0].x, poly[0].y, poly[0].x, poly[0].y};
  for (const auto& v : poly.vertices()) {
    b[0] = std::min(b[0], v.x);
    b[1] = std::min(b[1], v.y);
    b[2] = std::max(b[2], v.x);
    b[3] = std::max(b[3], v.y);
  }
  return b;
}

/// Area-weighted centroid and area of a convex polygon.
inline std::pair<Point2, double> centroid_and_area(const ConvexPolygon& poly) {
  double a2 = 0.0, cx = 0.0, cy = 0.0;
  const Point2 o = poly[0];
  const std::size_t n = poly.size();
  for (std::size_t k = 1; k + 1 < n; ++k) {
    const Point2 p = poly[k] - o, q = poly[k + 1] - o;
    const double w = cross(p, q);
    a2 += w;
    cx += w * (p.x + q.x);
    cy += w * (p.y + q.y);
  }
  if (a2 == 0.0) return {o, 0.0};
  return {Point2{o.x + cx / (3.0 * a2), o.y + cy / (3.0 * a2)}, 0.5 * a2};
}

/// Degree-3 exact rule on a triangle: centroid weight -27/48, points (3/5, 1/5, 1/5) weight 25/48.
template <class F>
double triangle_rule(Point2 a, Point2 b, Point2 c, F&& f) {
  const double area = 0.5 * cross(b - a, c - a);
  const auto at = [&](double la, double lb, double lc) {
    return Point2{la * a.x + lb * b.x + lc * c.x, la * a.y + lb * b.y + lc * c.y};
  };
  const double s = -27.0 / 48.0 * f(at(1.0 / 3, 1.0 / 3, 1.0 / 3)) +
                   25.0 / 48.0 * (f(at(0.6, 0.2, 0.2)) + f(at(0.2, 0.6, 0.2)) + f(at(0.2, 0.2, 0.6)));
  return area * s;
}

/// Integral of f over a convex polygon, fan-triangulated from its vertex mean.
/// Exact when f is a polynomial of total degree <= 3.
template <class F>
double polygon_rule(const ConvexPolygon& poly, F&& f) {
  const std::size_t n = poly.size();
  if (n < 3) return 0.0;
  const Point2 c = poly.vertex_mean();
  double sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) sum += triangle_rule(c, poly[k], poly[(k + 1) % n], f);
  return sum;
}

/// Calls visit(t, piece) for every nonempty intersection of poly with a mesh triangle.
template <class Visit>
void for_each_piece(const ConvexPolygon& poly, const DensityMesh& mesh, Visit&& visit) {
  if (poly.empty()) return;
  const auto box = bounding_box(poly);
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    if (!mesh.box_overlaps(t, box[0], box[1], box[2], box[3])) continue;
    const ConvexPolygon piece = polygon_intersection(poly, mesh.triangle(t));
    if (!piece.empty()) visit(t, piece);
  }
}

}  // namespace detail

/// Exact integral of rho over a convex polygon: on each triangle piece the density is
/// linear, so area x density-at-centroid is exact.
inline double integrate_density(const ConvexPolygon& poly, const DensityMesh& mesh) {
  double total = 0.0;
  detail::for_each_piece(poly, mesh, [&](std::size_t t, const ConvexPolygon& piece) {
    const auto [c, area] = detail::centroid_and_area(piece);
    total += area * mesh.affine_value(t, c);
  });
  return total;
}

/// Exact integral of |x - y|^2 rho(x) over a convex polygon.
inline double integrate_second_moment(const ConvexPolygon& poly, const DensityMesh& mesh, Point2 y) {
  double total = 0.0;
  detail::for_each_piece(poly, mesh, [&](std::size_t t, const ConvexPolygon& piece) {
    total += detail::polygon_rule(piece, [&](Point2 x) { return norm2(x - y) * mesh.affine_value(t, x); });
  });
  return total;
}

/// Exact line integral of rho along the segment [a, b]. The segment is split wherever it
/// enters or leaves a triangle; rho is linear on each piece, so the midpoint rule is exact.
/// Pieces lying on an edge shared by two triangles are counted once.
inline double segment_density_integral(Point2 a, Point2 b, const DensityMesh& mesh) {
  const double len = distance(a, b);
  if (len == 0.0) return 0.0;
  const Point2 dir = b - a;
  std::vector<double> cuts{0.0, 1.0};
  const double xmin = std::min(a.x, b.x), xmax = std::max(a.x, b.x);
  const double ymin = std::min(a.y, b.y), ymax = std::max(a.y, b.y);
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    if (!mesh.box_overlaps(t, xmin, ymin, xmax, ymax)) continue;
    const ConvexPolygon tri = mesh.triangle(t);
    for (std::size_t k = 0; k < 3; ++k) {
      const Point2 p = tri[k], q = tri[(k + 1) % 3];
      const Point2 e = q - p;
      const double denom = cross(dir, e);
      if (denom == 0.0) continue;  // parallel: no transversal crossing
      const double s = cross(p - a, e) / denom;
      const double u = cross(p - a, dir) / denom;
      if (s > 0.0 && s < 1.0 && u >= 0.0 && u <= 1.0) cuts.push_back(s);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double ds = cuts[k + 1] - cuts[k];
    if (ds <= 0.0) continue;
    const double mid = 0.5 * (cuts[k] + cuts[k + 1]);
    total += ds * len * mesh.value_at(a + mid * dir);
  }
  return total;
}

}  // namespace sfot
