#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "sfot/error.hpp"

namespace sfot {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm2(Point2 a) { return dot(a, a); }
inline double norm(Point2 a) { return std::hypot(a.x, a.y); }
inline double distance(Point2 a, Point2 b) { return norm(a - b); }

/// Distance from p to the closed segment [a, b].
inline double segment_distance(Point2 p, Point2 a, Point2 b) {
  const Point2 ab = b - a;
  const double len2 = norm2(ab);
  if (len2 == 0.0) return distance(p, a);
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return distance(p, a + t * ab);
}

/// Counterclockwise convex polygon. Zero vertices means the empty set.
class ConvexPolygon {
 public:
  ConvexPolygon() = default;
  explicit ConvexPolygon(std::vector<Point2> vertices) : vertices_(std::move(vertices)) {}

  static ConvexPolygon rectangle(double x0, double y0, double x1, double y1) {
    return ConvexPolygon({{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}});
  }

  const std::vector<Point2>& vertices() const noexcept { return vertices_; }
  std::size_t size() const noexcept { return vertices_.size(); }
  bool empty() const noexcept { return vertices_.empty(); }
  const Point2& operator[](std::size_t k) const { return vertices_[k]; }

  double signed_area() const {
    double twice = 0.0;
    const std::size_t n = vertices_.size();
    for (std::size_t k = 0; k < n; ++k) twice += cross(vertices_[k], vertices_[(k + 1) % n]);
    return 0.5 * twice;
  }
  double area() const { return std::abs(signed_area()); }

  /// Average of the vertices; interior for nonempty convex polygons.
  Point2 vertex_mean() const {
    Point2 c;
    for (const auto& v : vertices_) c = c + v;
    return (1.0 / static_cast<double>(std::max<std::size_t>(vertices_.size(), 1))) * c;
  }

  /// Length of the bounding-box diagonal.
  double diameter() const {
    if (vertices_.empty()) return 0.0;
    double xmin = vertices_[0].x, xmax = xmin, ymin = vertices_[0].y, ymax = ymin;
    for (const auto& v : vertices_) {
      xmin = std::min(xmin, v.x);
      xmax = std::max(xmax, v.x);
      ymin = std::min(ymin, v.y);
      ymax = std::max(ymax, v.y);
    }
    return std::hypot(xmax - xmin, ymax - ymin);
  }

  bool contains(Point2 p, double tol = 0.0) const {
    const std::size_t n = vertices_.size();
    if (n < 3) return false;
    for (std::size_t k = 0; k < n; ++k) {
      const Point2 a = vertices_[k], b = vertices_[(k + 1) % n];
      const Point2 e = b - a;
      if (cross(e, p - a) < -tol * norm(e)) return false;
    }
    return true;
  }

  /// Euclidean distance from p to the polygon (zero inside).
  double distance_to(Point2 p) const {
    if (contains(p)) return 0.0;
    double best = std::numeric_limits<double>::infinity();
    const std::size_t n = vertices_.size();
    for (std::size_t k = 0; k < n; ++k)
      best = std::min(best, segment_distance(p, vertices_[k], vertices_[(k + 1) % n]));
    return best;
  }

  /// Distance from p to the boundary curve, whether p is inside or not.
  double boundary_distance(Point2 p) const {
    double best = std::numeric_limits<double>::infinity();
    const std::size_t n = vertices_.size();
    for (std::size_t k = 0; k < n; ++k)
      best = std::min(best, segment_distance(p, vertices_[k], vertices_[(k + 1) % n]));
    return best;
  }

  friend bool operator==(const ConvexPolygon&, const ConvexPolygon&) = default;

 private:
  std::vector<Point2> vertices_;
};

namespace detail {

inline constexpr int kBoundaryLabel = -1;

/// Polygon whose edge k (vertex k to vertex k+1) remembers the constraint that produced it.
struct LabeledPolygon {
  std::vector<Point2> vertices;
  std::vector<int> labels;

  bool empty() const noexcept { return vertices.empty(); }
};

inline LabeledPolygon label_all(const ConvexPolygon& poly, int label) {
  return {poly.vertices(), std::vector<int>(poly.size(), label)};
}

/// Merges consecutive vertices closer than tol and drops polygons with no area.
inline void canonicalize(LabeledPolygon& poly, double tol) {
  auto& v = poly.vertices;
  auto& lab = poly.labels;
  bool changed = true;
  while (changed && v.size() >= 2) {
    changed = false;
    const std::size_t n = v.size();
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t next = (k + 1) % n;
      if (distance(v[k], v[next]) <= tol) {
        // Edge k collapses; vertex k inherits the outgoing label of the dropped vertex.
        lab[k] = lab[next];
        v.erase(v.begin() + static_cast<std::ptrdiff_t>(next));
        lab.erase(lab.begin() + static_cast<std::ptrdiff_t>(next));
        changed = true;
        break;
      }
    }
  }
  if (v.size() < 3 || ConvexPolygon(v).signed_area() <= 0.0) {
    v.clear();
    lab.clear();
  }
}

/// Sutherland-Hodgman step keeping {x : <normal, x> <= offset}; the new edge gets new_label.
/// Returns false when poly lies inside the halfplane (out is left alone), otherwise writes the
/// clipped polygon, possibly empty, to out. side is scratch space.
inline bool clip_into(const LabeledPolygon& poly, Point2 normal, double offset, int new_label, double tol,
                      LabeledPolygon& out, std::vector<double>& side) {
  const std::size_t n = poly.vertices.size();
  if (n == 0) return false;
  side.resize(n);
  bool any_out = false, any_in = false;
  for (std::size_t k = 0; k < n; ++k) {
    side[k] = dot(normal, poly.vertices[k]) - offset;
    if (side[k] > 0.0)
      any_out = true;
    else
      any_in = true;
  }
  if (!any_out) return false;
  out.vertices.clear();
  out.labels.clear();
  if (!any_in) return true;

  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t next = (k + 1) % n;
    const Point2 a = poly.vertices[k], b = poly.vertices[next];
    const double sa = side[k], sb = side[next];
    const int lab = poly.labels[k];
    if (sa <= 0.0) {
      out.vertices.push_back(a);
      if (sb <= 0.0) {
        out.labels.push_back(lab);
      } else {
        out.labels.push_back(lab);
        out.vertices.push_back(a + (sa / (sa - sb)) * (b - a));
        out.labels.push_back(new_label);
      }
    } else if (sb <= 0.0) {
      out.vertices.push_back(a + (sa / (sa - sb)) * (b - a));
      out.labels.push_back(lab);
    }
  }
  canonicalize(out, tol);
  return true;
}

inline LabeledPolygon clip(const LabeledPolygon& poly, Point2 normal, double offset,
                           int new_label, double tol) {
  LabeledPolygon out;
  std::vector<double> side;
  if (!clip_into(poly, normal, offset, new_label, tol, out, side)) return poly;
  return out;
}

}  // namespace detail

/// Intersection of poly with the halfplane {x : <normal, x> <= offset}.
/// Vertices closer than merge_tol are merged; a negative merge_tol means 1e-12 x diameter.
inline ConvexPolygon clip_halfplane(const ConvexPolygon& poly, Point2 normal, double offset,
                                    double merge_tol = -1.0) {
  if (merge_tol < 0.0) merge_tol = 1e-12 * poly.diameter();
  auto clipped =
      detail::clip(detail::label_all(poly, detail::kBoundaryLabel), normal, offset, 0, merge_tol);
  return ConvexPolygon(std::move(clipped.vertices));
}

/// Convex intersection of two convex polygons (clips a by every edge line of b).
inline ConvexPolygon polygon_intersection(const ConvexPolygon& a, const ConvexPolygon& b) {
  if (a.empty() || b.empty()) return {};
  if (a == b) return a;
  const double tol = 1e-12 * std::max(a.diameter(), b.diameter());
  auto result = detail::label_all(a, detail::kBoundaryLabel);
  const std::size_t n = b.size();
  for (std::size_t k = 0; k < n && !result.empty(); ++k) {
    const Point2 p = b[k], q = b[(k + 1) % n];
    const Point2 e = q - p;
    result = detail::clip(result, {e.y, -e.x}, e.y * p.x - e.x * p.y, 0, tol);
  }
  return ConvexPolygon(std::move(result.vertices));
}

/// Exact Hausdorff distance between convex polygons. The supremum of the distance to a
/// convex set over a convex polygon is attained at one of its vertices.
inline double hausdorff_distance(const ConvexPolygon& a, const ConvexPolygon& b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::EmptyCell, "Hausdorff distance of an empty polygon");
  double d = 0.0;
  for (const auto& v : a.vertices()) d = std::max(d, b.distance_to(v));
  for (const auto& v : b.vertices()) d = std::max(d, a.distance_to(v));
  return d;
}

}  // namespace sfot
