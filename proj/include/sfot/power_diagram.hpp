#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "sfot/error.hpp"
#include "sfot/geometry.hpp"
#include "sfot/parallel.hpp"

namespace sfot {

/// Shared boundary segment of cells i < j.
struct Facet {
  std::size_t i = 0;
  std::size_t j = 0;
  Point2 a;
  Point2 b;
  double length = 0.0;
};

/// Laguerre cells of one dual vector, for the cost c(x, y) = |x - y|^2:
///   cell i = {x in domain : |x - y_i|^2 + psi_i <= |x - y_j|^2 + psi_j for all j}.
struct PowerDiagram {
  std::vector<double> psi;
  std::vector<ConvexPolygon> cells;
  std::vector<Facet> facets;  // sorted by (i, j)

  std::size_t size() const noexcept { return cells.size(); }
};

/// Builds power diagrams for a fixed domain and site set. The per-site neighbour ordering
/// is computed once, so repeated builds at different dual vectors are cheap.
class LaguerreBuilder {
 public:
  LaguerreBuilder(ConvexPolygon domain, std::vector<Point2> sites)
      : domain_(std::move(domain)), sites_(std::move(sites)) {
    if (domain_.empty()) throw Error(ErrorCode::InvalidInput, "empty domain");
    if (sites_.empty()) throw Error(ErrorCode::InvalidInput, "no sites");
    diameter_ = domain_.diameter();
    tol_ = 1e-12 * diameter_;
    check_distinct();
    build_neighbour_order();
  }

  const ConvexPolygon& domain() const noexcept { return domain_; }
  const std::vector<Point2>& sites() const noexcept { return sites_; }
  std::size_t size() const noexcept { return sites_.size(); }
  double merge_tolerance() const noexcept { return tol_; }

  PowerDiagram build(std::span<const double> psi) const {
    const std::size_t n = sites_.size();
    if (psi.size() != n) throw Error(ErrorCode::MismatchedN, "dual vector length differs from site count");
    PowerDiagram diagram;
    diagram.psi.assign(psi.begin(), psi.end());

    std::vector<detail::LabeledPolygon> cells(n);
    parallel_for(n, [&](std::size_t i) { cells[i] = build_cell(i, psi); });

    diagram.cells.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& cell = cells[i];
      const std::size_t m = cell.vertices.size();
      for (std::size_t k = 0; k < m; ++k) {
        const int label = cell.labels[k];
        if (label <= static_cast<int>(i)) continue;  // boundary edges and already-seen pairs
        const Point2 a = cell.vertices[k], b = cell.vertices[(k + 1) % m];
        const double len = distance(a, b);
        if (len <= tol_) continue;
        diagram.facets.push_back({i, static_cast<std::size_t>(label), a, b, len});
      }
      diagram.cells.emplace_back(cell.vertices);
    }
    std::sort(diagram.facets.begin(), diagram.facets.end(),
              [](const Facet& f, const Facet& g) { return f.i != g.i ? f.i < g.i : f.j < g.j; });
    return diagram;
  }

 private:
  detail::LabeledPolygon build_cell(std::size_t i, std::span<const double> psi) const {
    const auto& row = order_[i];
    const std::size_t m = row.size();
    // tail_min[k] = min psi over row[k..]: the pruning bound only needs sites not yet visited.
    std::vector<double> tail_min(m + 1, std::numeric_limits<double>::infinity());
    for (std::size_t k = m; k-- > 0;) tail_min[k] = std::min(tail_min[k + 1], psi[row[k].j]);

    auto cell = detail::label_all(domain_, detail::kBoundaryLabel);
    detail::LabeledPolygon next;
    std::vector<double> side;
    const Point2 yi = sites_[i];
    const double yi2 = norm2(yi);
    double reach = max_reach(cell, yi);
    for (std::size_t k = 0; k < m; ++k) {
      const std::uint32_t j = row[k].j;
      const double d = row[k].d;
      // For x in the cell, |x - y_j| >= d - reach, so the halfplane cannot cut the cell
      // once (d - reach)^2 + psi_j >= reach^2 + psi_i.
      if (d >= reach) {
        const double gap = (d - reach) * (d - reach);
        const double own = reach * reach + psi[i];
        if (gap + tail_min[k] >= own) break;  // later sites are farther still
        if (gap + psi[j] >= own) continue;
      }
      const Point2 yj = sites_[j];
      const Point2 normal = 2.0 * (yj - yi);
      const double offset = norm2(yj) - yi2 + psi[j] - psi[i];
      if (!detail::clip_into(cell, normal, offset, static_cast<int>(j), tol_, next, side)) continue;
      std::swap(cell, next);
      if (cell.empty()) break;
      reach = max_reach(cell, yi);
    }
    return cell;
  }

  static double max_reach(const detail::LabeledPolygon& cell, Point2 y) {
    double r2 = 0.0;
    for (const auto& v : cell.vertices) r2 = std::max(r2, norm2(v - y));
    return std::sqrt(r2);
  }

  void check_distinct() const {
    std::vector<std::size_t> idx(sites_.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return sites_[a].x != sites_[b].x ? sites_[a].x < sites_[b].x : sites_[a].y < sites_[b].y;
    });
    for (std::size_t k = 0; k < idx.size(); ++k) {
      for (std::size_t m = k + 1; m < idx.size(); ++m) {
        if (sites_[idx[m]].x - sites_[idx[k]].x > tol_) break;
        if (distance(sites_[idx[k]], sites_[idx[m]]) <= tol_)
          throw Error(ErrorCode::DuplicateSites, "sites " + std::to_string(idx[k]) + " and " +
                                                     std::to_string(idx[m]) + " coincide");
      }
    }
  }

  void build_neighbour_order() {
    const std::size_t n = sites_.size();
    order_.assign(n, {});
    for (std::size_t i = 0; i < n; ++i) {
      auto& row = order_[i];
      row.reserve(n - 1);
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) row.push_back({static_cast<std::uint32_t>(j), distance(sites_[j], sites_[i])});
      std::sort(row.begin(), row.end(),
                [](const Neighbour& a, const Neighbour& b) { return a.d != b.d ? a.d < b.d : a.j < b.j; });
    }
  }

  ConvexPolygon domain_;
  std::vector<Point2> sites_;
  struct Neighbour {
    std::uint32_t j;
    double d;
  };

  std::vector<std::vector<Neighbour>> order_;
  double diameter_ = 0.0;
  double tol_ = 0.0;
};

/// One-shot construction; prefer LaguerreBuilder when building many diagrams on one site set.
inline PowerDiagram laguerre_cells(const ConvexPolygon& domain, const std::vector<Point2>& sites,
                                   std::span<const double> psi) {
  return LaguerreBuilder(domain, sites).build(psi);
}

}  // namespace sfot
