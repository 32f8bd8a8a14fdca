#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace sfot;
using sfot::testing::vec;

namespace {

const ConvexPolygon kUnit = ConvexPolygon::rectangle(0, 0, 1, 1);

void expect_same_polygon(const ConvexPolygon& a, const ConvexPolygon& b, double tol) {
  ASSERT_EQ(a.size(), b.size());
  for (const auto& v : a.vertices()) {
    double best = 1e300;
    for (const auto& u : b.vertices()) best = std::min(best, distance(u, v));
    EXPECT_LE(best, tol);
  }
}

}  // namespace

TEST(ClipHalfplane, AxisAlignedCut) {
  const auto half = clip_halfplane(kUnit, {1, 0}, 0.5);
  expect_same_polygon(half, ConvexPolygon::rectangle(0, 0, 0.5, 1), 1e-15);
  EXPECT_NEAR(half.area(), 0.5, 1e-15);
  EXPECT_GT(half.signed_area(), 0.0);
}

TEST(ClipHalfplane, ContainingHalfplaneIsIdentity) { EXPECT_EQ(clip_halfplane(kUnit, {1, 0}, 2), kUnit); }

TEST(ClipHalfplane, DisjointHalfplaneIsEmpty) { EXPECT_TRUE(clip_halfplane(kUnit, {1, 0}, -1).empty()); }

TEST(ClipHalfplane, CutThroughVertexLeavesNoDuplicates) {
  const auto tri = clip_halfplane(kUnit, {1, 1}, 1.0);  // diagonal through (1,0) and (0,1)
  EXPECT_EQ(tri.size(), 3u);
  EXPECT_NEAR(tri.area(), 0.5, 1e-15);
}

TEST(PolygonIntersection, Cases) {
  EXPECT_EQ(polygon_intersection(kUnit, kUnit), kUnit);
  EXPECT_TRUE(polygon_intersection(kUnit, ConvexPolygon::rectangle(2, 2, 3, 3)).empty());
  expect_same_polygon(polygon_intersection(kUnit, ConvexPolygon::rectangle(0.5, 0, 1.5, 1)),
                      ConvexPolygon::rectangle(0.5, 0, 1, 1), 1e-15);
}

TEST(HausdorffDistance, Cases) {
  EXPECT_EQ(hausdorff_distance(kUnit, kUnit), 0.0);
  EXPECT_NEAR(hausdorff_distance(ConvexPolygon::rectangle(0, 0, 0.5, 1), ConvexPolygon::rectangle(0, 0, 0.4, 1)), 0.1,
              1e-15);
  EXPECT_NEAR(hausdorff_distance(kUnit, ConvexPolygon::rectangle(0, 0, 2, 2)), std::sqrt(2.0), 1e-15);
  EXPECT_THROW(hausdorff_distance(kUnit, ConvexPolygon{}), Error);
}

TEST(LaguerreCells, SingleSiteOwnsDomain) {
  const auto d = laguerre_cells(kUnit, {{0.3, 0.3}}, std::vector<double>{5.0});
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d.cells[0], kUnit);
  EXPECT_TRUE(d.facets.empty());
}

TEST(LaguerreCells, SymmetricSplit) {
  const std::vector<Point2> sites{{0.25, 0.5}, {0.75, 0.5}};
  const auto d = laguerre_cells(kUnit, sites, std::vector<double>{0.0, 0.0});
  expect_same_polygon(d.cells[0], ConvexPolygon::rectangle(0, 0, 0.5, 1), 1e-15);
  expect_same_polygon(d.cells[1], ConvexPolygon::rectangle(0.5, 0, 1, 1), 1e-15);
  ASSERT_EQ(d.facets.size(), 1u);
  EXPECT_EQ(d.facets[0].i, 0u);
  EXPECT_EQ(d.facets[0].j, 1u);
  EXPECT_NEAR(d.facets[0].length, 1.0, 1e-15);
}

TEST(LaguerreCells, ShiftedBoundary) {
  // 2<x, y2 - y1> = |y2|^2 - |y1|^2 + psi2 - psi1  =>  x = 0.4
  const std::vector<Point2> sites{{0.25, 0.5}, {0.75, 0.5}};
  const auto d = laguerre_cells(kUnit, sites, std::vector<double>{0.1, 0.0});
  expect_same_polygon(d.cells[0], ConvexPolygon::rectangle(0, 0, 0.4, 1), 1e-15);
  EXPECT_NEAR(d.facets.at(0).a.x, 0.4, 1e-15);
}

TEST(LaguerreCells, DuplicateSitesRejected) {
  try {
    laguerre_cells(kUnit, {{0.2, 0.2}, {0.5, 0.5}, {0.2, 0.2}}, std::vector<double>{0, 0, 0});
    FAIL() << "expected DuplicateSites";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DuplicateSites);
  }
}

TEST(LaguerreCells, LargeWeightEmptiesCell) {
  const std::vector<Point2> sites{{0.25, 0.5}, {0.75, 0.5}, {0.5, 0.5}};
  const auto d = laguerre_cells(kUnit, sites, std::vector<double>{0.0, 0.0, 10.0});
  EXPECT_TRUE(d.cells[2].empty());
  EXPECT_NEAR(d.cells[0].area() + d.cells[1].area(), 1.0, 1e-14);
}

// Property checks over random sites and dual vectors.
class DiagramProperties : public ::testing::TestWithParam<int> {};

TEST_P(DiagramProperties, PartitionShiftMonotoneFacets) {
  UnitRng rng(1000 + static_cast<std::uint64_t>(GetParam()));
  const int n = 2 + static_cast<int>(rng() * 30);
  const ConvexPolygon domain({{0, 0}, {2, 0}, {2.5, 1}, {1, 2}, {-0.5, 1}});
  std::vector<Point2> sites;
  for (int i = 0; i < n; ++i) sites.push_back({rng.uniform(0, 2), rng.uniform(0, 1.5)});
  Vector psi(n);
  for (int i = 0; i < n; ++i) psi[i] = rng.uniform(-0.3, 0.3);

  const LaguerreBuilder builder(domain, sites);
  const auto d = builder.build(as_span(psi));
  double total = 0.0;
  for (const auto& c : d.cells) total += c.area();
  EXPECT_NEAR(total, domain.area(), 1e-9 * domain.area());

  const double s = rng.uniform(-5, 5);
  const auto shifted = builder.build(as_span(Vector((psi.array() + s).matrix())));
  for (int i = 0; i < n; ++i) {
    ASSERT_EQ(shifted.cells[i].size(), d.cells[i].size());
    for (std::size_t k = 0; k < d.cells[i].size(); ++k) EXPECT_LE(distance(shifted.cells[i][k], d.cells[i][k]), 1e-12);
  }

  const int pick = static_cast<int>(rng() * n);
  Vector bigger = psi;
  bigger[pick] += 0.05;
  EXPECT_LE(builder.build(as_span(bigger)).cells[pick].area(), d.cells[pick].area() + 1e-15);

  for (std::size_t k = 0; k < d.facets.size(); ++k) {
    const Facet& f = d.facets[k];
    EXPECT_LT(f.i, f.j);
    if (k > 0) EXPECT_TRUE(d.facets[k - 1].i < f.i || (d.facets[k - 1].i == f.i && d.facets[k - 1].j < f.j));
    for (const Point2 p : {f.a, f.b, 0.5 * (f.a + f.b)}) {
      EXPECT_LE(d.cells[f.i].boundary_distance(p), 1e-9);
      EXPECT_LE(d.cells[f.j].boundary_distance(p), 1e-9);
    }
    // Points on the facet are equidistant in power distance.
    const Point2 m = 0.5 * (f.a + f.b);
    EXPECT_NEAR(norm2(m - sites[f.i]) + psi[f.i], norm2(m - sites[f.j]) + psi[f.j], 1e-12);
  }
}

INSTANTIATE_TEST_SUITE_P(Random, DiagramProperties, ::testing::Range(0, 25));

TEST(LaguerreCells, PruningMatchesBruteForce) {
  UnitRng rng(77);
  const int n = 60;
  std::vector<Point2> sites;
  for (int i = 0; i < n; ++i) sites.push_back({rng(), rng()});
  Vector psi(n);
  for (int i = 0; i < n; ++i) psi[i] = rng.uniform(-0.05, 0.05);
  const auto d = laguerre_cells(kUnit, sites, as_span(psi));
  for (int i = 0; i < n; ++i) {
    ConvexPolygon cell = kUnit;
    for (int j = 0; j < n && !cell.empty(); ++j) {
      if (j == i) continue;
      cell = clip_halfplane(cell, 2.0 * (sites[j] - sites[i]), norm2(sites[j]) - norm2(sites[i]) + psi[j] - psi[i], 1e-12);
    }
    EXPECT_NEAR(cell.area(), d.cells[i].area(), 1e-13);
  }
}

TEST(LaguerreCells, DeterministicAcrossThreadCounts) {
  UnitRng rng(5);
  const int n = 200;
  std::vector<Point2> sites;
  for (int i = 0; i < n; ++i) sites.push_back({rng(), rng()});
  const Vector psi = Vector::Zero(n);
  setenv("SFOT_THREADS", "1", 1);
  const auto one = laguerre_cells(kUnit, sites, as_span(psi));
  setenv("SFOT_THREADS", "4", 1);
  const auto four = laguerre_cells(kUnit, sites, as_span(psi));
  unsetenv("SFOT_THREADS");
  for (int i = 0; i < n; ++i) EXPECT_EQ(one.cells[i], four.cells[i]);
  ASSERT_EQ(one.facets.size(), four.facets.size());
  for (std::size_t k = 0; k < one.facets.size(); ++k) {
    EXPECT_EQ(one.facets[k].i, four.facets[k].i);
    EXPECT_EQ(one.facets[k].j, four.facets[k].j);
    EXPECT_EQ(one.facets[k].a, four.facets[k].a);
  }
}
