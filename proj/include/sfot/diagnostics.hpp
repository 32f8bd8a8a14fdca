#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "sfot/error.hpp"
#include "sfot/mass.hpp"
#include "sfot/solver.hpp"

namespace sfot {

/// Per-index distances between two cell partitions of the same domain.
struct PartitionDistanceReport {
  std::vector<double> per_cell_sym_diff;                   // mu(A_i symmetric-difference B_i)
  double total_sym_diff = 0.0;
  std::vector<std::optional<double>> per_cell_hausdorff;   // empty when either cell is empty
  double l1_weight_gap = 0.0;                              // |G_a - G_b|_1
};

/// Hausdorff distance index by index; undefined where either cell is empty.
inline std::vector<std::optional<double>> hausdorff_partitions(const PowerDiagram& a, const PowerDiagram& b) {
  if (a.size() != b.size()) throw Error(ErrorCode::MismatchedN, "partitions have different sizes");
  std::vector<std::optional<double>> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!a.cells[i].empty() && !b.cells[i].empty()) out[i] = hausdorff_distance(a.cells[i], b.cells[i]);
  return out;
}

/// mu(A delta B) = mu(A) + mu(B) - 2 mu(A n B) for every index; both cells are convex, so the
/// intersection is a single convex polygon.
inline PartitionDistanceReport sym_diff_partitions(const PowerDiagram& a, const PowerDiagram& b,
                                                   const DensityMesh& mesh) {
  if (a.size() != b.size()) throw Error(ErrorCode::MismatchedN, "partitions have different sizes");
  PartitionDistanceReport report;
  const std::size_t n = a.size();
  report.per_cell_sym_diff.assign(n, 0.0);
  std::vector<double> ma(n), mb(n);
  parallel_for(n, [&](std::size_t i) {
    ma[i] = integrate_density(a.cells[i], mesh);
    mb[i] = a.cells[i] == b.cells[i] ? ma[i] : integrate_density(b.cells[i], mesh);
    const double common = a.cells[i] == b.cells[i] ? ma[i]
                                                   : integrate_density(polygon_intersection(a.cells[i], b.cells[i]), mesh);
    report.per_cell_sym_diff[i] = std::max(0.0, ma[i] + mb[i] - 2.0 * common);
  });
  for (std::size_t i = 0; i < n; ++i) {
    report.total_sym_diff += report.per_cell_sym_diff[i];
    report.l1_weight_gap += std::abs(ma[i] - mb[i]);
  }
  report.per_cell_hausdorff = hausdorff_partitions(a, b);
  return report;
}

/// Computable pieces of the weight-gap bound
///   |G - lambda|_1 <= 2(N eps + |wbar - w|_1 + 2N sqrt(2 C h)),
/// reported separately because C is not known.
struct WeightGapReport {
  double n_eps = 0.0;
  double residual_l1 = 0.0;
  double sqrt_h = 0.0;
  std::optional<double> classical_gap;  // |G - reference|_1 when the reference lies in the simplex
};

inline WeightGapReport thm16_report(const Solution& solution, const StorageParams& params, const Vector& reference_w) {
  WeightGapReport r;
  r.n_eps = static_cast<double>(params.size()) * params.eps;
  r.residual_l1 = (solution.wbar - params.w).lpNorm<1>();
  r.sqrt_h = std::sqrt(params.h);
  if (reference_w.size() == solution.masses.size() && (reference_w.array() >= 0.0).all() &&
      std::abs(reference_w.sum() - 1.0) <= 1e-9)
    r.classical_gap = (solution.masses - reference_w).lpNorm<1>();
  return r;
}

/// Midpoint-convexity probe of the transport cost C(lambda) in the target weights.
struct ConvexityProbe {
  Vector lambda1;
  Vector lambda2;
  double t = 0.5;
  double lhs = 0.0;  // t C(lambda1) + (1 - t) C(lambda2)
  double rhs = 0.0;  // C(t lambda1 + (1 - t) lambda2)
  double gap = 0.0;
};

/// C(lambda): transport cost of the classical-mode solution with capacities lambda.
inline double classical_cost(const Instance& base, const Vector& lambda, double h, double eps,
                             const SolverConfig& config = {}) {
  Instance inst = base;
  inst.params.w = lambda;
  inst.params.h = h;
  inst.params.eps = eps;
  inst.psi0.reset();
  const Solution sol = newton_solve(inst, config);
  if (!sol.converged) {
    const auto code = sol.failure ? sol.failure->code : ErrorCode::MaxIterations;
    throw Error(code, "classical-mode solve for the convexity probe failed");
  }
  return transport_cost(sol.diagram, inst.mesh, inst.sites);
}

inline ConvexityProbe convexity_probe(const Instance& base, const Vector& lambda1, const Vector& lambda2, double t,
                                      double h_small = 0.02, double eps_small = -1.0,
                                      const SolverConfig& config = {}) {
  const auto n = static_cast<double>(base.size());
  if (eps_small < 0.0) eps_small = std::min(1e-4, 1.0 / (4.0 * n));
  if (!(t > 0.0 && t < 1.0)) throw Error(ErrorCode::InvalidInput, "probe parameter t must lie in (0, 1)");
  ConvexityProbe p{lambda1, lambda2, t, 0.0, 0.0, 0.0};
  const Vector mid = t * lambda1 + (1.0 - t) * lambda2;
  const double c1 = classical_cost(base, lambda1, h_small, eps_small, config);
  const double c2 = lambda2 == lambda1 ? c1 : classical_cost(base, lambda2, h_small, eps_small, config);
  p.lhs = t * c1 + (1.0 - t) * c2;
  p.rhs = classical_cost(base, mid, h_small, eps_small, config);
  p.gap = p.lhs - p.rhs;
  return p;
}

struct RateFit {
  double order = std::numeric_limits<double>::quiet_NaN();
  double linear_factor = 0.0;
};

/// Empirical convergence rates from a trace. linear_factor is the worst one-step ratio;
/// order is the least-squares slope of log r_{k+1} against log r_k over the last (at most
/// three) steps of the trailing run of full steps (ell = 0). Order stays NaN when fewer than
/// two such steps exist.
inline RateFit rate_fit(const std::vector<IterationRecord>& trace) {
  if (trace.empty()) throw Error(ErrorCode::InsufficientTrace, "trace has no iterations");
  RateFit fit;
  for (const auto& rec : trace)
    if (rec.residual_before > 0.0) fit.linear_factor = std::max(fit.linear_factor, rec.residual_norm / rec.residual_before);

  std::size_t first = trace.size();
  while (first > 0 && trace[first - 1].ell == 0 && trace[first - 1].residual_norm > 0.0) --first;
  first = std::max(first, trace.size() >= 3 ? trace.size() - 3 : std::size_t{0});
  const std::size_t count = trace.size() - first;
  if (count < 2) return fit;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = first; k < trace.size(); ++k) {
    const double x = std::log(trace[k].residual_before), y = std::log(trace[k].residual_norm);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double m = static_cast<double>(count);
  const double denom = m * sxx - sx * sx;
  if (denom != 0.0) fit.order = (m * sxy - sx * sy) / denom;
  return fit;
}

}  // namespace sfot
