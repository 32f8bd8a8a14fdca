#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "sfot/error.hpp"
#include "sfot/mass.hpp"

namespace sfot {

/// Regularization scale h, mass floor eps and per-site capacities w.
struct StorageParams {
  double h = 0.5;
  double eps = 1e-6;
  Vector w;

  std::size_t size() const noexcept { return static_cast<std::size_t>(w.size()); }

  /// Throws InvalidInput unless h in (0, 1], eps in (0, 1/(2N)), w^i in [0, 1] and sum w >= 1.
  void validate() const {
    const auto n = static_cast<double>(w.size());
    if (w.size() == 0) throw Error(ErrorCode::InvalidInput, "no capacities");
    if (!(h > 0.0 && h <= 1.0)) throw Error(ErrorCode::InvalidInput, "h must lie in (0, 1]");
    if (!(eps > 0.0 && eps < 1.0 / (2.0 * n))) throw Error(ErrorCode::InvalidInput, "eps must lie in (0, 1/(2N))");
    for (Eigen::Index i = 0; i < w.size(); ++i)
      if (!(w[i] >= 0.0 && w[i] <= 1.0))
        throw Error(ErrorCode::InvalidInput, "capacity " + std::to_string(i) + " outside [0, 1]");
    if (w.sum() < 1.0 - 1e-12) throw Error(ErrorCode::InvalidInput, "capacities sum to less than one");
  }
};

/// w_{h,eps}(psi) and its Jacobian at one psi, plus the g values used to symmetrize it.
struct CapacityState {
  Vector wbar;
  SparseMatrix jac;
  Vector gvals;  // g(psi^i / h); may be empty
};

/// g(t) = 2(1 + t^2 - t sqrt(1 + t^2)), evaluated without cancellation for t > 0.
inline double g_eval(double t) {
  const double s = std::hypot(1.0, t);
  if (t > 0.0) return 2.0 * s / (s + t);
  return 2.0 * (1.0 + t * t - t * s);
}

/// g'(t) = -2 (t - sqrt(1 + t^2))^2 / sqrt(1 + t^2); for t > 0 the square equals 1/(t + s)^2.
inline double g_prime(double t) {
  const double s = std::hypot(1.0, t);
  if (t > 0.0) {
    const double ts = t + s;
    return -2.0 / (s * ts * ts);
  }
  const double d = t - s;
  return -2.0 * d * d / s;
}

/// Inverse of g on (1, inf): t = (2 - a) / (2 sqrt(a - 1)).
inline double g_inverse(double a) {
  if (!(a > 1.0)) throw Error(ErrorCode::DomainError, "g_inverse requires a > 1");
  return (2.0 - a) / (2.0 * std::sqrt(a - 1.0));
}

inline Vector capacity_map(const Vector& psi, const MassVector& masses, const StorageParams& params) {
  Vector wbar(psi.size());
  for (Eigen::Index i = 0; i < psi.size(); ++i) wbar[i] = (masses[i] - params.eps) * g_eval(psi[i] / params.h);
  return wbar;
}

/// Dw = diag(g(psi/h)) DG + (1/h) diag((G - eps) g'(psi/h)).
inline SparseMatrix capacity_jacobian(const Vector& psi, const MassVector& masses, const MassJacobian& jac,
                                      const StorageParams& params) {
  const Eigen::Index n = psi.size();
  Vector gv(n), diag(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    gv[i] = g_eval(psi[i] / params.h);
    diag[i] = (masses[i] - params.eps) * g_prime(psi[i] / params.h) / params.h;
  }
  SparseMatrix dw = gv.asDiagonal() * jac;
  SparseMatrix d(n, n);
  d.reserve(Eigen::VectorXi::Constant(n, 1));
  for (Eigen::Index i = 0; i < n; ++i) d.insert(i, i) = diag[i];
  dw += d;
  dw.makeCompressed();
  return dw;
}

inline CapacityState capacity_state(const Vector& psi, const MassVector& masses, const MassJacobian& jac,
                                    const StorageParams& params) {
  CapacityState state;
  state.wbar = capacity_map(psi, masses, params);
  state.jac = capacity_jacobian(psi, masses, jac, params);
  state.gvals.resize(psi.size());
  for (Eigen::Index i = 0; i < psi.size(); ++i) state.gvals[i] = g_eval(psi[i] / params.h);
  return state;
}

/// True when every cell mass exceeds eps.
inline bool in_k_eps(const MassVector& masses, double eps) { return (masses.array() > eps).all(); }

struct Projection {
  Vector psi;     // psi - r * 1
  double r = 0.0;
};

/// Finds the unique r with sum_i (G^i - eps) g((psi^i - r)/h) = sum_i w^i and returns psi - r 1.
/// The left side is strictly increasing in r, so a bracketed Newton iteration with bisection
/// fallback converges globally.
inline Projection normalize_project(const Vector& psi, const MassVector& masses, const StorageParams& params) {
  if (!in_k_eps(masses, params.eps))
    throw Error(ErrorCode::NotInKEps, "some cell mass does not exceed eps");
  const double h = params.h;
  const double target = params.w.sum();
  const Vector excess = (masses.array() - params.eps).matrix();

  const auto phi = [&](double r, double* slope) {
    double value = -target, d = 0.0;
    for (Eigen::Index i = 0; i < psi.size(); ++i) {
      const double t = (psi[i] - r) / h;
      value += excess[i] * g_eval(t);
      d -= excess[i] * g_prime(t) / h;
    }
    if (slope) *slope = d;
    return value;
  };

  const double psi_min = psi.minCoeff(), psi_max = psi.maxCoeff();
  const double ratio = target / excess.sum();  // > 1 because sum(G - eps) < 1 <= sum w
  double lo = psi_min - h * g_inverse(ratio) - 1.0;
  double hi = psi_max + 1.0;
  for (double step = 1.0; phi(lo, nullptr) > 0.0; step *= 2.0) lo -= step;
  for (double step = 1.0; phi(hi, nullptr) < 0.0; step *= 2.0) hi += step;

  const double tol = 1e-13 * target;
  double r = 0.5 * (lo + hi);
  for (int iter = 0; iter < 400; ++iter) {
    double slope = 0.0;
    const double value = phi(r, &slope);
    if (std::abs(value) <= tol) break;
    if (value > 0.0)
      hi = r;
    else
      lo = r;
    if (hi - lo <= 1e-15 * (1.0 + std::abs(r))) break;
    double next = slope > 0.0 ? r - value / slope : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    r = next;
  }
  return {(psi.array() - r).matrix(), r};
}

/// Smoothed storage fee: -h sum_i sqrt((l^i - eps)(w^i - l^i + eps)) on the simplex
/// intersected with the boxes [eps, w^i + eps]; +inf elsewhere.
inline double storage_fee(const Vector& lambda, const StorageParams& params) {
  const double inf = std::numeric_limits<double>::infinity();
  if (std::abs(lambda.sum() - 1.0) > 1e-9) return inf;
  double fee = 0.0;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    const double l = lambda[i];
    if (l < 0.0 || l < params.eps || l > params.w[i] + params.eps) return inf;
    fee -= params.h * std::sqrt((l - params.eps) * (params.w[i] - l + params.eps));
  }
  return fee;
}

/// Derivative of the smoothed fee at G minus psi:
///   h (2(G^i - eps) - t^i) / (2 sqrt((G^i - eps)(t^i - G^i + eps))) - psi^i,
/// which vanishes identically when t = w_{h,eps}(psi).
inline Vector optimality_residual(const Vector& psi, const MassVector& masses, const Vector& wbar,
                                  const StorageParams& params) {
  Vector res(psi.size());
  for (Eigen::Index i = 0; i < psi.size(); ++i) {
    const double t = masses[i] - params.eps;
    const double arg = t * (wbar[i] - t);
    if (!(t > 0.0) || !(arg > 0.0))
      throw Error(ErrorCode::BoundaryDegenerate, "square-root argument not positive at index " + std::to_string(i));
    res[i] = params.h * (2.0 * t - wbar[i]) / (2.0 * std::sqrt(arg)) - psi[i];
  }
  return res;
}

}  // namespace sfot
