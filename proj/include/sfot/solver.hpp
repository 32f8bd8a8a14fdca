#pragma once

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "sfot/error.hpp"
#include "sfot/mass.hpp"
#include "sfot/power_diagram.hpp"
#include "sfot/storage_map.hpp"

namespace sfot {

/// Problem data: convex domain, normalized PWL density, target sites and storage parameters.
struct Instance {
  ConvexPolygon domain;
  DensityMesh mesh;
  std::vector<Point2> sites;
  StorageParams params;
  std::optional<Vector> psi0;

  std::size_t size() const noexcept { return sites.size(); }

  void validate() const {
    if (domain.size() < 3 || domain.signed_area() <= 0.0)
      throw Error(ErrorCode::InvalidInput, "domain must be a counterclockwise polygon with positive area");
    const std::size_t n = domain.size();
    for (std::size_t k = 0; k < n; ++k) {
      const Point2 a = domain[k], b = domain[(k + 1) % n], c = domain[(k + 2) % n];
      if (cross(b - a, c - b) < 0.0) throw Error(ErrorCode::InvalidInput, "domain is not convex");
    }
    if (sites.size() != params.size())
      throw Error(ErrorCode::MismatchedN, "site count differs from capacity count");
    params.validate();
    std::vector<Point2> sorted = sites;
    std::sort(sorted.begin(), sorted.end(), [](Point2 a, Point2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw Error(ErrorCode::DuplicateSites, "two sites coincide");
    mesh.check_covers(domain);
    if (std::abs(mesh.total_mass() - 1.0) > 1e-9)
      throw Error(ErrorCode::InvalidInput, "density is not normalized to unit mass");
    if (psi0 && psi0->size() != static_cast<Eigen::Index>(sites.size()))
      throw Error(ErrorCode::MismatchedN, "psi0 length differs from site count");
  }
};

struct SolverConfig {
  double zeta = 1e-10;
  int max_iter = 1000;
  int ell_max = 40;
  /// Compare Dw against central finite differences at every iteration (costly).
  bool fd_check = false;
};

/// One accepted Newton step, psi_k -> psi_{k+1}.
struct IterationRecord {
  int k = 0;
  double residual_before = 0.0;  // |w_{h,eps}(psi_k) - w|
  double residual_norm = 0.0;    // |w_{h,eps}(psi_{k+1}) - w|
  double residual_l1 = 0.0;
  double residual_linf = 0.0;
  int ell = 0;
  double tau = 1.0;  // 2^-ell
  double r = 0.0;    // normalization shift added to every component
  double min_wbar = 0.0;
  double sum_gap = 0.0;  // sum wbar - sum w after the step
  double fd_error = std::numeric_limits<double>::quiet_NaN();
};

struct Failure {
  ErrorCode code;
  std::string message;
};

struct Solution {
  Vector psi;
  MassVector masses;
  Vector wbar;
  double eps0 = 0.0;
  double initial_residual = 0.0;
  std::vector<IterationRecord> trace;
  bool converged = false;
  std::optional<Failure> failure;
  PowerDiagram diagram;
  /// max_i |optimality_residual^i| evaluated against the target capacities; NaN if undefined.
  double optimality_error = std::numeric_limits<double>::quiet_NaN();

  double residual() const { return trace.empty() ? initial_residual : trace.back().residual_norm; }
};

/// Cached evaluation of G at a dual vector.
struct Evaluation {
  PowerDiagram diagram;
  MassVector masses;
};

class Evaluator {
 public:
  explicit Evaluator(const Instance& instance)
      : instance_(&instance), builder_(instance.domain, instance.sites) {}

  const Instance& instance() const noexcept { return *instance_; }
  const LaguerreBuilder& builder() const noexcept { return builder_; }

  Evaluation evaluate(const Vector& psi) const {
    Evaluation e{builder_.build(as_span(psi)), {}};
    e.masses = mass_vector(e.diagram, instance_->mesh);
    return e;
  }

  MassJacobian jacobian(const Evaluation& e) const {
    return mass_jacobian(e.diagram, instance_->mesh, instance_->sites);
  }

 private:
  const Instance* instance_;
  LaguerreBuilder builder_;
};

/// Starting point on the normalization surface together with its admissibility floor eps0.
struct StartPoint {
  Vector psi;
  double eps0 = 0.0;
  Evaluation eval;
  Vector wbar;
};

namespace detail {

inline std::optional<StartPoint> try_start(const Evaluator& ev, const Vector& psi) {
  const auto& params = ev.instance().params;
  Evaluation e = ev.evaluate(psi);
  if (!in_k_eps(e.masses, params.eps)) return std::nullopt;
  const Projection proj = normalize_project(psi, e.masses, params);
  e.diagram.psi.assign(proj.psi.data(), proj.psi.data() + proj.psi.size());
  Vector wbar = capacity_map(proj.psi, e.masses, params);
  const double eps0 = 0.5 * std::min(wbar.minCoeff(), params.w.minCoeff());
  if (!(eps0 > 0.0)) return std::nullopt;
  return StartPoint{proj.psi, eps0, std::move(e), std::move(wbar)};
}

inline StartPoint start_from(const Evaluator& ev, const Vector& psi) {
  auto s = try_start(ev, psi);
  if (!s) throw Error(ErrorCode::InitFailed, "psi0 is not admissible (a cell mass <= eps or eps0 <= 0)");
  return std::move(*s);
}

/// Heuristic start: pick psi^i so that g(psi^i / h) roughly scales the Voronoi masses to w.
inline StartPoint default_start(const Evaluator& ev) {
  const Instance& inst = ev.instance();
  const auto n = static_cast<Eigen::Index>(inst.size());
  const auto& params = inst.params;
  const Vector zero = Vector::Zero(n);
  if (auto s = try_start(ev, zero)) return std::move(*s);

  const MassVector g0 = ev.evaluate(zero).masses;
  Vector guess(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double a = std::min(2.0 * static_cast<double>(n),
                              std::max(1.01, params.w[i] / std::max(g0[i] - params.eps, 1e-6)));
    guess[i] = params.h * g_inverse(a);
  }
  if (auto s = try_start(ev, guess)) return std::move(*s);

  const double diam = inst.domain.diameter();
  std::mt19937_64 rng(0x5eed5eedULL);
  for (int attempt = 0; attempt < 10; ++attempt) {
    Vector noisy = guess;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      noisy[i] += 0.1 * diam * diam * (2.0 * u - 1.0);
    }
    if (auto s = try_start(ev, noisy)) return std::move(*s);
  }
  throw Error(ErrorCode::InitFailed, "no admissible starting point found");
}

inline double fd_capacity_error(const Evaluator& ev, const Vector& psi, const SparseMatrix& dw) {
  const auto& params = ev.instance().params;
  const Eigen::Index n = psi.size();
  const double step = 1e-6 * (1.0 + psi.lpNorm<Eigen::Infinity>());
  const Eigen::MatrixXd dense = Eigen::MatrixXd(dw);
  double err = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    Vector p = psi, m = psi;
    p[j] += step;
    m[j] -= step;
    const Vector wp = capacity_map(p, ev.evaluate(p).masses, params);
    const Vector wm = capacity_map(m, ev.evaluate(m).masses, params);
    err = std::max(err, ((wp - wm) / (2.0 * step) - dense.col(j)).lpNorm<Eigen::Infinity>());
  }
  return err;
}

}  // namespace detail

/// A start point psi0 on the normalization surface with eps0 > 0; throws InitFailed.
inline Vector default_init(const Instance& instance) {
  Evaluator ev(instance);
  return detail::default_start(ev).psi;
}

/// Solves Dw d = -(wbar - w). Uses the symmetric negative definite form
/// diag(1/g) Dw = DG + (1/h) diag((G - eps) g'/g) when g values are available, and a
/// pivoted LU of Dw otherwise or if that factorization fails.
inline Vector newton_direction(const CapacityState& state, const Vector& w) {
  const Vector rhs = -(state.wbar - w);
  const Eigen::Index n = rhs.size();
  if (rhs.isZero(0.0)) return Vector::Zero(n);
  const double jac_norm = Vector(state.jac.cwiseAbs() * Vector::Ones(n)).maxCoeff();

  const auto acceptable = [&](const Vector& d) {
    if (!d.allFinite()) return false;
    const double scale = rhs.norm() + jac_norm * d.norm();
    return (state.jac * d - rhs).norm() <= 1e-10 * scale;
  };

  if (state.gvals.size() == n) {
    const Vector inv_g = state.gvals.cwiseInverse();
    SparseMatrix neg_m = -(inv_g.asDiagonal() * state.jac);
    SparseMatrix sym = 0.5 * (neg_m + SparseMatrix(neg_m.transpose()));
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(sym);
    if (ldlt.info() == Eigen::Success && (ldlt.vectorD().array() > 0.0).all()) {
      Vector d = ldlt.solve(Vector(-(inv_g.asDiagonal() * rhs)));
      if (ldlt.info() == Eigen::Success && acceptable(d)) return d;
    }
  }
  SparseMatrix a = state.jac;
  a.makeCompressed();
  Eigen::SparseLU<SparseMatrix> lu;
  lu.compute(a);
  if (lu.info() == Eigen::Success) {
    Vector d = lu.solve(rhs);
    if (lu.info() == Eigen::Success && acceptable(d)) return d;
  }
  throw Error(ErrorCode::SingularJacobian, "capacity Jacobian could not be factorized");
}

namespace detail {

inline void finish(Solution& sol, const Instance& inst) {
  try {
    const Vector res = optimality_residual(sol.psi, sol.masses, sol.wbar, inst.params);
    sol.optimality_error = res.lpNorm<Eigen::Infinity>();
  } catch (const Error&) {
    sol.optimality_error = std::numeric_limits<double>::quiet_NaN();
  }
}

}  // namespace detail

/// Damped Newton iteration for w_{h,eps}(psi) = w. Every accepted iterate is projected onto
/// {sum w_{h,eps} = sum w}, keeps min w_{h,eps} >= eps0, and decreases the residual by at
/// least the factor (1 - 2^-(ell+1)) where ell is the smallest exponent that passes both tests.
/// Failures are reported through Solution::failure with the trace preserved; to restart, call
/// again with psi0 set to a previous Solution::psi.
inline Solution newton_solve(const Instance& instance, const SolverConfig& config,
                             const std::optional<Vector>& psi0 = std::nullopt) {
  const auto& params = instance.params;
  const Vector& w = params.w;
  Evaluator ev(instance);
  Solution sol;

  std::optional<StartPoint> start;
  try {
    const auto& init = psi0 ? psi0 : instance.psi0;
    start = init ? detail::start_from(ev, *init) : detail::default_start(ev);
  } catch (const Error& e) {
    sol.failure = Failure{e.code(), e.what()};
    return sol;
  }

  Vector psi = std::move(start->psi);
  Evaluation current = std::move(start->eval);
  Vector wbar = std::move(start->wbar);
  sol.eps0 = start->eps0;
  double residual = (wbar - w).norm();
  sol.initial_residual = residual;

  const auto store = [&] {
    sol.psi = psi;
    sol.masses = current.masses;
    sol.wbar = wbar;
    sol.diagram = current.diagram;
  };

  for (int k = 0;; ++k) {
    if (residual < config.zeta) {
      sol.converged = true;
      break;
    }
    if (k >= config.max_iter) {
      sol.failure = Failure{ErrorCode::MaxIterations, "iteration limit reached"};
      break;
    }
    const MassJacobian dg = ev.jacobian(current);
    const CapacityState state = capacity_state(psi, current.masses, dg, params);
    Vector dir;
    try {
      dir = newton_direction(state, w);
    } catch (const Error& e) {
      sol.failure = Failure{e.code(), e.what()};
      break;
    }
    const double fd_error =
        config.fd_check ? detail::fd_capacity_error(ev, psi, state.jac) : std::numeric_limits<double>::quiet_NaN();

    bool accepted = false;
    for (int ell = 0; ell <= config.ell_max; ++ell) {
      const double tau = std::ldexp(1.0, -ell);
      const Vector trial = psi + tau * dir;
      Evaluation e = ev.evaluate(trial);
      if (!in_k_eps(e.masses, params.eps)) continue;
      const Projection proj = normalize_project(trial, e.masses, params);
      Vector trial_wbar = capacity_map(proj.psi, e.masses, params);
      const double min_wbar = trial_wbar.minCoeff();
      const Vector diff = trial_wbar - w;
      const double trial_residual = diff.norm();
      if (min_wbar >= sol.eps0 && trial_residual <= (1.0 - std::ldexp(1.0, -(ell + 1))) * residual) {
        IterationRecord rec;
        rec.k = k;
        rec.residual_before = residual;
        rec.residual_norm = trial_residual;
        rec.residual_l1 = diff.lpNorm<1>();
        rec.residual_linf = diff.lpNorm<Eigen::Infinity>();
        rec.ell = ell;
        rec.tau = tau;
        rec.r = -proj.r;
        rec.min_wbar = min_wbar;
        rec.sum_gap = trial_wbar.sum() - w.sum();
        rec.fd_error = fd_error;
        sol.trace.push_back(rec);

        psi = proj.psi;
        e.diagram.psi.assign(psi.data(), psi.data() + psi.size());
        current = std::move(e);
        wbar = std::move(trial_wbar);
        residual = trial_residual;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      sol.failure = Failure{ErrorCode::LineSearchStalled,
                            "no step length up to 2^-" + std::to_string(config.ell_max) + " passed the decrease test"};
      break;
    }
  }
  store();
  detail::finish(sol, instance);
  return sol;
}

}  // namespace sfot
