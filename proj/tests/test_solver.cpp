#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace sfot;
using namespace sfot::testing;

namespace {

// Checks the step acceptance rules recorded in a trace.
void expect_trace_gates(const Solution& sol, const Instance& inst) {
  double prev = sol.initial_residual;
  for (const auto& rec : sol.trace) {
    EXPECT_EQ(rec.residual_before, prev);
    EXPECT_LE(rec.residual_norm, (1.0 - std::ldexp(1.0, -(rec.ell + 1))) * rec.residual_before);
    EXPECT_GE(rec.min_wbar, sol.eps0);
    EXPECT_LE(std::abs(rec.sum_gap), 1e-10);
    EXPECT_EQ(rec.tau, std::ldexp(1.0, -rec.ell));
    prev = rec.residual_norm;
  }
  if (sol.converged) {
    EXPECT_LT(sol.residual(), 1e-10);
    EXPECT_NEAR(sol.wbar.sum(), inst.params.w.sum(), 1e-12);
  }
}

Instance single_site(double w, double h = 0.5, double eps = 0.01) {
  Instance inst;
  inst.domain = ConvexPolygon::rectangle(0, 0, 1, 1);
  inst.mesh = uniform_unit_square();
  inst.sites = {{0.3, 0.6}};
  inst.params.h = h;
  inst.params.eps = eps;
  inst.params.w = vec({w});
  return inst;
}

}  // namespace

TEST(DefaultInit, SymmetricTwoPoint) {
  const auto inst = two_point_instance();
  const Vector psi = default_init(inst);
  EXPECT_LE(psi.cwiseAbs().maxCoeff(), 1e-12);
  const auto sol = newton_solve(inst, SolverConfig{});
  EXPECT_NEAR(sol.eps0, 0.49, 1e-12);
}

TEST(DefaultInit, SingleSite) {
  for (double w : {1.0, 1.6}) {
    const auto sol = newton_solve(single_site(w), SolverConfig{}, vec({0.8}));
    EXPECT_NEAR(sol.eps0, w / 2.0, 1e-12);
  }
}

TEST(DefaultInit, FallsBackWhenVoronoiCellCarriesNoMass) {
  // Density vanishes on [1,2]^2 inside [0,3]^2; the middle site's Voronoi cell lies in the hole.
  Instance inst;
  inst.domain = ConvexPolygon::rectangle(0, 0, 3, 3);
  inst.mesh = template_density(Template::KmtDensity);
  inst.sites = {{1.5, 1.5}};
  for (double x : {0.5, 1.5, 2.5})
    for (double y : {0.5, 1.5, 2.5})
      if (x != 1.5 || y != 1.5) inst.sites.push_back({x, y});
  inst.params.h = 0.5;
  inst.params.eps = 1e-3;
  inst.params.w = Vector::Constant(9, 1.0 / 9.0);
  inst.validate();

  const MassVector g0 = mass_vector(laguerre_cells(inst.domain, inst.sites, std::vector<double>(9, 0.0)), inst.mesh);
  ASSERT_LE(g0[0], inst.params.eps);

  const Vector psi = default_init(inst);
  const MassVector g = mass_vector(laguerre_cells(inst.domain, inst.sites, as_span(psi)), inst.mesh);
  EXPECT_TRUE(in_k_eps(g, inst.params.eps));
  EXPECT_GT(capacity_map(psi, g, inst.params).minCoeff(), 0.0);

  const auto sol = newton_solve(inst, SolverConfig{});
  EXPECT_TRUE(sol.converged) << (sol.failure ? sol.failure->message : "");
  expect_trace_gates(sol, inst);
}

TEST(NewtonSolve, ExactRootNeedsNoIterations) {
  const auto inst = two_point_instance();
  const auto sol = newton_solve(inst, SolverConfig{}, vec({0, 0}));
  EXPECT_TRUE(sol.converged);
  EXPECT_TRUE(sol.trace.empty());
  EXPECT_LT(sol.residual(), 1e-12);
}

TEST(NewtonSolve, SingleSiteConvergesByProjection) {
  for (double psi0 : {-0.7, 0.0, 2.5}) {
    const auto sol = newton_solve(single_site(1.0), SolverConfig{}, vec({psi0}));
    EXPECT_TRUE(sol.converged);
    EXPECT_TRUE(sol.trace.empty());
  }
}

TEST(NewtonSolve, AsymmetricTwoPoint) {
  const auto inst = two_point_instance(0.5, 0.01, vec({0.9, 0.7}));
  const auto sol = newton_solve(inst, SolverConfig{});
  ASSERT_TRUE(sol.converged);
  EXPECT_LT(sol.residual(), 1e-10);
  expect_trace_gates(sol, inst);

  // Re-evaluate from scratch through the public pieces.
  const MassVector g = mass_vector(laguerre_cells(inst.domain, inst.sites, as_span(sol.psi)), inst.mesh);
  const Vector wbar = capacity_map(sol.psi, g, inst.params);
  EXPECT_LT((wbar - inst.params.w).norm(), 1e-10);
  EXPECT_LE(optimality_residual(sol.psi, g, wbar, inst.params).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LE(sol.optimality_error, 1e-6 * (1.0 + sol.psi.cwiseAbs().maxCoeff()));
}

TEST(NewtonSolve, InadmissibleStartReportsInitFailed) {
  const auto inst = two_point_instance();
  const auto sol = newton_solve(inst, SolverConfig{}, vec({5, 0}));
  EXPECT_FALSE(sol.converged);
  ASSERT_TRUE(sol.failure.has_value());
  EXPECT_EQ(sol.failure->code, ErrorCode::InitFailed);
}

TEST(NewtonSolve, IterationLimitIsReported) {
  const auto inst = two_point_instance(0.5, 0.01, vec({0.9, 0.7}));
  SolverConfig config;
  config.max_iter = 1;
  const auto sol = newton_solve(inst, config, vec({0, 0}));
  EXPECT_FALSE(sol.converged);
  ASSERT_TRUE(sol.failure.has_value());
  EXPECT_EQ(sol.failure->code, ErrorCode::MaxIterations);
  EXPECT_EQ(sol.trace.size(), 1u);
}

TEST(NewtonSolve, RestartFromPartialProgress) {
  const auto inst = two_point_instance(0.5, 0.01, vec({0.9, 0.7}));
  SolverConfig config;
  config.max_iter = 1;
  const auto partial = newton_solve(inst, config, vec({0, 0}));
  const auto resumed = newton_solve(inst, SolverConfig{}, partial.psi);
  EXPECT_TRUE(resumed.converged);
  EXPECT_NEAR(resumed.initial_residual, partial.residual(), 1e-14);
}

TEST(NewtonSolve, Deterministic) {
  const auto rc = random_case(31);
  const auto a = newton_solve(rc.instance, SolverConfig{});
  const auto b = newton_solve(rc.instance, SolverConfig{});
  EXPECT_EQ(a.psi, b.psi);
  ASSERT_EQ(a.trace.size(), b.trace.size());
  for (std::size_t k = 0; k < a.trace.size(); ++k) EXPECT_EQ(a.trace[k].residual_norm, b.trace[k].residual_norm);
}

TEST(NewtonSolve, FiniteDifferenceCheckInTrace) {
  const auto inst = two_point_instance(0.5, 0.01, vec({0.9, 0.7}));
  SolverConfig config;
  config.fd_check = true;
  const auto sol = newton_solve(inst, config);
  ASSERT_FALSE(sol.trace.empty());
  for (const auto& rec : sol.trace) EXPECT_LE(rec.fd_error, 1e-5);
}

class SolverProperties : public ::testing::TestWithParam<int> {};

TEST_P(SolverProperties, RandomInstancesConvergeWithinGates) {
  const auto rc = random_case(2000 + static_cast<std::uint64_t>(GetParam()));
  const auto sol = newton_solve(rc.instance, SolverConfig{});
  ASSERT_TRUE(sol.converged) << (sol.failure ? sol.failure->message : "");
  expect_trace_gates(sol, rc.instance);
  EXPECT_LE(sol.optimality_error, 1e-6 * (1.0 + sol.psi.cwiseAbs().maxCoeff()));
}

INSTANTIATE_TEST_SUITE_P(Random, SolverProperties, ::testing::Range(0, 15));

TEST(NewtonDirection, ZeroResidual) {
  CapacityState s;
  s.wbar = vec({0.4, 0.6});
  s.jac = Eigen::MatrixXd((Eigen::Matrix2d() << -2, 1, 1, -2).finished()).sparseView();
  s.gvals = vec({2, 2});
  EXPECT_EQ(newton_direction(s, s.wbar), Vector::Zero(2));
}

TEST(NewtonDirection, ScalarDivision) {
  CapacityState s;
  s.wbar = vec({1.3});
  s.jac = Eigen::MatrixXd::Constant(1, 1, -0.8).sparseView();
  s.gvals = vec({1.7});
  EXPECT_NEAR(newton_direction(s, vec({1.1}))[0], -(1.3 - 1.1) / -0.8, 1e-15);
}

TEST(NewtonDirection, StructuredSystemsMultiplyBack) {
  UnitRng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 5;
    // Build DG (symmetric, nonnegative off-diagonal, zero row sums) and a negative diagonal.
    Eigen::MatrixXd dg = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) dg(i, j) = dg(j, i) = rng() < 0.6 ? rng() : 0.0;
    for (int i = 0; i < n; ++i) dg(i, i) = -(dg.row(i).sum() - dg(i, i));
    Vector gv(n), diag(n), wbar(n), w(n);
    for (int i = 0; i < n; ++i) {
      gv[i] = rng.uniform(1.05, 3.0);
      diag[i] = -rng.uniform(0.01, 1.0);
      wbar[i] = rng();
      w[i] = rng();
    }
    CapacityState s;
    s.gvals = gv;
    s.wbar = wbar;
    s.jac = Eigen::MatrixXd(gv.asDiagonal() * dg + Eigen::MatrixXd(diag.asDiagonal())).sparseView();
    const Vector d = newton_direction(s, w);
    const Vector rhs = -(wbar - w);
    EXPECT_LE((s.jac * d - rhs).norm(), 1e-12 * (1.0 + rhs.norm()));

    // Without g values the general factorization must agree.
    CapacityState plain = s;
    plain.gvals.resize(0);
    EXPECT_LE((newton_direction(plain, w) - d).norm(), 1e-10 * (1.0 + d.norm()));
  }
}

TEST(NewtonDirection, SingularSystemThrows) {
  CapacityState s;
  s.wbar = vec({0.4, 0.6});
  s.jac = Eigen::MatrixXd((Eigen::Matrix2d() << -1, 1, 1, -1).finished()).sparseView();
  try {
    newton_direction(s, vec({0.6, 0.3}));
    FAIL() << "expected SingularJacobian";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularJacobian);
  }
}

TEST(Instance, Validation) {
  auto inst = two_point_instance();
  EXPECT_NO_THROW(inst.validate());
  inst.sites[1] = inst.sites[0];
  EXPECT_THROW(inst.validate(), Error);
  inst = two_point_instance();
  inst.params.w = vec({0.98});
  EXPECT_THROW(inst.validate(), Error);
  inst = two_point_instance();
  inst.domain = ConvexPolygon::rectangle(0, 0, 2, 1);
  EXPECT_THROW(inst.validate(), Error);
}
