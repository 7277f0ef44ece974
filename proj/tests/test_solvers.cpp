#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "graph_nls/continuation.hpp"
#include "graph_nls/soliton.hpp"

using namespace graph_nls;

namespace {

std::shared_ptr<const Mesh> make_mesh(MetricGraph g, double h, double L) {
  return std::make_shared<const Mesh>(build_mesh(std::make_shared<const MetricGraph>(std::move(g)), h, L));
}

constexpr double kStar2Mass = 2.2258253490446108;  // mass of phi_8 on the line

}  // namespace

TEST(GnConstant, DefaultsAndEstimateBelowSharpValue) {
  // sharp constants, from the closed-form soliton integrals
  EXPECT_NEAR(line_gn_constant(8.0), 0.3121906232499929, 1e-13);
  EXPECT_NEAR(halfline_gn_constant(8.0), 2.4975249859999434, 1e-12);
  EXPECT_EQ(default_gn_constant(preset_star(2), 8.0).source, "line");
  EXPECT_EQ(default_gn_constant(preset_tadpole(2, 1), 8.0).source, "halfline");
  const auto mesh = make_mesh(preset_tadpole(2, 1), 1e-2, 10);
  const double est = estimate_gn_constant(mesh, 8.0, 200, 7);
  EXPECT_GT(est, 0.0);
  EXPECT_LT(est, halfline_gn_constant(8.0));
}

TEST(Endpoints, TadpoleBoundsHold) {
  const auto mesh = make_mesh(preset_tadpole(2, 1), 1e-3, 15);
  const EnergyModel m(mesh, 8.0, 1.0, 1.0);
  const Endpoints ep = make_endpoints(m);
  EXPECT_TRUE(ep.verified);
  const auto& ops = m.ops();
  EXPECT_NEAR(mass(ops, ep.w1.values()), 1.0, 1e-13);
  EXPECT_NEAR(mass(ops, ep.w2.values()), 1.0, 1e-13);
  // the four bound checks, evaluated directly
  for (double rho : {0.5, 1.0}) {
    const EnergyModel mr = m.with_rho(rho);
    EXPECT_LE(energy(mr, ep.w1), 0.5 * ep.mp.alpha);
    EXPECT_LT(energy(mr, ep.w2), 0.0);
  }
  EXPECT_LT(dirichlet_form(m, ep.w1.values()), ep.mp.k0);
  EXPECT_GT(dirichlet_form(m, ep.w2.values()), 2.0 * ep.mp.k0);
}

TEST(Endpoints, MassRescalesAndShortGeometryErrors) {
  const auto mesh = make_mesh(preset_tadpole(2, 1), 1e-3, 15);
  const EnergyModel m(mesh, 8.0, 1.0, 0.5);
  const Endpoints a = make_endpoints(m);
  const Endpoints b = make_endpoints(m.with_mu(1.0));
  EXPECT_NEAR(mass(m.ops(), a.w2.values()), 0.5, 1e-14);
  EXPECT_NEAR(mass(m.ops(), b.w2.values()), 1.0, 1e-14);
  EXPECT_LT(a.r2, b.r2);

  // small masses need a bump narrower than the mesh allows
  EXPECT_THROW(make_endpoints(m.with_mu(0.25)), InputError);

  // mu = 2 needs a long half-line for the spread bump
  try {
    make_endpoints(m.with_mu(2.0));
    FAIL() << "expected a truncation error";
  } catch (const TruncationError& e) {
    EXPECT_GT(e.suggested_L(), 15.0);
    EXPECT_NE(std::string(e.what()).find("suggested L"), std::string::npos);
  }

  // short core edge: either the bounds hold or the compression cap is reported
  GraphSpec spec;
  spec.vertices = {"A", "B"};
  spec.edges = {{"core", "A", "B", 0.1, {}}, {"h1", "A", std::nullopt, kInfinity, {}}};
  const auto short_mesh = make_mesh(build_graph(spec), 1e-3, 15);
  try {
    const Endpoints ep = make_endpoints(EnergyModel(short_mesh, 8.0, 1.0, 0.5));
    EXPECT_TRUE(ep.b2.ok);
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("E(w2) < 0"), std::string::npos) << e.what();
  }
}

TEST(InitPath, Examples) {
  const auto mesh = make_mesh(preset_tadpole(2, 1), 1e-2, 15);
  const EnergyModel m(mesh, 8.0, 1.0, 1.0);
  const Endpoints ep = make_endpoints(m);
  const Path two = init_path(m.ops(), ep.w1, ep.w2, 2, 1.0);
  ASSERT_EQ(two.nodes.size(), 2u);
  EXPECT_EQ(two.nodes[0], ep.w1.values());
  EXPECT_EQ(two.nodes[1], ep.w2.values());

  const Path many = init_path(m.ops(), ep.w1, ep.w2, 17, 1.0);
  ASSERT_EQ(many.nodes.size(), 17u);
  for (const auto& n : many.nodes) EXPECT_NEAR(mass(m.ops(), n), 1.0, 1e-13);

  const Vec neg = -ep.w1.values();
  EXPECT_THROW(init_path(m.ops(), ep.w1.values(), neg, 3, 1.0), InputError);
  EXPECT_THROW(init_path(m.ops(), ep.w1.values(), ep.w2.values(), 1, 1.0), InputError);
}

TEST(MountainPass, StarOracleEnergyBeforeNewton) {
  const auto mesh = make_mesh(preset_star(2), 1e-3, 15);
  const EnergyModel m(mesh, 8.0, 1.0, kStar2Mass);
  const Endpoints ep = make_endpoints(m);
  const MountainPassResult r = mountain_pass_deform(m, init_path(m.ops(), ep.w1, ep.w2, 24, kStar2Mass));
  ASSERT_TRUE(r.converged);
  EXPECT_NEAR(r.energy, soliton_energy(8.0), 1e-3);
  for (std::size_t i = 1; i < r.history.size(); ++i) EXPECT_LE(r.history[i], r.history[i - 1]);
}

TEST(MountainPass, TadpoleHistoryAndRestart) {
  const auto mesh = make_mesh(preset_tadpole(2, 1), 1e-3, 15);
  const EnergyModel m(mesh, 8.0, 1.0, 1.0);
  const Endpoints ep = make_endpoints(m);
  MountainPassOptions opt;
  opt.tol_mp = 1e-3;
  const MountainPassResult r = mountain_pass_deform(m, init_path(m.ops(), ep.w1, ep.w2, 24, 1.0), opt);
  ASSERT_TRUE(r.converged);
  EXPECT_LT(r.iterations, 5000);
  EXPECT_LE(r.pg_norm, 1e-3);
  for (std::size_t i = 1; i < r.history.size(); ++i) EXPECT_LE(r.history[i], r.history[i - 1]);
  EXPECT_GT(r.energy, ep.mp.alpha);

  // a path that already carries the critical point stops at once
  const MountainPassResult again = mountain_pass_deform(m, r.path, opt);
  EXPECT_TRUE(again.converged);
  EXPECT_EQ(again.iterations, 0);
  EXPECT_NEAR(again.energy, r.energy, 1e-12 * r.energy);
}

TEST(MountainPass, PathWithoutInteriorNodeIsRejected) {
  const auto mesh = make_mesh(preset_tadpole(2, 1), 1e-2, 15);
  const EnergyModel m(mesh, 8.0, 1.0, 1.0);
  const Endpoints ep = make_endpoints(m);
  EXPECT_THROW(mountain_pass_deform(m, init_path(m.ops(), ep.w1, ep.w2, 2, 1.0)), InputError);
}

TEST(Newton, QuadraticConvergenceFromPerturbedSoliton) {
  const auto mesh = make_mesh(preset_star(2), 1e-3, 15);
  const EnergyModel m(mesh, 8.0, 1.0, kStar2Mass);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  auto u0 = GraphFunction::interpolate(mesh, [&](std::size_t, double x) { return soliton_profile(8.0, x); }).values();
  for (Eigen::Index i = 0; i < u0.size(); ++i) u0[i] *= 1.0 + 1e-3 * U(rng);
  const NewtonResult r = newton_refine(m, u0, 1.0 + 1e-3);
  ASSERT_TRUE(r.converged);
  EXPECT_NEAR(r.lambda, 1.0, 1e-5);
  // e_{k+1} / e_k^2 stays bounded while the merit is above round-off
  for (std::size_t k = 1; k + 1 < r.history.size(); ++k) {
    if (r.history[k] < 1e-9) break;
    EXPECT_LT(r.history[k + 1] / (r.history[k] * r.history[k]), 1e4) << "step " << k;
  }
  const auto exact = GraphFunction::interpolate(mesh, [&](std::size_t, double x) { return soliton_profile(8.0, x); });
  EXPECT_LT((r.u - exact.values()).cwiseAbs().maxCoeff() / exact.values().maxCoeff(), 1e-3);
}

TEST(Newton, FixedPointAndZeroStart) {
  const auto mesh = make_mesh(preset_star(2), 2e-3, 15);
  const EnergyModel m(mesh, 8.0, 1.0, kStar2Mass);
  const auto u0 = GraphFunction::interpolate(mesh, [&](std::size_t, double x) { return soliton_profile(8.0, x); });
  const NewtonResult a = newton_refine(m, u0.values(), 1.0);
  ASSERT_TRUE(a.converged);
  const NewtonResult b = newton_refine(m, a.u, a.lambda);
  EXPECT_LE(b.steps, 1);
  EXPECT_LT((b.u - a.u).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(b.lambda, a.lambda, 1e-12);

  EXPECT_THROW(newton_refine(m, Vec::Zero(static_cast<Eigen::Index>(mesh->num_dofs())), 1.0), SolverError);
}

TEST(Newton, PolishKeepsSmallValuesPositive) {
  const auto mesh = make_mesh(preset_tadpole(2, 1), 1e-3, 15);
  const EnergyModel m(mesh, 8.0, 1.0, 1.0);
  const CriticalPoint cp = solve_from_scratch(m);
  const Vec& u = cp.u.values();
  EXPECT_GT(u.minCoeff(), 0.0);
  // half-line values follow the discrete exponential to relative precision
  const std::size_t hl = mesh->graph().halflines().front();
  const double q1 = cp.u.node(hl, 3000) / cp.u.node(hl, 2999), q2 = cp.u.node(hl, 6000) / cp.u.node(hl, 5999);
  EXPECT_NEAR(q1, q2, 1e-10);
  EXPECT_NEAR(lagrange_estimate(m, u), cp.lambda, 1e-8 * cp.lambda);
}

TEST(Continuation, SingleEntryMatchesScratchAndRhoOrder) {
  const auto mesh = make_mesh(preset_tadpole(2, 1), 4e-3, 15);
  const EnergyModel m(mesh, 8.0, 1.0, 1.0);
  const CriticalPoint direct = solve_from_scratch(m);
  const ContinuationResult one = continuation_run(m, {{1.0, 1.0}});
  ASSERT_FALSE(one.failed) << one.failure;
  ASSERT_EQ(one.stages.size(), 1u);
  EXPECT_EQ(one.stages[0].point.lambda, direct.lambda);
  EXPECT_EQ(one.stages[0].point.energy, direct.energy);

  const ContinuationResult r = continuation_run(m, {{0.5, 1.0}, {0.75, 1.0}, {1.0, 1.0}});
  ASSERT_FALSE(r.failed) << r.failure;
  ASSERT_EQ(r.stages.size(), 3u);
  EXPECT_TRUE(r.stages[1].point.warm_started);
  for (std::size_t k = 1; k < 3; ++k) EXPECT_LE(r.stages[k].point.energy, r.stages[k - 1].point.energy + 1e-8);
  EXPECT_NEAR(r.stages[2].point.lambda, direct.lambda, 1e-8 * direct.lambda);
}

TEST(Continuation, PartialFailureKeepsCompletedStages) {
  const auto mesh = make_mesh(preset_tadpole(2, 1), 4e-3, 15);
  const EnergyModel m(mesh, 8.0, 1.0, 1.0);
  // mu = 50 cannot host the spread endpoint on L = 15
  const ContinuationResult r = continuation_run(m, {{0.5, 1.0}, {0.6, 1.0}, {1.0, 50.0}});
  EXPECT_TRUE(r.failed);
  EXPECT_EQ(r.failed_index, 2u);
  EXPECT_EQ(r.stages.size(), 2u);
  EXPECT_THROW(continuation_run(m, {}), InputError);
}
