#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "graph_nls/operators.hpp"

using namespace graph_nls;

namespace {

std::shared_ptr<const MetricGraph> share(MetricGraph g) { return std::make_shared<const MetricGraph>(std::move(g)); }

std::shared_ptr<const Mesh> share(Mesh m) { return std::make_shared<const Mesh>(std::move(m)); }

Eigen::MatrixXd dense(const SpMat& a) { return Eigen::MatrixXd(a); }

// Interval [0, len] from A to B whose only half-line hangs off B.
struct IntervalFixture {
  std::shared_ptr<const Mesh> mesh;
  DiscreteOperators ops;
  std::vector<std::ptrdiff_t> dofs;  // dofs along the interval
};

IntervalFixture interval(double len, double h) {
  IntervalFixture f;
  f.mesh = share(build_mesh(share(preset_interval_plus_line(len)), h, 2.0 * h));
  f.ops = assemble_operators(*f.mesh);
  f.dofs = f.mesh->edge(0).dof;
  return f;
}

}  // namespace

TEST(BuildMesh, IntervalPlusLineCounts) {
  const auto m = build_mesh(preset_interval_plus_line(1.0), 0.5, 2.0);
  EXPECT_EQ(m.edge(0).n_elems, 2u);
  EXPECT_EQ(m.edge(1).n_elems, 4u);
  EXPECT_EQ(m.num_nodes(), 7u);
  EXPECT_EQ(m.num_dofs(), 6u);  // far Dirichlet node eliminated
  EXPECT_EQ(m.edge(0).dof.back(), m.edge(1).dof.front());
  const auto r = build_mesh(preset_interval_plus_line(1.0), 0.5, 2.0, FarBoundary::Robin);
  EXPECT_EQ(r.num_dofs(), 7u);
  EXPECT_EQ(r.far_dofs().size(), 1u);
}

TEST(BuildMesh, TadpoleCounts) {
  // loop halves [J, mid] and [mid, J] with one interior node each, the
  // half-line [0, 1] with one interior node and an eliminated far node
  const auto m = build_mesh(preset_tadpole(2.0, 1), 0.5, 1.0);
  EXPECT_EQ(m.edges().size(), 3u);
  EXPECT_EQ(m.num_nodes(), 6u);
  EXPECT_EQ(m.num_dofs(), 5u);
  EXPECT_EQ(m.edge(0).dof.front(), m.edge(1).dof.back());
  EXPECT_EQ(m.edge(0).dof.back(), m.edge(1).dof.front());
}

TEST(BuildMesh, RejectsCoarseSpacing) {
  EXPECT_THROW(build_mesh(preset_interval_plus_line(1.0), 2.0, 40.0), InputError);
  EXPECT_THROW(build_mesh(preset_interval_plus_line(1.0), 0.6, 40.0), InputError);
  EXPECT_THROW(build_mesh(preset_interval_plus_line(1.0), 0.1, 0.1), InputError);
  EXPECT_THROW(build_mesh(preset_interval_plus_line(1.0), -0.1, 4.0), InputError);
}

TEST(BuildMesh, HashDependsOnLayout) {
  const auto g = share(preset_tadpole(2.0, 1));
  EXPECT_EQ(build_mesh(g, 0.1, 5.0).hash(), build_mesh(g, 0.1, 5.0).hash());
  EXPECT_NE(build_mesh(g, 0.1, 5.0).hash(), build_mesh(g, 0.05, 5.0).hash());
  EXPECT_NE(build_mesh(g, 0.1, 5.0).hash(), build_mesh(g, 0.1, 6.0).hash());
}

TEST(Assemble, SingleEdgeStiffness) {
  const auto f = interval(1.0, 0.5);
  Eigen::Matrix3d a;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) a(i, j) = f.ops.A.coeff(f.dofs[i], f.dofs[j]);
  // the B row also couples to the half-line; restrict to the interval elements
  a(2, 2) -= 1.0 / f.mesh->edge(1).h;
  Eigen::Matrix3d expect;
  expect << 2, -2, 0, -2, 4, -2, 0, -2, 2;
  EXPECT_EQ(a, expect);
}

TEST(Assemble, SymmetryAndConstants) {
  const auto mesh = build_mesh(preset_dumbbell(1.0, 2.0), 0.1, 4.0, FarBoundary::Robin);
  const auto ops = assemble_operators(mesh);
  EXPECT_EQ((dense(ops.A) - dense(ops.A).transpose()).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ((dense(ops.M) - dense(ops.M).transpose()).cwiseAbs().maxCoeff(), 0.0);
  // Robin far nodes keep every row free of Dirichlet eliminations
  EXPECT_LT((ops.A * Vec::Ones(ops.A.rows())).cwiseAbs().maxCoeff(), 1e-12);
  Eigen::SimplicialLDLT<SpMat> ldlt(ops.M);
  EXPECT_EQ(ldlt.info(), Eigen::Success);
  EXPECT_GT(ldlt.vectorD().minCoeff(), 0.0);
}

TEST(Assemble, MassExactOnPiecewiseLinear) {
  const auto f = interval(1.0, 0.5);
  // u = x on [0,1] and zero on the half-line except at B
  Vec u = Vec::Zero(f.ops.M.rows());
  u[f.dofs[1]] = 0.5;
  u[f.dofs[2]] = 1.0;
  const double half_line_part = f.mesh->edge(1).h / 3.0;
  EXPECT_NEAR(mass(f.ops, u), 1.0 / 3.0 + half_line_part, 1e-15);
  EXPECT_NEAR(u.dot(f.ops.A * u), 1.0 + 1.0 / f.mesh->edge(1).h, 1e-12);
}

TEST(IntegratePower, Examples) {
  const auto mesh = share(build_mesh(share(preset_interval_plus_line(2.0)), 0.1, 1.0));
  const EdgeMask core = kappa_mask(mesh->graph());
  GraphFunction one = GraphFunction::interpolate(mesh, [](std::size_t e, double) { return e == 0 ? 1.0 : 0.0; });
  EXPECT_NEAR(integrate_power(one, 8.0, core), 2.0, 1e-14);
  EXPECT_EQ(integrate_power(GraphFunction(mesh), 8.0, core), 0.0);

  const auto m1 = share(build_mesh(share(preset_interval_plus_line(1.0)), 0.5, 1.0));
  GraphFunction hat = GraphFunction::interpolate(m1, [](std::size_t e, double x) { return e == 0 && x == 0.5 ? 1.0 : 0.0; });
  EXPECT_NEAR(integrate_power(hat, 2.0, std::vector<std::string>{"e1"}), 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(integrate_power(hat, 4.0, std::vector<std::string>{"e1"}), 1.0 / 5.0, 1e-14);
  EXPECT_THROW(integrate_power(hat, 2.0, std::vector<std::string>{"nope"}), InputError);
  EXPECT_THROW(integrate_power(hat, 0.5, std::vector<std::string>{"e1"}), InputError);
}

TEST(IntegratePower, LoadAndWeightedMassConsistent) {
  const auto mesh = share(build_mesh(share(preset_tadpole(2.0, 1)), 0.05, 3.0));
  const auto ops = assemble_operators(*mesh);
  const auto region = kappa_mask(mesh->graph());
  GraphFunction u = GraphFunction::interpolate(mesh, [](std::size_t e, double x) { return std::cos(0.7 * x + e); });
  // int |u|^p = u . N(u) and W(u) u = N(u)
  const double p = 8.0;
  const Vec n = power_load(*mesh, u.values(), p, region);
  EXPECT_NEAR(u.values().dot(n), integrate_power(u, p, region), 1e-13);
  EXPECT_LT((weighted_mass(*mesh, u.values(), p, region) * u.values() - n).cwiseAbs().maxCoeff(), 1e-14);
  // p = 2 turns the weighted mass into the mass matrix restricted to the region
  const SpMat w2 = weighted_mass(*mesh, u.values(), 2.0, all_edges_mask(mesh->graph()));
  EXPECT_LT((dense(w2) - dense(ops.M)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ProjectToMassSphere, Examples) {
  const auto mesh = share(build_mesh(share(preset_tadpole(2.0, 1)), 0.1, 3.0));
  const auto ops = assemble_operators(*mesh);
  GraphFunction u = GraphFunction::interpolate(mesh, [](std::size_t, double x) { return std::exp(-x); });
  const double mu = 0.7;
  const GraphFunction four(mesh, u.values() * (2.0 * std::sqrt(mu / mass(ops, u.values()))));
  const auto half = project_to_mass_sphere(ops, four, mu);
  EXPECT_LT((half.values() - 0.5 * four.values()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_NEAR(mass(ops, half.values()), mu, 1e-15);
  const auto same = project_to_mass_sphere(ops, half, mu);
  EXPECT_LT((same.values() - half.values()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_THROW(project_to_mass_sphere(ops, GraphFunction(mesh), mu), InputError);
}

TEST(Discretization, RayleighQuotientSecondOrder) {
  // star(2) truncated at L = 1 is the Dirichlet interval [-1, 1]; sin(pi y)
  std::vector<double> err;
  for (double h : {0.04, 0.02, 0.01, 0.005}) {
    const auto mesh = share(build_mesh(share(preset_star(2)), h, 1.0));
    const auto ops = assemble_operators(*mesh);
    const auto u = GraphFunction::interpolate(mesh, [](std::size_t e, double x) {
      return std::sin(std::numbers::pi * (e == 0 ? x : -x));
    });
    const Vec& v = u.values();
    err.push_back(std::fabs(v.dot(ops.A * v) / mass(ops, v) - std::numbers::pi * std::numbers::pi));
  }
  for (std::size_t i = 1; i < err.size(); ++i) {
    const double order = std::log2(err[i - 1] / err[i]);
    EXPECT_GE(order, 1.8);
    EXPECT_LE(order, 2.2);
  }
}

TEST(Discretization, KirchhoffDefectIsNaturalResidual) {
  // vertex J of tadpole(2,1) has degree 3; u = 1 + s_e x + x^2 on every edge
  const std::array<double, 3> s = {0.3, -1.1, 2.0};
  std::vector<double> defect;
  for (double h : {0.02, 0.01, 0.005}) {
    auto mesh = share(build_mesh(share(preset_tadpole(2.0, 1)), h, 2.0, FarBoundary::Robin));
    const auto ops = assemble_operators(*mesh);
    // loop half #1 ends at J; parametrize from J there as well
    const auto u = GraphFunction::interpolate(mesh, [&](std::size_t e, double x) {
      const double y = e == 1 ? 1.0 - x : x;
      return 1.0 + s[e] * y + y * y;
    });
    const double weak = (ops.A * u.values())[mesh->vertex_dof(0)];
    defect.push_back(std::fabs(weak + (s[0] + s[1] + s[2])));
  }
  EXPECT_LT(defect.back(), 0.02);
  EXPECT_NEAR(defect[0] / defect[1], 2.0, 0.05);
  EXPECT_NEAR(defect[1] / defect[2], 2.0, 0.05);
}

TEST(GraphFunctionJson, RoundTripAndConsistency) {
  const auto mesh = share(build_mesh(share(preset_tadpole(2.0, 1)), 0.25, 2.0));
  const auto u = GraphFunction::interpolate(mesh, [](std::size_t e, double x) { return std::cos(x) + 0.1 * e; });
  const auto j = nlohmann::json::parse(to_json(u).dump(17));
  const auto back = graph_function_from_json(j, mesh);
  EXPECT_EQ(back.values(), u.values());

  auto bad = j;
  bad["edges"][2]["u"][0] = 5.0;  // vertex J value differs on the half-line
  EXPECT_THROW(graph_function_from_json(bad, mesh), InputError);
  auto other = share(build_mesh(share(preset_tadpole(2.0, 1)), 0.125, 2.0));
  EXPECT_THROW(graph_function_from_json(j, other), InputError);
}

TEST(GraphFunction, TransferAndEvaluate) {
  const auto g = share(preset_tadpole(2.0, 1));
  const auto coarse = share(build_mesh(g, 0.1, 3.0));
  const auto fine = share(build_mesh(g, 0.05, 6.0));
  const auto u = GraphFunction::interpolate(coarse, [](std::size_t, double x) { return 2.0 * x + 1.0; });
  const auto v = u.transfer(fine);
  EXPECT_NEAR(v.at(0, 0.55), 2.1, 1e-14);
  EXPECT_NEAR(v.at(2, 2.95), 0.5 * 6.8, 1e-12);  // last coarse element decays to the Dirichlet zero
  EXPECT_EQ(v.at(2, 4.0), 0.0);
}
