#pragma once

// P1 stiffness and mass assembly on a graph mesh, and 4-point Gauss quadrature
// of |u|^q over a subset of edges.

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "graph_function.hpp"

namespace graph_nls {

using SpMat = Eigen::SparseMatrix<double>;
using Triplets = std::vector<Eigen::Triplet<double>>;

// Per internal edge membership flag.
using EdgeMask = std::vector<bool>;

inline EdgeMask kappa_mask(const MetricGraph& g) {
  EdgeMask m(g.edges().size(), false);
  for (auto e : g.kappa_edges()) m[e] = true;
  return m;
}

inline EdgeMask all_edges_mask(const MetricGraph& g) { return EdgeMask(g.edges().size(), true); }

// Spec ids or internal ids; unknown ids throw.
inline EdgeMask make_region(const MetricGraph& g, const std::vector<std::string>& ids) {
  EdgeMask m(g.edges().size(), false);
  for (const auto& id : ids)
    for (auto e : g.edges_of(id)) m[e] = true;
  return m;
}

namespace detail {

// Gauss-Legendre, 4 points, mapped to [0,1].
inline constexpr std::array<double, 4> kGaussX = {
    0.5 * (1.0 - 0.8611363115940526), 0.5 * (1.0 - 0.3399810435848563),
    0.5 * (1.0 + 0.3399810435848563), 0.5 * (1.0 + 0.8611363115940526)};
inline constexpr std::array<double, 4> kGaussW = {0.5 * 0.3478548451374538, 0.5 * 0.6521451548625461,
                                                  0.5 * 0.6521451548625461, 0.5 * 0.3478548451374538};

inline double int_pow(double a, unsigned n) {
  double r = 1.0;
  while (n) {
    if (n & 1U) r *= a;
    a *= a;
    n >>= 1U;
  }
  return r;
}

// |a|^q with an exact-multiplication path for integer exponents.
inline double abs_pow(double a, double q) {
  a = std::fabs(a);
  if (q == std::floor(q) && q >= 0.0 && q <= 64.0) return int_pow(a, static_cast<unsigned>(q));
  return a == 0.0 ? 0.0 : std::pow(a, q);
}

inline double dof_value(const Vec& u, std::ptrdiff_t d) { return d < 0 ? 0.0 : u[d]; }

// f(d0, d1, h, u0, u1) over every element of the masked edges.
template <class F>
void for_each_element(const Mesh& mesh, const Vec& u, const EdgeMask& mask, F&& f) {
  for (std::size_t e = 0; e < mesh.edges().size(); ++e) {
    if (!mask[e]) continue;
    const auto& me = mesh.edge(e);
    for (std::size_t k = 0; k < me.n_elems; ++k) {
      const auto d0 = me.dof[k], d1 = me.dof[k + 1];
      f(d0, d1, me.h, dof_value(u, d0), dof_value(u, d1));
    }
  }
}

inline void check_mask(const Mesh& mesh, const EdgeMask& mask) {
  if (mask.size() != mesh.edges().size()) throw InputError("edge region does not match the mesh");
}

}  // namespace detail

struct DiscreteOperators {
  SpMat A;                                // weak -d^2/dx^2, natural Kirchhoff
  SpMat M;                                // consistent P1 mass
  SpMat R;                                // indicator of Robin far nodes
  Vec lumped;                             // row sums of M
};

inline DiscreteOperators assemble_operators(const Mesh& mesh) {
  const auto n = static_cast<Eigen::Index>(mesh.num_dofs());
  Triplets ta, tm, tr;
  for (const auto& me : mesh.edges()) {
    const double h = me.h;
    for (std::size_t k = 0; k < me.n_elems; ++k) {
      const std::array<std::ptrdiff_t, 2> d = {me.dof[k], me.dof[k + 1]};
      for (int i = 0; i < 2; ++i) {
        if (d[i] < 0) continue;
        for (int j = 0; j < 2; ++j) {
          if (d[j] < 0) continue;
          ta.emplace_back(d[i], d[j], (i == j ? 1.0 : -1.0) / h);
          tm.emplace_back(d[i], d[j], (i == j ? 2.0 : 1.0) * h / 6.0);
        }
      }
    }
  }
  for (auto d : mesh.far_dofs()) tr.emplace_back(d, d, 1.0);
  DiscreteOperators ops;
  ops.A.resize(n, n);
  ops.M.resize(n, n);
  ops.R.resize(n, n);
  ops.A.setFromTriplets(ta.begin(), ta.end());
  ops.M.setFromTriplets(tm.begin(), tm.end());
  ops.R.setFromTriplets(tr.begin(), tr.end());
  ops.lumped = ops.M * Vec::Ones(n);
  return ops;
}

inline double integrate_power(const Mesh& mesh, const Vec& u, double q, const EdgeMask& region) {
  if (!(q >= 1.0)) throw InputError("integrate_power: exponent must be >= 1");
  detail::check_mask(mesh, region);
  double s = 0.0;
  detail::for_each_element(mesh, u, region, [&](auto, auto, double h, double u0, double u1) {
    double el = 0.0;
    for (int g = 0; g < 4; ++g) {
      const double x = detail::kGaussX[g];
      el += detail::kGaussW[g] * detail::abs_pow(u0 + (u1 - u0) * x, q);
    }
    s += h * el;
  });
  return s;
}

inline double integrate_power(const GraphFunction& u, double q, const EdgeMask& region) {
  return integrate_power(u.mesh(), u.values(), q, region);
}

inline double integrate_power(const GraphFunction& u, double q, const std::vector<std::string>& region) {
  return integrate_power(u, q, make_region(u.mesh().graph(), region));
}

// N_i = int_region |u|^{p-2} u phi_i, the derivative of (1/p) int |u|^p.
inline Vec power_load(const Mesh& mesh, const Vec& u, double p, const EdgeMask& region) {
  detail::check_mask(mesh, region);
  Vec out = Vec::Zero(u.size());
  detail::for_each_element(mesh, u, region, [&](auto d0, auto d1, double h, double u0, double u1) {
    double f0 = 0.0, f1 = 0.0;
    for (int g = 0; g < 4; ++g) {
      const double x = detail::kGaussX[g];
      const double v = u0 + (u1 - u0) * x;
      const double f = detail::kGaussW[g] * detail::abs_pow(v, p - 2.0) * v;
      f0 += f * (1.0 - x);
      f1 += f * x;
    }
    if (d0 >= 0) out[d0] += h * f0;
    if (d1 >= 0) out[d1] += h * f1;
  });
  return out;
}

// W_ij = int_region |u|^{p-2} phi_i phi_j.
inline SpMat weighted_mass(const Mesh& mesh, const Vec& u, double p, const EdgeMask& region) {
  detail::check_mask(mesh, region);
  Triplets t;
  detail::for_each_element(mesh, u, region, [&](auto d0, auto d1, double h, double u0, double u1) {
    double m00 = 0.0, m01 = 0.0, m11 = 0.0;
    for (int g = 0; g < 4; ++g) {
      const double x = detail::kGaussX[g];
      const double w = detail::kGaussW[g] * detail::abs_pow(u0 + (u1 - u0) * x, p - 2.0);
      m00 += w * (1.0 - x) * (1.0 - x);
      m01 += w * (1.0 - x) * x;
      m11 += w * x * x;
    }
    if (d0 >= 0) t.emplace_back(d0, d0, h * m00);
    if (d1 >= 0) t.emplace_back(d1, d1, h * m11);
    if (d0 >= 0 && d1 >= 0) {
      t.emplace_back(d0, d1, h * m01);
      t.emplace_back(d1, d0, h * m01);
    }
  });
  SpMat W(u.size(), u.size());
  W.setFromTriplets(t.begin(), t.end());
  return W;
}

inline double mass(const DiscreteOperators& ops, const Vec& u) { return u.dot(ops.M * u); }

inline Vec project_to_mass_sphere(const DiscreteOperators& ops, const Vec& u, double mu) {
  if (!(mu > 0.0)) throw InputError("mass must be positive");
  const double m = mass(ops, u);
  if (!(m > 0.0)) throw InputError("cannot project the zero function onto the mass sphere");
  return std::sqrt(mu / m) * u;
}

inline GraphFunction project_to_mass_sphere(const DiscreteOperators& ops, const GraphFunction& u, double mu) {
  return GraphFunction(u.mesh_ptr(), project_to_mass_sphere(ops, u.values(), mu));
}

}  // namespace graph_nls
