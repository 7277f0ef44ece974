#pragma once

// Three disjoint dilated bumps psi_j(x) = sigma^{1/2} phi(sigma x - j),
// j = 0, 1, 2, on the first half-line, and the check
//   int |w'|^2 + lambda int w^2 <= (lambda / 2) (int |w'|^2 + int w^2)
// for every w in their span, via the 3x3 generalized eigenproblem.

#include <array>
#include <cmath>

#include <Eigen/Dense>

#include "functionals.hpp"

namespace graph_nls {

// phi(x) = c (x - 3/4)^2 (5/4 - x)^2 on [3/4, 5/4] with int phi^2 = 1.
inline double neg_bump(double x) {
  if (x <= 0.75 || x >= 1.25) return 0.0;
  const double t = (x - 0.75) * (1.25 - x);
  return std::sqrt(322560.0) * t * t;
}

inline double neg_bump_derivative(double x) {
  if (x <= 0.75 || x >= 1.25) return 0.0;
  const double t = (x - 0.75) * (1.25 - x);
  return std::sqrt(322560.0) * 2.0 * t * (2.0 - 2.0 * x);
}

// Far edge of the support of psi_2.
inline double neg_directions_extent(double sigma) { return 3.25 / sigma; }

struct NegDirections {
  bool passed = false;
  double lambda = 0.0;
  double sigma = 0.0;
  Eigen::Matrix3d K = Eigen::Matrix3d::Zero();  // int psi_i' psi_j'
  Eigen::Matrix3d M = Eigen::Matrix3d::Zero();  // int psi_i psi_j
  double max_ratio = 0.0;                       // largest eigenvalue of (K + lambda M, K + M)
  double required_L = 0.0;
};

namespace detail {

inline void neg_directions_eval(NegDirections& r) {
  Eigen::Matrix3d F = r.K + r.lambda * r.M, G = r.K + r.M;
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::Matrix3d> ges(0.5 * (F + F.transpose()), 0.5 * (G + G.transpose()));
  if (ges.info() != Eigen::Success) throw SolverError("neg_directions: 3x3 eigenproblem failed");
  r.max_ratio = ges.eigenvalues().maxCoeff();
  r.passed = r.max_ratio <= 0.5 * r.lambda;
}

inline void neg_directions_pre(const MetricGraph& g, double lambda, double sigma) {
  if (!(lambda < 0.0)) throw InputError("neg_directions needs lambda < 0");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InputError("neg_directions needs sigma > 0");
  if (g.halflines().empty()) throw InputError("neg_directions needs a half-line");
}

}  // namespace detail

// Gram matrices by 5-point Gauss quadrature, exact for the degree-8 integrands.
inline NegDirections neg_directions_check(const MetricGraph& g, double lambda, double sigma, double L) {
  detail::neg_directions_pre(g, lambda, sigma);
  NegDirections r;
  r.lambda = lambda;
  r.sigma = sigma;
  r.required_L = neg_directions_extent(sigma);
  if (L < r.required_L)
    throw TruncationError("neg_directions: truncation too short (needs L >= " + std::to_string(r.required_L) + ")",
                          r.required_L);
  static constexpr std::array<double, 5> gx = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                                               0.9061798459386640};
  static constexpr std::array<double, 5> gw = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                               0.4786286704993665, 0.2369268850561891};
  auto psi = [&](int j, double x) { return std::sqrt(sigma) * neg_bump(sigma * x - j); };
  auto dpsi = [&](int j, double x) { return std::sqrt(sigma) * sigma * neg_bump_derivative(sigma * x - j); };
  for (int s = 0; s < 3; ++s) {
    // the smooth pieces of every psi_j on [(s + 3/4)/sigma, (s + 5/4)/sigma]
    const double a = (s + 0.75) / sigma, b = (s + 1.25) / sigma;
    const double c = 0.5 * (a + b), hw = 0.5 * (b - a);
    for (int q = 0; q < 5; ++q) {
      const double x = c + hw * gx[q], w = hw * gw[q];
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          r.K(i, j) += w * dpsi(i, x) * dpsi(j, x);
          r.M(i, j) += w * psi(i, x) * psi(j, x);
        }
    }
  }
  detail::neg_directions_eval(r);
  return r;
}

// Same check with the bumps interpolated on a P1 mesh of the graph.
inline NegDirections neg_directions_check_mesh(const std::shared_ptr<const Mesh>& mesh, double lambda, double sigma) {
  const auto& g = mesh->graph();
  detail::neg_directions_pre(g, lambda, sigma);
  NegDirections r;
  r.lambda = lambda;
  r.sigma = sigma;
  r.required_L = neg_directions_extent(sigma);
  if (mesh->truncation() < r.required_L)
    throw TruncationError("neg_directions: truncation too short (needs L >= " + std::to_string(r.required_L) + ")",
                          r.required_L);
  const std::size_t hl = g.halflines().front();
  const auto ops = assemble_operators(*mesh);
  std::array<Vec, 3> v;
  for (int j = 0; j < 3; ++j)
    v[static_cast<std::size_t>(j)] =
        GraphFunction::interpolate(mesh, [&](std::size_t e, double x) {
          return e == hl ? std::sqrt(sigma) * neg_bump(sigma * x - j) : 0.0;
        }).values();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      r.K(i, j) = v[static_cast<std::size_t>(i)].dot(ops.A * v[static_cast<std::size_t>(j)]);
      r.M(i, j) = v[static_cast<std::size_t>(i)].dot(ops.M * v[static_cast<std::size_t>(j)]);
    }
  detail::neg_directions_eval(r);
  return r;
}

// Halves sigma from 1 until the check passes, then requires L to host the bumps.
inline NegDirections neg_directions_auto(const MetricGraph& g, double lambda, double L = kInfinity) {
  detail::neg_directions_pre(g, lambda, 1.0);
  for (double sigma = 1.0; sigma > 1e-12; sigma *= 0.5) {
    NegDirections r = neg_directions_check(g, lambda, sigma, kInfinity);
    if (!r.passed) continue;
    if (L < r.required_L)
      throw TruncationError("neg_directions: truncation too short (needs L >= " + std::to_string(r.required_L) + ")",
                            r.required_L);
    return r;
  }
  throw SolverError("neg_directions: no admissible sigma found");
}

}  // namespace graph_nls
