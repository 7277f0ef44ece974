#pragma once

// Newton's method for the constrained system
//   A u + lambda M u - rho N(u) = 0,   (u^T M u - mu) / 2 = 0
// with the bordered Jacobian [[H, Mu], [(Mu)^T, 0]] solved by block elimination.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "functionals.hpp"

namespace graph_nls {

struct NewtonOptions {
  double tol = 1e-10;
  int max_steps = 50;
  bool absolute_value = true;  // replace u by |u| before the first step
  double floor_limit = 1e-7;   // below this a stalled merit counts as converged
  double polish_below = 1e-6;  // re-solve nodes under this fraction of max|u|; 0 disables
};

struct NewtonResult {
  Vec u;
  double lambda = 0.0;
  int steps = 0;
  bool converged = false;
  bool at_roundoff_floor = false;  // stopped above tol once steps no longer reduce the merit
  std::vector<double> history;  // merit before each step and at exit
};

// max of the scaled equation residual and the relative mass defect
inline double newton_merit(const EnergyModel& m, const DualNorm& dual, const Vec& u, double lambda) {
  const Vec r = gradient(m, u) + lambda * (m.M() * u);
  const double eq = dual(r) / (std::sqrt(m.mu()) * std::max(1.0, std::fabs(lambda)));
  return std::max(eq, std::fabs(mass(m.ops(), u) - m.mu()) / m.mu());
}

// Re-solves the discrete equation on the nodes where |u| < tau max|u| with the
// remaining nodes held fixed. There the nonlinear term is negligible and the
// operator A + lambda M - rho W(u) is an M-matrix, so its LDL^T solve keeps
// every component to relative precision instead of the absolute precision a
// Newton update delivers. Two sweeps refresh W.
inline Vec polish_small_values(const EnergyModel& m, const Vec& u_in, double lambda, double tau) {
  Vec u = u_in;
  const double umax = u.cwiseAbs().maxCoeff();
  if (!(tau > 0.0) || !(umax > 0.0) || !(lambda > 0.0)) return u;
  std::vector<Eigen::Index> local(static_cast<std::size_t>(u.size()), -1);
  Eigen::Index nr = 0;
  for (Eigen::Index i = 0; i < u.size(); ++i)
    if (std::fabs(u[i]) < tau * umax) local[static_cast<std::size_t>(i)] = nr++;
  if (nr == 0) return u;
  for (int sweep = 0; sweep < 2; ++sweep) {
    SpMat K = m.stiffness() + lambda * m.M();
    K -= m.rho() * weighted_mass(m.mesh(), u, m.p(), m.kappa());
    Triplets t;
    Vec rhs = Vec::Zero(nr);
    for (Eigen::Index col = 0; col < K.outerSize(); ++col)
      for (SpMat::InnerIterator it(K, col); it; ++it) {
        const auto r = local[static_cast<std::size_t>(it.row())], c = local[static_cast<std::size_t>(it.col())];
        if (r < 0) continue;
        if (c >= 0)
          t.emplace_back(r, c, it.value());
        else
          rhs[r] -= it.value() * u[it.col()];
      }
    SpMat Krr(nr, nr);
    Krr.setFromTriplets(t.begin(), t.end());
    Eigen::SimplicialLDLT<SpMat> ldlt(Krr);
    if (ldlt.info() != Eigen::Success) return u_in;
    const Vec x = ldlt.solve(rhs);
    if (!x.allFinite()) return u_in;
    for (Eigen::Index i = 0; i < u.size(); ++i)
      if (local[static_cast<std::size_t>(i)] >= 0) u[i] = x[local[static_cast<std::size_t>(i)]];
  }
  return u;
}

inline NewtonResult newton_refine(const EnergyModel& m, const Vec& u0, double lambda0, const NewtonOptions& opt = {}) {
  if (u0.size() != static_cast<Eigen::Index>(m.mesh().num_dofs())) throw InputError("newton: size mismatch");
  const DualNorm dual(m.M());
  NewtonResult res;
  res.u = opt.absolute_value ? Vec(u0.cwiseAbs()) : u0;
  res.lambda = lambda0;
  if (!(mass(m.ops(), res.u) > 0.0)) throw SolverError("singular bordered Jacobian: zero function");

  Eigen::SparseLU<SpMat> lu;
  bool analyzed = false;
  double merit = newton_merit(m, dual, res.u, res.lambda);
  res.history.push_back(merit);
  int stalled = 0;
  while (merit > opt.tol) {
    if (stalled >= 2 && merit < opt.floor_limit) {
      res.at_roundoff_floor = true;
      break;
    }
    if (std::getenv("GRAPH_NLS_TRACE")) std::fprintf(stderr, "newton %d merit %.3e lambda %.15g\n", res.steps, merit, res.lambda);
    if (res.steps >= opt.max_steps)
      throw SolverError("newton did not converge in " + std::to_string(opt.max_steps) + " steps (merit " +
                        std::to_string(merit) + ")");
    const Vec& u = res.u;
    const Vec b = m.M() * u;
    const Vec r = gradient(m, u) + res.lambda * b;
    const double c = 0.5 * (u.dot(b) - m.mu());
    const double tau = std::max(1.0, std::fabs(res.lambda)) * std::min(1e-2, merit);
    SpMat H = hessian_operator(m, u, res.lambda + tau);
    H.makeCompressed();
    if (!analyzed) {
      lu.analyzePattern(H);
      analyzed = true;
    }
    lu.factorize(H);
    if (lu.info() != Eigen::Success) throw SolverError("singular bordered Jacobian: factorization failed");
    const Vec x1 = lu.solve(r);
    const Vec x2 = lu.solve(b);
    const double s = b.dot(x2);
    if (!(std::fabs(s) > 1e-300) || !std::isfinite(s)) throw SolverError("singular bordered Jacobian");
    const double dlam = (c - b.dot(x1)) / s;
    const Vec du = -x1 - dlam * x2;
    if (!du.allFinite() || !std::isfinite(dlam)) throw SolverError("singular bordered Jacobian: non-finite step");

    double t = 1.0, trial = kInfinity;
    Vec un;
    double ln = res.lambda;
    for (int k = 0; k < 30; ++k, t *= 0.5) {
      un = u + t * du;
      ln = res.lambda + t * dlam;
      trial = newton_merit(m, dual, un, ln);
      if (trial < merit) break;
    }
    if (!(trial < merit)) {
      // no decrease along the Newton direction; keep the full step once
      un = u + du;
      ln = res.lambda + dlam;
      trial = newton_merit(m, dual, un, ln);
    }
    stalled = trial > 0.5 * merit ? stalled + 1 : 0;
    res.u = std::move(un);
    res.lambda = ln;
    merit = trial;
    ++res.steps;
    res.history.push_back(merit);
    if (!std::isfinite(merit) || merit > 1e3 * std::max(res.history.front(), 1.0))
      throw SolverError("newton diverged (merit " + std::to_string(merit) + ")");
  }
  res.u = project_to_mass_sphere(m.ops(), polish_small_values(m, res.u, res.lambda, opt.polish_below), m.mu());
  res.converged = true;
  res.history.back() = newton_merit(m, dual, res.u, res.lambda);
  return res;
}

}  // namespace graph_nls
