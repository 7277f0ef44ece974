#pragma once

// E_rho(u) = 1/2 int |u'|^2 - (rho/p) int_kappa |u|^p on the discrete space,
// with first and second derivatives taken from the same quadrature.

#include <cmath>
#include <memory>
#include <string>

#include "operators.hpp"

namespace graph_nls {

class EnergyModel {
public:
  EnergyModel(std::shared_ptr<const Mesh> mesh, double p, double rho, double mu, double robin = 0.0)
      : EnergyModel(mesh, std::make_shared<const DiscreteOperators>(assemble_operators(*mesh)), p, rho, mu,
                    kappa_mask(mesh->graph()), robin) {}

  EnergyModel(std::shared_ptr<const Mesh> mesh, std::shared_ptr<const DiscreteOperators> ops, double p, double rho,
              double mu, EdgeMask kappa, double robin = 0.0)
      : mesh_(std::move(mesh)), ops_(std::move(ops)), p_(p), rho_(rho), mu_(mu), kappa_(std::move(kappa)),
        robin_(robin) {
    if (!(p_ > 2.0) || !std::isfinite(p_)) throw InputError("exponent p must be > 2");
    if (!(rho_ >= 0.5 && rho_ <= 1.0)) throw InputError("rho must lie in [1/2, 1]");
    if (!(mu_ > 0.0) || !std::isfinite(mu_)) throw InputError("mass mu must be positive");
    if (!(robin_ >= 0.0) || !std::isfinite(robin_)) throw InputError("Robin coefficient must be >= 0");
    if (kappa_.size() != mesh_->edges().size()) throw InputError("kappa region does not match the mesh");
    stiffness_ = robin_ > 0.0 ? SpMat(ops_->A + robin_ * ops_->R) : ops_->A;
  }

  EnergyModel with_rho(double rho) const { return {mesh_, ops_, p_, rho, mu_, kappa_, robin_}; }
  EnergyModel with_mu(double mu) const { return {mesh_, ops_, p_, rho_, mu, kappa_, robin_}; }
  EnergyModel with_robin(double robin) const { return {mesh_, ops_, p_, rho_, mu_, kappa_, robin}; }

  const Mesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const Mesh>& mesh_ptr() const { return mesh_; }
  const DiscreteOperators& ops() const { return *ops_; }
  const std::shared_ptr<const DiscreteOperators>& ops_ptr() const { return ops_; }
  // A plus the Robin far-end term
  const SpMat& stiffness() const { return stiffness_; }
  const SpMat& M() const { return ops_->M; }
  double p() const { return p_; }
  double rho() const { return rho_; }
  double mu() const { return mu_; }
  double robin() const { return robin_; }
  const EdgeMask& kappa() const { return kappa_; }

  void check(const GraphFunction& u) const {
    if (u.mesh_ptr() != mesh_ && u.mesh().hash() != mesh_->hash())
      throw InputError("function lives on a different mesh than the model");
  }

private:
  std::shared_ptr<const Mesh> mesh_;
  std::shared_ptr<const DiscreteOperators> ops_;
  double p_, rho_, mu_;
  EdgeMask kappa_;
  double robin_;
  SpMat stiffness_;
};

inline double dirichlet_form(const EnergyModel& m, const Vec& u) { return u.dot(m.stiffness() * u); }

inline double kappa_power(const EnergyModel& m, const Vec& u) { return integrate_power(m.mesh(), u, m.p(), m.kappa()); }

inline double energy(const EnergyModel& m, const Vec& u) {
  return 0.5 * dirichlet_form(m, u) - m.rho() / m.p() * kappa_power(m, u);
}

inline Vec gradient(const EnergyModel& m, const Vec& u) {
  return m.stiffness() * u - m.rho() * power_load(m.mesh(), u, m.p(), m.kappa());
}

inline double lagrange_estimate(const EnergyModel& m, const Vec& u) {
  const double ms = mass(m.ops(), u);
  if (!(ms > 0.0)) throw InputError("lagrange_estimate: zero function");
  return (m.rho() * kappa_power(m, u) - dirichlet_form(m, u)) / ms;
}

// g + lambda_hat M u; its pairing with u vanishes.
inline Vec projected_gradient(const EnergyModel& m, const Vec& u) {
  const Vec mu = m.M() * u;
  const double ms = u.dot(mu);
  if (!(ms > 0.0)) throw InputError("projected_gradient: zero function");
  const Vec g = gradient(m, u);
  return g - (g.dot(u) / ms) * mu;
}

// H(u, lambda) = A + lambda M - (p-1) rho W(u)
inline SpMat hessian_operator(const EnergyModel& m, const Vec& u, double lambda) {
  SpMat h = m.stiffness() + lambda * m.M();
  h -= ((m.p() - 1.0) * m.rho()) * weighted_mass(m.mesh(), u, m.p(), m.kappa());
  return h;
}

inline double hessian_form(const EnergyModel& m, const Vec& u, double lambda, const Vec& phi, const Vec& psi) {
  return phi.dot(hessian_operator(m, u, lambda) * psi);
}

inline double energy(const EnergyModel& m, const GraphFunction& u) {
  m.check(u);
  return energy(m, u.values());
}

inline Vec gradient(const EnergyModel& m, const GraphFunction& u) {
  m.check(u);
  return gradient(m, u.values());
}

inline double lagrange_estimate(const EnergyModel& m, const GraphFunction& u) {
  m.check(u);
  return lagrange_estimate(m, u.values());
}

inline Vec projected_gradient(const EnergyModel& m, const GraphFunction& u) {
  m.check(u);
  return projected_gradient(m, u.values());
}

inline double hessian_form(const EnergyModel& m, const GraphFunction& u, double lambda, const GraphFunction& phi,
                           const GraphFunction& psi) {
  m.check(u);
  m.check(phi);
  m.check(psi);
  return hessian_form(m, u.values(), lambda, phi.values(), psi.values());
}

// Norm of a dual vector in the M^{-1} pairing, sqrt(r^T M^{-1} r).
class DualNorm {
public:
  explicit DualNorm(const SpMat& M) : solver_(M) {
    if (solver_.info() != Eigen::Success) throw SolverError("mass matrix factorization failed");
  }
  double operator()(const Vec& r) const { return std::sqrt(std::max(0.0, r.dot(solver_.solve(r)))); }
  Vec riesz(const Vec& r) const { return solver_.solve(r); }

private:
  Eigen::SimplicialLDLT<SpMat> solver_;
};

}  // namespace graph_nls
