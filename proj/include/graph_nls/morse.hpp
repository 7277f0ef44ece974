#pragma once

// Morse counts of H(u, lambda) = A + lambda M - (p-1) rho W(u) relative to a
// norm pairing B. Counts come from the inertia of the LDL^T factorization of
// H + theta B (Sylvester); the constrained count follows from the sign of the
// Schur complement of the bordered matrix [[H + theta B, Mu], [(Mu)^T, 0]].
// A shift-invert subspace iteration on the same factorization reports the
// eigenvalues closest to the threshold.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "functionals.hpp"

namespace graph_nls {

enum class Pairing { L2, H1 };

inline Pairing parse_pairing(std::string_view s) {
  if (s == "L2" || s == "l2") return Pairing::L2;
  if (s == "H1" || s == "h1") return Pairing::H1;
  throw InputError("pairing must be \"L2\" or \"H1\"");
}

inline const char* to_string(Pairing p) { return p == Pairing::L2 ? "L2" : "H1"; }

struct MorseOptions {
  double theta_rel = 1e-8;  // threshold relative to the largest pencil eigenvalue
  Pairing pairing = Pairing::L2;
  int audit_eigs = 4;
  double audit_tol = 1e-8;
  int audit_max_iter = 200;
  std::uint64_t seed = 12345;  // start block of the audit
};

struct MorseResult {
  int free = 0;
  int constrained = 0;
  double theta = 0.0;
  double spectrum_bound = 0.0;  // upper bound of the pencil spectrum
  std::string pairing;
  double schur = 0.0;           // (Mu)^T (H + theta B)^{-1} Mu
  std::vector<double> nearest;  // audited eigenvalues closest to -theta
  double audit_residual = 0.0;
  bool audit_converged = false;
};

inline SpMat pairing_matrix(const EnergyModel& m, Pairing p) {
  return p == Pairing::L2 ? m.M() : SpMat(m.ops().A + m.M());
}

// Upper bound of the largest eigenvalue of (H, B).
inline double pencil_upper_bound(const EnergyModel& m, double lambda, Pairing p) {
  if (p == Pairing::H1) return std::max(1.0, std::fabs(lambda)) + std::fabs(m.robin());
  // element pencils (A_e, M_e) peak at 12 / h^2
  const double h = m.mesh().min_h();
  return 12.0 / (h * h) + std::fabs(lambda) + 3.0 * m.robin() / h;
}

inline MorseResult morse_index(const EnergyModel& m, const Vec& u, double lambda, const MorseOptions& opt = {}) {
  if (!(opt.theta_rel >= 0.0)) throw InputError("morse threshold must be >= 0");
  MorseResult res;
  res.pairing = to_string(opt.pairing);
  res.spectrum_bound = pencil_upper_bound(m, lambda, opt.pairing);
  res.theta = opt.theta_rel * res.spectrum_bound;
  const SpMat B = pairing_matrix(m, opt.pairing);
  SpMat K = hessian_operator(m, u, lambda) + res.theta * B;

  Eigen::SimplicialLDLT<SpMat> ldlt(K);
  if (ldlt.info() != Eigen::Success) throw SolverError("morse_index: LDL^T factorization failed");
  const Vec d = ldlt.vectorD();
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (d[i] == 0.0) throw SolverError("morse_index: threshold hits an eigenvalue exactly");
    if (d[i] < 0.0) ++res.free;
  }
  const Vec b = m.M() * u;
  res.constrained = res.free;
  if (b.squaredNorm() > 0.0) {
    res.schur = b.dot(ldlt.solve(b));
    if (res.schur < 0.0) --res.constrained;
  }

  // audit: subspace iteration with (H + theta B)^{-1} B
  const int k = std::min<int>(opt.audit_eigs, static_cast<int>(u.size()));
  const int kb = std::min<int>(k + 4, static_cast<int>(u.size()));  // guard vectors speed up the wanted ones
  if (k > 0) {
    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> N01;
    Eigen::MatrixXd X(u.size(), kb);
    for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = N01(rng);
    Eigen::VectorXd mu_k;
    for (int it = 0; it < opt.audit_max_iter; ++it) {
      Eigen::MatrixXd Y(u.size(), kb);
      for (int j = 0; j < kb; ++j) Y.col(j) = ldlt.solve(B * X.col(j));
      // Rayleigh-Ritz for the pencil (K, B) on span(Y)
      const Eigen::MatrixXd KY = K * Y, BY = B * Y;
      const Eigen::MatrixXd kk = Y.transpose() * KY, bb = Y.transpose() * BY;
      Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(0.5 * (kk + kk.transpose()),
                                                                    0.5 * (bb + bb.transpose()));
      if (ges.info() != Eigen::Success) break;
      X = Y * ges.eigenvectors();
      mu_k = ges.eigenvalues();
      // largest Ritz values of the inverse are the eigenvalues nearest -theta
      Eigen::MatrixXd Xs = X;
      Eigen::VectorXd ms = mu_k;
      std::vector<int> order(static_cast<std::size_t>(kb));
      for (int j = 0; j < kb; ++j) order[static_cast<std::size_t>(j)] = j;
      std::sort(order.begin(), order.end(), [&](int a, int b) { return std::fabs(mu_k[a]) < std::fabs(mu_k[b]); });
      for (int j = 0; j < kb; ++j) {
        Xs.col(j) = X.col(order[static_cast<std::size_t>(j)]);
        ms[j] = mu_k[order[static_cast<std::size_t>(j)]];
      }
      X = Xs;
      mu_k = ms;
      for (int j = 0; j < kb; ++j) X.col(j) /= std::sqrt(X.col(j).dot(B * X.col(j)));
      double worst = 0.0;
      for (int j = 0; j < k; ++j) {
        const Vec r = K * X.col(j) - mu_k[j] * (B * X.col(j));
        const double scale = std::sqrt(X.col(j).dot(B * X.col(j))) * std::max(1.0, std::fabs(mu_k[j]));
        worst = std::max(worst, std::sqrt(std::max(0.0, r.dot(ldlt.solve(r)))) / scale);
      }
      res.audit_residual = worst;
      if (worst <= opt.audit_tol) {
        res.audit_converged = true;
        break;
      }
    }
    // eigenvalues of (H, B) are those of (K, B) minus theta
    res.nearest.clear();
    for (Eigen::Index j = 0; j < std::min<Eigen::Index>(k, mu_k.size()); ++j) res.nearest.push_back(mu_k[j] - res.theta);
    std::sort(res.nearest.begin(), res.nearest.end(),
              [&](double a, double b) { return std::fabs(a + res.theta) < std::fabs(b + res.theta); });
  }
  return res;
}

inline MorseResult morse_index(const EnergyModel& m, const GraphFunction& u, double lambda, const MorseOptions& opt = {}) {
  m.check(u);
  return morse_index(m, u.values(), lambda, opt);
}

}  // namespace graph_nls
