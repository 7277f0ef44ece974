#pragma once

// Constrained mountain-pass search. The path is a chain of nodes on the mass
// sphere joined by normalized linear arcs; nodes around the highest point are
// pushed down by a Sobolev-preconditioned projected gradient, and a step is
// kept only if the maximum over the continuous path does not increase.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <vector>

#include <Eigen/SparseCholesky>

#include "functionals.hpp"

namespace graph_nls {

struct Path {
  std::vector<Vec> nodes;
  double mu = 0.0;
};

inline Path init_path(const DiscreteOperators& ops, const Vec& w1, const Vec& w2, std::size_t n, double mu) {
  if (n < 2) throw InputError("a path needs at least two nodes");
  Path path;
  path.mu = mu;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(n - 1);
    const Vec v = (1.0 - t) * w1 + t * w2;
    const double ms = mass(ops, v);
    if (!(ms > 1e-14 * mu)) throw InputError("path interpolant has zero mass (w2 = -w1?)");
    path.nodes.push_back(i == 0 ? w1 : i + 1 == n ? w2 : Vec(std::sqrt(mu / ms) * v));
  }
  return path;
}

inline Path init_path(const DiscreteOperators& ops, const GraphFunction& w1, const GraphFunction& w2, std::size_t n,
                      double mu) {
  return init_path(ops, w1.values(), w2.values(), n, mu);
}

struct MountainPassOptions {
  int max_iter = 5000;
  double step0 = 0.5;
  double tol_mp = 1e-3;
  std::size_t max_nodes = 64;
};

struct MountainPassResult {
  Vec u;
  double energy = 0.0;
  double lambda_hat = 0.0;
  double pg_norm = 0.0;  // scaled dual norm of the projected gradient
  int iterations = 0;
  bool converged = false;
  std::size_t max_index = 0;
  std::vector<double> history;  // path maximum after every accepted step
  Path path;
};

namespace detail {

// Arc between two sphere points a, b: v(s) = (1-s) a + s b rescaled to mass mu.
class ArcEvaluator {
public:
  ArcEvaluator(const EnergyModel& m, const Vec& a, const Vec& b) : m_(m), a_(a), b_(b) {
    const Vec Ab = m.stiffness() * b, Mb = m.M() * b;
    qaa_ = a.dot(m.stiffness() * a);
    qab_ = a.dot(Ab);
    qbb_ = b.dot(Ab);
    maa_ = a.dot(m.M() * a);
    mab_ = a.dot(Mb);
    mbb_ = b.dot(Mb);
  }

  double operator()(double s) const {
    const double t = 1.0 - s;
    const double ms = t * t * maa_ + 2.0 * s * t * mab_ + s * s * mbb_;
    const double q = t * t * qaa_ + 2.0 * s * t * qab_ + s * s * qbb_;
    if (!(ms > 0.0)) return std::numeric_limits<double>::infinity();
    const double c2 = m_.mu() / ms;
    const Vec v = t * a_ + s * b_;
    return 0.5 * c2 * q - m_.rho() / m_.p() * std::pow(c2, 0.5 * m_.p()) * kappa_power(m_, v);
  }

  Vec point(double s) const {
    const Vec v = (1.0 - s) * a_ + s * b_;
    return std::sqrt(m_.mu() / mass(m_.ops(), v)) * v;
  }

private:
  const EnergyModel& m_;
  const Vec& a_;
  const Vec& b_;
  double qaa_, qab_, qbb_, maa_, mab_, mbb_;
};

struct ArcMax {
  double s = 0.0;
  double e = -std::numeric_limits<double>::infinity();
  bool interior = false;
};

// A path node with its energy and energy gradient.
struct Node {
  Vec u;
  double e = 0.0;
  Vec g;
};

inline Node make_node(const EnergyModel& m, Vec u) {
  Node n;
  n.e = energy(m, u);
  n.g = gradient(m, u);
  n.u = std::move(u);
  return n;
}

// Rate of change of E leaving a towards b along the arc.
inline double arc_slope(const EnergyModel& m, const Node& a, const Node& b) {
  const Vec d = b.u - a.u;
  const double c = a.u.dot(m.M() * d) / m.mu();
  return a.g.dot(d) - c * a.g.dot(a.u);
}

inline ArcMax arc_maximum(const EnergyModel& m, const Node& a, const Node& b) {
  ArcEvaluator f(m, a.u, b.u);
  const std::array<double, 5> s = {0.0, 0.25, 0.5, 0.75, 1.0};
  const std::array<double, 5> e = {a.e, f(0.25), f(0.5), f(0.75), b.e};
  const auto k = static_cast<std::size_t>(std::max_element(e.begin(), e.end()) - e.begin());
  ArcMax best{s[k], e[k], k != 0 && k != 4};
  double lo, hi;
  if (k == 0) {
    if (arc_slope(m, a, b) <= 0.0) return best;
    lo = 0.0;
    hi = 0.25;
  } else if (k == 4) {
    if (arc_slope(m, b, a) <= 0.0) return best;
    lo = 0.75;
    hi = 1.0;
  } else {
    lo = s[k - 1];
    hi = s[k + 1];
  }
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 40 && hi - lo > 1e-9; ++it) {
    if (f1 >= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - gr * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + gr * (hi - lo);
      f2 = f(x2);
    }
  }
  for (auto [x, y] : {std::pair{x1, f1}, std::pair{x2, f2}})
    if (y > best.e) best = {x, y, true};
  return best;
}

struct PathState {
  std::vector<Node> nodes;
  std::vector<ArcMax> arc;  // arc[i] joins node i and i+1

  double path_max() const {
    double mx = -std::numeric_limits<double>::infinity();
    for (const auto& n : nodes) mx = std::max(mx, n.e);
    for (const auto& a : arc) mx = std::max(mx, a.e);
    return mx;
  }

  // lowest index among the highest nodes
  std::size_t argmax_node() const {
    std::size_t k = 0;
    for (std::size_t i = 1; i < nodes.size(); ++i)
      if (nodes[i].e > nodes[k].e) k = i;
    return k;
  }
};

}  // namespace detail

inline MountainPassResult mountain_pass_deform(const EnergyModel& m, const Path& path, const MountainPassOptions& opt = {}) {
  if (path.nodes.size() < 3) throw InputError("mountain-pass path needs an interior node");
  const double mu = m.mu();
  const DualNorm dual(m.M());
  const bool trace = std::getenv("GRAPH_NLS_TRACE") != nullptr;

  detail::PathState st;
  for (const auto& u : path.nodes) st.nodes.push_back(detail::make_node(m, u));
  for (std::size_t i = 0; i + 1 < st.nodes.size(); ++i)
    st.arc.push_back(detail::arc_maximum(m, st.nodes[i], st.nodes[i + 1]));

  auto ins = [](auto& v, std::size_t at, auto x) { v.insert(v.begin() + static_cast<std::ptrdiff_t>(at), std::move(x)); };
  auto del = [](auto& v, std::size_t at) { v.erase(v.begin() + static_cast<std::ptrdiff_t>(at)); };

  // the maximum sits inside an arc: make it a node (the continuous path is unchanged)
  auto insert_arc_max = [&] {
    const double pm = st.path_max();
    for (std::size_t i = 0; i < st.arc.size(); ++i) {
      const auto a = st.arc[i];
      if (!a.interior || a.e < pm) continue;
      const detail::ArcEvaluator f(m, st.nodes[i].u, st.nodes[i + 1].u);
      ins(st.nodes, i + 1, detail::make_node(m, f.point(a.s)));
      st.arc[i] = detail::arc_maximum(m, st.nodes[i], st.nodes[i + 1]);
      ins(st.arc, i + 1, detail::arc_maximum(m, st.nodes[i + 1], st.nodes[i + 2]));
      return;
    }
  };

  // drop nodes far from the max when the chain grows, if the merged arc stays below the max
  auto prune = [&] {
    const double pm = st.path_max();
    while (st.nodes.size() > opt.max_nodes) {
      const std::size_t istar = st.argmax_node();
      std::size_t best = 0, best_dist = 0;
      detail::ArcMax merged;
      for (std::size_t j = 1; j + 1 < st.nodes.size(); ++j) {
        const std::size_t dist = j > istar ? j - istar : istar - j;
        if (dist <= 4 || dist <= best_dist) continue;
        const auto a = detail::arc_maximum(m, st.nodes[j - 1], st.nodes[j + 1]);
        if (a.e < pm - 1e-10 * std::fabs(pm)) {
          best = j;
          best_dist = dist;
          merged = a;
        }
      }
      if (best == 0) return;
      del(st.nodes, best);
      del(st.arc, best);
      st.arc[best - 1] = merged;
    }
  };

  insert_arc_max();
  MountainPassResult res;
  res.history.push_back(st.path_max());

  Eigen::SimplicialLDLT<SpMat> precond;
  SpMat P = m.stiffness() + m.M();
  precond.analyzePattern(P);
  double tau = opt.step0;

  for (int iter = 0;; ++iter) {
    const std::size_t istar = st.argmax_node();
    if (istar == 0 || istar + 1 == st.nodes.size())
      throw SolverError("mountain-pass maximum reached an endpoint: endpoints are not below the pass");
    const auto& top = st.nodes[istar];
    const double lam = lagrange_estimate(m, top.u);
    const Vec Mu = m.M() * top.u;
    const Vec pg = top.g - (top.g.dot(top.u) / Mu.dot(top.u)) * Mu;
    res.pg_norm = dual(pg) / (std::sqrt(mu) * std::max(1.0, std::fabs(lam)));
    res.iterations = iter;
    res.max_index = istar;
    if (trace)
      std::fprintf(stderr, "mp %d node %zu/%zu E %.12g max %.12g lambda %.6g pg %.3g tau %.3g\n", iter, istar,
                   st.nodes.size(), top.e, st.path_max(), lam, res.pg_norm, tau);
    if (res.pg_norm <= opt.tol_mp) {
      res.converged = true;
      break;
    }
    if (iter >= opt.max_iter) break;

    const double sigma = std::clamp(lam, 1.0, 1e8);
    P = m.stiffness() + sigma * m.M();
    precond.factorize(P);
    if (precond.info() != Eigen::Success) throw SolverError("preconditioner factorization failed");

    // preconditioned tangent directions for the window around the max
    std::vector<std::size_t> idx;
    std::vector<double> wts;
    std::vector<Vec> dirs;
    for (std::size_t j = 1; j + 1 < st.nodes.size(); ++j) {
      const double dist = std::fabs(static_cast<double>(j) - static_cast<double>(istar));
      const double w = 1.0 / ((1.0 + dist) * (1.0 + dist));
      if (w < 0.05) continue;
      const auto& nj = st.nodes[j];
      const Vec Mj = m.M() * nj.u;
      const Vec a = precond.solve(nj.g);
      const Vec b = precond.solve(Mj);
      idx.push_back(j);
      wts.push_back(w);
      dirs.push_back(a - (Mj.dot(a) / Mj.dot(b)) * b);
    }

    const double old_max = st.path_max();
    const std::size_t first = idx.front(), last = idx.back();
    for (;;) {
      if (tau < 1e-14) throw SolverError("mountain-pass stagnation: step size underflow");
      std::vector<detail::Node> moved;
      for (std::size_t k = 0; k < idx.size(); ++k)
        moved.push_back(detail::make_node(
            m, project_to_mass_sphere(m.ops(), Vec(st.nodes[idx[k]].u - tau * wts[k] * dirs[k]), mu)));
      auto node = [&](std::size_t i) -> const detail::Node& {
        return i >= first && i <= last ? moved[i - first] : st.nodes[i];
      };
      double new_max = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < st.nodes.size(); ++i) new_max = std::max(new_max, node(i).e);
      for (std::size_t i = 0; i < st.arc.size(); ++i)
        if (i + 1 < first || i > last) new_max = std::max(new_max, st.arc[i].e);
      std::vector<detail::ArcMax> arcs;
      for (std::size_t i = first - 1; i <= last && new_max <= old_max; ++i) {
        arcs.push_back(detail::arc_maximum(m, node(i), node(i + 1)));
        new_max = std::max(new_max, arcs.back().e);
      }
      if (new_max <= old_max) {
        for (std::size_t k = 0; k < idx.size(); ++k) st.nodes[idx[k]] = std::move(moved[k]);
        for (std::size_t i = first - 1; i <= last; ++i) st.arc[i] = arcs[i - (first - 1)];
        tau *= 1.3;
        break;
      }
      tau *= 0.5;
    }
    insert_arc_max();
    prune();
    res.history.push_back(st.path_max());
  }

  res.u = st.nodes[res.max_index].u;
  res.energy = st.nodes[res.max_index].e;
  res.lambda_hat = lagrange_estimate(m, res.u);
  for (auto& n : st.nodes) res.path.nodes.push_back(std::move(n.u));
  res.path.mu = mu;
  return res;
}

}  // namespace graph_nls
