#pragma once

// Post-hoc checks of a computed pair (u, lambda): residuals, identities,
// location of maxima, exponential tails and Morse counts.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "morse.hpp"

namespace graph_nls {

struct MaximumPoint {
  std::size_t edge = 0;
  double x = 0.0;
  double value = 0.0;
  std::optional<std::size_t> vertex;
  bool in_core = false;
};

namespace detail {

struct NodeRef {
  std::size_t edge;
  std::size_t i;
};

inline constexpr std::size_t kNone = static_cast<std::size_t>(-1);

inline bool precedes(NodeRef a, NodeRef b) { return a.edge != b.edge ? a.edge < b.edge : a.i < b.i; }

}  // namespace detail

// Discrete local maxima. A maximum is a set of connected nodes with one common
// value whose other neighbours are all strictly lower (eliminated far nodes
// count as 0). Each such plateau is reported once, at its node that comes first
// in (edge, x) order; a vertex node is identified with its smallest incident
// (edge, x).
inline std::vector<MaximumPoint> locate_maxima(const GraphFunction& u) {
  const auto& mesh = u.mesh();
  const auto& g = mesh.graph();
  const Vec& val = u.values();
  const auto n = static_cast<std::size_t>(val.size());
  std::vector<std::vector<std::size_t>> adj(n);
  std::vector<bool> zero_nbr(n, false);
  std::vector<detail::NodeRef> ref(n, detail::NodeRef{detail::kNone, detail::kNone});
  for (std::size_t e = 0; e < mesh.edges().size(); ++e) {
    const auto& me = mesh.edge(e);
    for (std::size_t i = 0; i <= me.n_elems; ++i) {
      const auto d = me.dof[i];
      if (d < 0) continue;
      const detail::NodeRef r{e, i};
      auto& cur = ref[static_cast<std::size_t>(d)];
      if (cur.edge == detail::kNone || detail::precedes(r, cur)) cur = r;
      if (i == me.n_elems) continue;
      const auto d1 = me.dof[i + 1];
      if (d1 < 0) {
        zero_nbr[static_cast<std::size_t>(d)] = true;
        continue;
      }
      adj[static_cast<std::size_t>(d)].push_back(static_cast<std::size_t>(d1));
      adj[static_cast<std::size_t>(d1)].push_back(static_cast<std::size_t>(d));
    }
  }

  std::vector<MaximumPoint> out;
  std::vector<bool> seen(n, false);
  std::vector<std::size_t> stack, comp;
  for (std::size_t s = 0; s < n; ++s) {
    if (seen[s]) continue;
    comp.clear();
    stack.assign(1, s);
    seen[s] = true;
    bool is_max = true;
    while (!stack.empty()) {
      const std::size_t d = stack.back();
      stack.pop_back();
      comp.push_back(d);
      if (zero_nbr[d] && !(val[d] > 0.0)) is_max = false;
      for (std::size_t k : adj[d]) {
        if (val[k] > val[d]) is_max = false;
        if (val[k] == val[d] && !seen[k]) {
          seen[k] = true;
          stack.push_back(k);
        }
      }
    }
    if (!is_max) continue;
    std::size_t best = comp.front();
    for (std::size_t d : comp)
      if (detail::precedes(ref[d], ref[best])) best = d;
    const auto r = ref[best];
    MaximumPoint mp{r.edge, mesh.x(r.edge, r.i), val[best], std::nullopt, g.edge(r.edge).finite()};
    if (mesh.is_vertex_dof(best)) {
      mp.vertex = best;
      mp.in_core = g.vertex_in_core(best);
    } else if (r.i == mesh.edge(r.edge).n_elems) {
      mp.in_core = false;
    }
    out.push_back(mp);
  }
  std::sort(out.begin(), out.end(), [](const MaximumPoint& a, const MaximumPoint& b) {
    return a.edge != b.edge ? a.edge < b.edge : a.x < b.x;
  });
  return out;
}

struct TailFit {
  std::size_t edge = 0;
  double a = 0.0, b = 0.0;
  double c = 0.0;
  double rate = 0.0;
  double rel_err = 0.0;
  double rate_error = 0.0;  // |rate - sqrt(lambda)| / sqrt(lambda)
  bool consistent = false;
};

// Least-squares fit of log u = log c - rate x over the nodes in [a, b].
inline TailFit tail_fit(const GraphFunction& u, double lambda, std::size_t halfline, double a, double b,
                        double tol = 1e-2) {
  const auto& mesh = u.mesh();
  if (!(lambda > 0.0)) throw InputError("tail_fit needs lambda > 0");
  if (halfline >= mesh.edges().size() || mesh.graph().edge(halfline).finite())
    throw InputError("tail_fit: edge is not a half-line");
  const auto& me = mesh.edge(halfline);
  if (!(a >= 0.0) || !(b > a) || b > me.extent) throw InputError("tail_fit: window outside the truncation");
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i <= me.n_elems; ++i) {
    const double x = mesh.x(halfline, i);
    if (x < a || x > b) continue;
    const double v = u.node(halfline, i);
    if (!(v > 0.0)) throw InputError("tail_fit: nonpositive sample in the window");
    xs.push_back(x);
    ys.push_back(std::log(v));
  }
  if (xs.size() < 2) throw InputError("tail_fit: fewer than two nodes in the window");
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) sx += xs[k], sy += ys[k];
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    sxx += (xs[k] - mx) * (xs[k] - mx);
    sxy += (xs[k] - mx) * (ys[k] - my);
  }
  TailFit f;
  f.edge = halfline;
  f.a = a;
  f.b = b;
  const double slope = sxy / sxx;
  f.rate = -slope;
  f.c = std::exp(my - slope * mx);
  for (std::size_t k = 0; k < xs.size(); ++k)
    f.rel_err = std::max(f.rel_err, std::fabs(std::expm1(ys[k] - (std::log(f.c) - f.rate * xs[k]))));
  const double s = std::sqrt(lambda);
  f.rate_error = std::fabs(f.rate - s) / s;
  f.consistent = f.rate_error <= tol;
  return f;
}

// Default window: starts 5 decay lengths out, spans 10, stays 5 short of L.
inline std::pair<double, double> default_tail_window(const Mesh& mesh, std::size_t halfline, double lambda) {
  const double ell = 1.0 / std::sqrt(lambda);
  const double L = mesh.edge(halfline).extent;
  const double a = std::min(5.0 * ell, 0.25 * L);
  double b = std::min(a + 10.0 * ell, L - 5.0 * ell);
  if (b <= a) b = a + 0.5 * (L - a);
  return {a, b};
}

// Relative size of u extrapolated to the far end of each half-line from its
// values at L/2 and 3L/4.
inline double truncation_defect(const GraphFunction& u) {
  const auto& mesh = u.mesh();
  const double umax = u.values().cwiseAbs().maxCoeff();
  if (!(umax > 0.0)) return 0.0;
  double worst = 0.0;
  for (auto e : mesh.graph().halflines()) {
    const double L = mesh.edge(e).extent;
    const double u1 = std::fabs(u.at(e, 0.5 * L)), u2 = std::fabs(u.at(e, 0.75 * L));
    if (!(u2 > 1e-290 * umax) || !(u1 > 0.0)) continue;
    const double rate = std::log(u1 / u2) / (0.25 * L);
    worst = std::max(worst, u2 * std::exp(-std::max(rate, 0.0) * 0.25 * L) / umax);
  }
  return worst;
}

struct CertificateTolerances {
  double tol_res = 1e-6;
  double tol_kirchhoff = 1e-6;
  double tol_mass = 1e-10;
  double tol_id = 1e-8;
  double tol_tail = 1e-2;
  int morse_free_max = 2;
  int morse_constrained_max = 1;
  MorseOptions morse;
};

struct Certificate {
  double pde_residual = 0.0;
  double kirchhoff_residual = 0.0;
  double pde_residual_nodal = 0.0;        // pointwise second differences
  double kirchhoff_residual_onesided = 0.0;  // one-sided O(h^2) stencils
  double mass_error = 0.0;
  double lambda = 0.0;
  bool lambda_positive = false;
  double energy = 0.0;
  bool energy_positive = false;
  double nehari_id_error = 0.0;
  double level_id_error = 0.0;
  double q_identity_error = 0.0;
  double min_value = 0.0;
  std::vector<MaximumPoint> maxima;
  bool maxima_in_core = false;
  bool maxima_checked = false;
  std::vector<TailFit> tail_fits;
  std::vector<std::string> tail_errors;
  int morse_free = 0;
  int morse_constrained = 0;
  MorseResult morse;
  double truncation_defect = 0.0;
  bool verdict = false;
  std::vector<std::string> failed;
};

namespace detail {

// Consistent outgoing derivative on edge e at vertex end `end`: the element's
// contribution to the vertex row of the discrete equation, sign flipped.
inline double recovered_flux(const EnergyModel& m, const Vec& u, double lambda, std::size_t e, EdgeEnd end) {
  const auto& me = m.mesh().edge(e);
  const std::size_t iv = end == EdgeEnd::Start ? 0 : me.n_elems;
  const std::size_t i1 = end == EdgeEnd::Start ? 1 : me.n_elems - 1;
  const double uv = dof_value(u, me.dof[iv]), u1 = dof_value(u, me.dof[i1]);
  const double h = me.h;
  double load = 0.0;
  if (m.kappa()[e]) {
    for (int g = 0; g < 4; ++g) {
      const double t = kGaussX[g];  // distance from the vertex in element units
      const double v = uv + (u1 - uv) * t;
      load += kGaussW[g] * abs_pow(v, m.p() - 2.0) * v * (1.0 - t);
    }
    load *= h;
  }
  const double c = (uv - u1) / h + lambda * h / 6.0 * (2.0 * uv + u1) - m.rho() * load;
  return -c;
}

inline double onesided_flux(const Mesh& mesh, const Vec& u, std::size_t e, EdgeEnd end) {
  const auto& me = mesh.edge(e);
  auto val = [&](std::size_t k) {
    const std::size_t i = end == EdgeEnd::Start ? k : me.n_elems - k;
    return dof_value(u, me.dof[i]);
  };
  return (-3.0 * val(0) + 4.0 * val(1) - val(2)) / (2.0 * me.h);
}

}  // namespace detail

inline Certificate verify_solution(const EnergyModel& m, const GraphFunction& uf, double lambda,
                                   const CertificateTolerances& tol = {}) {
  m.check(uf);
  const auto& mesh = m.mesh();
  const auto& g = mesh.graph();
  const Vec& u = uf.values();
  Certificate c;
  c.lambda = lambda;
  c.lambda_positive = lambda > 0.0;
  c.energy = energy(m, u);
  c.energy_positive = c.energy > 0.0;
  const double ms = mass(m.ops(), u);
  c.mass_error = std::fabs(ms - m.mu()) / m.mu();

  // discrete residual scaled row-wise by the lumped mass
  const Vec Au = m.stiffness() * u;
  const Vec load = power_load(mesh, u, m.p(), m.kappa());
  const Vec r = Au + lambda * (m.M() * u) - m.rho() * load;
  const double umax = u.cwiseAbs().maxCoeff();
  double au_max = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) au_max = std::max(au_max, std::fabs(Au[i]) / m.ops().lumped[i]);
  const double scale = std::max({au_max, std::fabs(lambda) * umax, m.rho() * std::pow(umax, m.p() - 1.0), 1e-300});
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (mesh.is_vertex_dof(static_cast<std::size_t>(i))) continue;
    c.pde_residual = std::max(c.pde_residual, std::fabs(r[i]) / m.ops().lumped[i] / scale);
  }
  for (std::size_t e = 0; e < mesh.edges().size(); ++e) {
    const auto& me = mesh.edge(e);
    const double q = m.kappa()[e] ? m.rho() : 0.0;
    for (std::size_t i = 1; i < me.n_elems; ++i) {
      const double um = uf.node(e, i - 1), u0 = uf.node(e, i), up = uf.node(e, i + 1);
      const double res = -(up - 2.0 * u0 + um) / (me.h * me.h) + lambda * u0 - q * detail::abs_pow(u0, m.p() - 2.0) * u0;
      c.pde_residual_nodal = std::max(c.pde_residual_nodal, std::fabs(res) / scale);
    }
  }

  // Kirchhoff sums at every vertex
  double grad_max = 0.0;
  for (std::size_t e = 0; e < mesh.edges().size(); ++e) {
    const auto& me = mesh.edge(e);
    for (std::size_t i = 0; i < me.n_elems; ++i)
      grad_max = std::max(grad_max, std::fabs(uf.node(e, i + 1) - uf.node(e, i)) / me.h);
  }
  for (std::size_t v = 0; v < g.vertices().size(); ++v) {
    double sum = 0.0, big = 0.0, sum1 = 0.0, big1 = 0.0;
    for (const auto& inc : g.vertex(v).incident) {
      const double d = detail::recovered_flux(m, u, lambda, inc.edge, inc.end);
      const double d1 = detail::onesided_flux(mesh, u, inc.edge, inc.end);
      const auto& me = mesh.edge(inc.edge);
      const std::size_t i0 = inc.end == EdgeEnd::Start ? 0 : me.n_elems - 1;
      const double dq = std::fabs(uf.node(inc.edge, i0 + 1) - uf.node(inc.edge, i0)) / me.h;
      sum += d;
      sum1 += d1;
      big = std::max({big, std::fabs(d), dq});
      big1 = std::max({big1, std::fabs(d1), dq});
    }
    const double floor = 1e-8 * std::max(grad_max, 1e-300);
    c.kirchhoff_residual = std::max(c.kirchhoff_residual, std::fabs(sum) / std::max(big, floor));
    c.kirchhoff_residual_onesided = std::max(c.kirchhoff_residual_onesided, std::fabs(sum1) / std::max(big1, floor));
  }

  // identities
  const double D = u.dot(Au);
  const double P = kappa_power(m, u);
  c.nehari_id_error = std::fabs(D + lambda * ms - m.rho() * P) / std::max(1.0, P);
  c.level_id_error = std::fabs((0.5 - 1.0 / m.p()) * D - c.energy - lambda * ms / m.p()) / std::max(1.0, std::fabs(c.energy));
  c.q_identity_error =
      std::fabs(hessian_form(m, u, lambda, u, u) - (2.0 - m.p()) * m.rho() * P) / std::max(1.0, m.rho() * P);

  c.min_value = kInfinity;
  for (Eigen::Index i = 0; i < u.size(); ++i) c.min_value = std::min(c.min_value, u[i]);

  c.maxima = locate_maxima(uf);
  c.maxima_checked = g.kappa_is_core();
  c.maxima_in_core = !c.maxima.empty() &&
                     std::all_of(c.maxima.begin(), c.maxima.end(), [](const MaximumPoint& p) { return p.in_core; });

  bool tails_ok = true;
  if (lambda > 0.0) {
    for (auto e : g.halflines()) {
      const auto [a, b] = default_tail_window(mesh, e, lambda);
      try {
        c.tail_fits.push_back(tail_fit(uf, lambda, e, a, b, tol.tol_tail));
        tails_ok = tails_ok && c.tail_fits.back().consistent;
      } catch (const InputError& err) {
        c.tail_errors.push_back(g.edge(e).id + ": " + err.what());
        tails_ok = false;
      }
    }
  } else {
    tails_ok = false;
  }

  c.morse = morse_index(m, u, lambda, tol.morse);
  c.morse_free = c.morse.free;
  c.morse_constrained = c.morse.constrained;
  c.truncation_defect = truncation_defect(uf);

  auto need = [&](bool ok, const char* what) {
    if (!ok) c.failed.emplace_back(what);
  };
  auto finite = [](double x) { return std::isfinite(x); };
  need(finite(c.pde_residual) && c.pde_residual <= tol.tol_res, "pde_residual");
  need(finite(c.kirchhoff_residual) && c.kirchhoff_residual <= tol.tol_kirchhoff, "kirchhoff_residual");
  need(c.mass_error <= tol.tol_mass, "mass_error");
  need(c.nehari_id_error <= tol.tol_id, "nehari_id_error");
  need(c.level_id_error <= tol.tol_id, "level_id_error");
  need(c.lambda_positive, "lambda_positive");
  need(c.energy_positive, "energy_positive");
  need(c.min_value > 0.0 || (c.min_value == 0.0 && mesh.far_boundary() == FarBoundary::Dirichlet), "positivity");
  if (c.maxima_checked) need(c.maxima_in_core, "maxima_in_core");
  need(tails_ok, "tail_fits");
  need(c.morse_free <= tol.morse_free_max, "morse_free");
  need(c.morse_constrained <= tol.morse_constrained_max, "morse_constrained");
  c.verdict = c.failed.empty();
  return c;
}

inline nlohmann::json to_json(const Certificate& c, const MetricGraph& g) {
  nlohmann::json j;
  j["pde_residual"] = c.pde_residual;
  j["kirchhoff_residual"] = c.kirchhoff_residual;
  j["pde_residual_nodal"] = c.pde_residual_nodal;
  j["kirchhoff_residual_onesided"] = c.kirchhoff_residual_onesided;
  j["mass_error"] = c.mass_error;
  j["lambda"] = c.lambda;
  j["lambda_positive"] = c.lambda_positive;
  j["energy"] = c.energy;
  j["energy_positive"] = c.energy_positive;
  j["nehari_id_error"] = c.nehari_id_error;
  j["level_id_error"] = c.level_id_error;
  j["q_identity_error"] = c.q_identity_error;
  j["min_value"] = c.min_value;
  auto& mx = j["maxima"] = nlohmann::json::array();
  for (const auto& p : c.maxima) {
    nlohmann::json jp = {{"edge", g.edge(p.edge).id}, {"x", p.x}, {"value", p.value}, {"in_core", p.in_core}};
    if (p.vertex) jp["vertex"] = g.vertex(*p.vertex).id;
    mx.push_back(jp);
  }
  j["maxima_in_core"] = c.maxima_in_core;
  j["maxima_checked"] = c.maxima_checked;
  auto& tf = j["tail_fits"] = nlohmann::json::array();
  for (const auto& f : c.tail_fits)
    tf.push_back({{"edge", g.edge(f.edge).id},
                  {"window", {f.a, f.b}},
                  {"c", f.c},
                  {"rate", f.rate},
                  {"rel_err", f.rel_err},
                  {"rate_error", f.rate_error},
                  {"consistent", f.consistent}});
  j["tail_errors"] = c.tail_errors;
  j["morse_free"] = c.morse_free;
  j["morse_constrained"] = c.morse_constrained;
  j["morse"] = {{"theta", c.morse.theta},
                {"pairing", c.morse.pairing},
                {"spectrum_bound", c.morse.spectrum_bound},
                {"schur", c.morse.schur},
                {"nearest_eigenvalues", c.morse.nearest},
                {"audit_residual", c.morse.audit_residual},
                {"audit_converged", c.morse.audit_converged}};
  j["truncation_defect"] = c.truncation_defect;
  j["failed"] = c.failed;
  j["verdict"] = c.verdict;
  return j;
}

}  // namespace graph_nls
