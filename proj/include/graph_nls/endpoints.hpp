#pragma once

// Mountain-pass endpoints on the mass sphere: a spread-out bump w1 with small
// kinetic energy and a concentrated bump w2 with negative energy.

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mp_constants.hpp"

namespace graph_nls {

// C^1 bump (1 - s^2)^2 on |s| <= 1.
inline double bump_profile(double s) {
  const double t = 1.0 - s * s;
  return std::fabs(s) < 1.0 ? t * t : 0.0;
}

// Where a bump sits: radially around a vertex, or inside one edge.
struct BumpCenter {
  std::optional<std::size_t> vertex;
  std::size_t edge = 0;
  double x = 0.0;
};

// Largest admissible radius around a center.
inline double max_bump_radius(const Mesh& mesh, const BumpCenter& c) {
  const auto& g = mesh.graph();
  if (c.vertex) {
    double r = kInfinity;
    for (const auto& inc : g.vertex(*c.vertex).incident) r = std::min(r, mesh.edge(inc.edge).extent);
    return r;
  }
  return std::min(c.x, mesh.edge(c.edge).extent - c.x);
}

inline GraphFunction bump_function(const std::shared_ptr<const Mesh>& mesh, const BumpCenter& c, double r) {
  if (!(r > 0.0) || r > max_bump_radius(*mesh, c) * (1.0 + 1e-12))
    throw InputError("bump radius does not fit around its center");
  const auto& g = mesh->graph();
  return GraphFunction::interpolate(mesh, [&](std::size_t e, double x) {
    if (c.vertex) {
      const auto& edge = g.edge(e);
      double d = kInfinity;
      if (edge.from == *c.vertex) d = x;
      if (edge.to && *edge.to == *c.vertex) d = std::min(d, edge.length - x);
      return bump_profile(d / r);
    }
    return e == c.edge ? bump_profile((x - c.x) / r) : 0.0;
  });
}

struct EndpointOptions {
  std::optional<double> gn_constant;  // overrides the graph default
  bool strict = true;                 // throw when the bounds cannot be met
};

struct EndpointBounds {
  double grad_sq = 0.0;
  double energy_half = 0.0;  // E at rho = 1/2
  double energy_one = 0.0;   // E at rho = 1
  bool ok = false;
};

struct Endpoints {
  GraphFunction w1, w2;
  BumpCenter c1, c2;
  double r1 = 0.0, r2 = 0.0;
  GnConstant gn;
  MpConstants mp;
  EndpointBounds b1, b2;
  bool verified = false;
  std::vector<std::string> notes;
};

namespace detail {

inline EndpointBounds endpoint_bounds(const EnergyModel& m, const Vec& w) {
  EndpointBounds b;
  b.grad_sq = w.dot(m.ops().A * w);
  const double kp = kappa_power(m, w);
  b.energy_half = 0.5 * b.grad_sq - 0.5 / m.p() * kp;
  b.energy_one = 0.5 * b.grad_sq - 1.0 / m.p() * kp;
  return b;
}

// Longest kappa edge of the spec (loops count whole); w2 sits at its midpoint.
inline std::optional<BumpCenter> core_center(const Mesh& mesh) {
  const auto& g = mesh.graph();
  std::optional<BumpCenter> best;
  double best_len = 0.0;
  for (const auto& es : g.spec().edges) {
    const auto parts = g.edges_of(es.id);
    const auto& first = g.edge(parts.front());
    if (!first.finite() || !first.kappa || es.length <= best_len) continue;
    best_len = es.length;
    BumpCenter c;
    if (parts.size() == 2) {
      c.vertex = *first.to;  // artificial midpoint of a loop
    } else {
      c.edge = parts.front();
      c.x = 0.5 * first.length;
    }
    best = c;
  }
  return best;
}

}  // namespace detail

inline Endpoints make_endpoints(const EnergyModel& m, const EndpointOptions& opt = {}) {
  const auto& mesh = m.mesh_ptr();
  const auto& g = mesh->graph();
  if (!(m.p() > 6.0)) throw InputError("mountain-pass endpoints need p > 6");
  Endpoints ep;
  ep.gn = opt.gn_constant ? GnConstant{*opt.gn_constant, "config"} : default_gn_constant(g, m.p());
  ep.mp = mp_constants(m.p(), m.mu(), ep.gn.value);
  const double k0 = ep.mp.k0, alpha = ep.mp.alpha, mu = m.mu();

  const auto core = detail::core_center(*mesh);
  if (core) {
    ep.c2 = *core;
    const auto hl = g.halflines();
    ep.c1.edge = hl.front();
  } else {
    // star graph with the nonlinearity on the half-lines: both bumps radial at the vertex
    const std::size_t v = g.halflines().empty() ? 0 : g.edge(g.halflines().front()).from;
    ep.c1.vertex = v;
    ep.c2.vertex = v;
  }

  // w1: double the radius until the kinetic and energy bounds hold
  auto r1_max = [&] {
    if (ep.c1.vertex) return max_bump_radius(*mesh, ep.c1);
    return 0.5 * mesh->edge(ep.c1.edge).extent;
  }();
  auto place_w1 = [&](double r) {
    if (!ep.c1.vertex) ep.c1.x = r;
    return project_to_mass_sphere(m.ops(), bump_function(mesh, ep.c1, r), mu);
  };
  auto w1_ok = [&](const EndpointBounds& b) { return b.grad_sq < k0 && b.energy_half <= 0.5 * alpha && b.energy_one <= 0.5 * alpha; };
  double r = std::min(1.0, r1_max);
  for (;;) {
    ep.w1 = place_w1(r);
    ep.b1 = detail::endpoint_bounds(m, ep.w1.values());
    ep.b1.ok = w1_ok(ep.b1);
    if (ep.b1.ok || r >= r1_max) break;
    r = std::min(2.0 * r, r1_max);
  }
  ep.r1 = r;
  if (!ep.b1.ok) {
    // kinetic energy of the bump is 3 mu / r^2; the potential term only helps
    const double r_need = 1.05 * std::sqrt(3.0 * mu / std::min(k0, alpha));
    const double L_need = std::ceil((ep.c1.vertex ? 1.0 : 2.0) * r_need);
    std::ostringstream msg;
    msg << "truncation L = " << mesh->truncation() << " too short to host w1 (needs |w1'|^2 < " << k0
        << " and E(w1) <= " << 0.5 * alpha << "); suggested L >= " << L_need;
    if (opt.strict) throw TruncationError(msg.str(), L_need);
    ep.notes.push_back("unverified: " + msg.str());
  }

  // w2: halve the radius until the concentration bounds hold
  const double r2_min = 4.0 * mesh->min_h();
  const double r2_max = std::min(max_bump_radius(*mesh, ep.c2), core ? kInfinity : 1.0);
  auto w2_ok = [&](const EndpointBounds& b) { return b.grad_sq > 2.0 * k0 && b.energy_half < 0.0 && b.energy_one < 0.0; };
  r = r2_max;
  for (;;) {
    ep.w2 = project_to_mass_sphere(m.ops(), bump_function(mesh, ep.c2, r), mu);
    ep.b2 = detail::endpoint_bounds(m, ep.w2.values());
    ep.b2.ok = w2_ok(ep.b2);
    if (ep.b2.ok || r <= r2_min) break;
    r = std::max(0.5 * r, r2_min);
  }
  ep.r2 = r;
  if (!ep.b2.ok) throw InputError("cannot satisfy E(w2) < 0 at the compression cap (width 8h)");
  ep.verified = ep.b1.ok && ep.b2.ok;
  return ep;
}

}  // namespace graph_nls
