#pragma once

// Gagliardo-Nirenberg constants and the mountain-pass radius k0 and height
// alpha on the mass sphere.
//
//   int |u|^p <= C_p |u'|_2^{p/2-1} |u|_2^{p/2+1}

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "functionals.hpp"
#include "soliton.hpp"

namespace graph_nls {

// Sharp constant on the line; the soliton is an optimizer.
inline double line_gn_constant(double p) {
  require_soliton_exponent(p);
  return soliton_lp(p) / (std::pow(soliton_dirichlet(p), 0.25 * (p - 2.0)) * std::pow(soliton_mass(p), 0.25 * (p + 2.0)));
}

// Sharp constant on the half-line (even reflection onto the line).
inline double halfline_gn_constant(double p) { return std::pow(2.0, 0.5 * p - 1.0) * line_gn_constant(p); }

struct GnConstant {
  double value = 0.0;
  std::string source;  // "line" or "halfline"
};

// Valid constant for every function on the graph: star graphs with at least
// two half-lines rearrange onto the line, everything else onto the half-line.
inline GnConstant default_gn_constant(const MetricGraph& g, double p) {
  if (g.bounded_edges().empty() && g.halflines().size() >= 2) return {line_gn_constant(p), "line"};
  return {halfline_gn_constant(p), "halfline"};
}

struct MpConstants {
  double k0 = 0.0;
  double alpha = 0.0;
};

inline MpConstants mp_constants(double p, double mu, double C) {
  if (!(p > 6.0)) throw InputError("mp_constants needs p > 6");
  if (!(mu > 0.0)) throw InputError("mp_constants needs mu > 0");
  if (!(C > 0.0)) throw InputError("mp_constants needs C_p > 0");
  MpConstants c;
  c.k0 = 0.5 * std::pow(p / (2.0 * C), 4.0 / (p - 6.0)) * std::pow(mu, -(p + 2.0) / (p - 6.0));
  c.alpha = c.k0 * (0.5 - C / p * std::pow(mu, 0.25 * (p + 2.0)) * std::pow(c.k0, 0.25 * (p - 6.0)));
  if (!(c.alpha > 0.0) || !std::isfinite(c.alpha))
    throw InputError("mountain-pass height alpha is not positive; invalid GN constant");
  return c;
}

// Discrete GN quotient int |u|^p / (|u'|^{p/2-1} |u|^{p/2+1}) over the whole graph.
inline double gn_quotient(const Mesh& mesh, const DiscreteOperators& ops, const Vec& u, double p) {
  const double d = u.dot(ops.A * u);
  const double m = mass(ops, u);
  if (!(d > 0.0) || !(m > 0.0)) return 0.0;
  return integrate_power(mesh, u, p, all_edges_mask(mesh.graph())) /
         (std::pow(d, 0.25 * (p - 2.0)) * std::pow(m, 0.25 * (p + 2.0)));
}

// Largest quotient seen over random bump fields. A lower bound for the sharp
// constant, useful as a sanity check of a supplied value.
inline double estimate_gn_constant(const std::shared_ptr<const Mesh>& mesh, double p, int trials, std::uint64_t seed) {
  const auto ops = assemble_operators(*mesh);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const auto& g = mesh->graph();
  double best = 0.0;
  for (int t = 0; t < trials; ++t) {
    const std::size_t e = static_cast<std::size_t>(U(rng) * static_cast<double>(g.edges().size())) % g.edges().size();
    const double extent = mesh->edge(e).extent;
    const double c = U(rng) * extent;
    const double w = std::max(4.0 * mesh->edge(e).h, (0.05 + U(rng)) * std::min(extent, 4.0));
    const double sharp = 1.0 + 3.0 * U(rng);
    auto u = GraphFunction::interpolate(mesh, [&](std::size_t ee, double x) {
      if (ee != e) return 0.0;
      const double s = (x - c) / w;
      return std::exp(-std::pow(std::fabs(s), sharp));
    });
    best = std::max(best, gn_quotient(*mesh, ops, u.values(), p));
  }
  return best;
}

}  // namespace graph_nls
