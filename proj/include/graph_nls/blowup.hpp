#pragma once

// Blow-up rescaling v(y) = lambda^{-1/(p-2)} u(xbar + y / sqrt(lambda)) around
// a point of the graph, followed along every branch leaving the point.

#include <cmath>
#include <optional>
#include <vector>

#include "certificate.hpp"
#include "endpoints.hpp"
#include "soliton.hpp"

namespace graph_nls {

struct BlowupSample {
  double y = 0.0;  // signed only for the two branches of an edge-interior center
  double v = 0.0;
};

struct BlowupProfile {
  double lambda = 0.0;
  double u_center = 0.0;
  double lower_bound = 0.0;  // lambda^{1/(p-2)}
  bool lower_bound_holds = false;
  std::vector<std::vector<BlowupSample>> branches;
  double sup_distance = 0.0;  // max |v(y) - phi_p(|y|)| / phi_p(0)
};

namespace detail {

// Walks from (edge e, coordinate x) in direction dir (+1 towards `to`, -1
// towards `from`), passing through degree-2 vertices, and samples u at
// distances s_k = y_k / sqrt(lambda).
inline std::vector<BlowupSample> walk_branch(const GraphFunction& u, std::size_t e, double x, int dir,
                                             const std::vector<double>& dist, double scale_v, double scale_y) {
  const auto& mesh = u.mesh();
  const auto& g = mesh.graph();
  std::vector<BlowupSample> out;
  double travelled = 0.0;
  for (double d : dist) {
    for (;;) {
      const double room = dir > 0 ? mesh.edge(e).extent - x : x;
      if (d - travelled <= room * (1.0 + 1e-12) + 1e-15) break;
      // advance to the end of this edge
      const Edge& edge = g.edge(e);
      std::optional<std::size_t> v;
      if (dir > 0)
        v = edge.to;
      else
        v = edge.from;
      if (!v) throw InputError("blow-up window exceeds the truncated half-line");
      const auto& vert = g.vertex(*v);
      if (vert.degree() != 2) throw InputError("blow-up window exceeds the graph at a branching vertex");
      travelled += room;
      const auto& next = vert.incident[0].edge == e && (vert.incident[0].end == EdgeEnd::Start) == (dir < 0)
                             ? vert.incident[1]
                             : vert.incident[0];
      e = next.edge;
      dir = next.end == EdgeEnd::Start ? +1 : -1;
      x = dir > 0 ? 0.0 : mesh.edge(e).extent;
    }
    const double xe = std::clamp(x + dir * (d - travelled), 0.0, mesh.edge(e).extent);
    out.push_back({d * scale_y, scale_v * u.at(e, xe)});
  }
  return out;
}

}  // namespace detail

// Center: a vertex, or a point inside an edge. Samples |y| <= R at spacing dy.
inline BlowupProfile blowup_profile(const GraphFunction& u, double lambda, double p, const BumpCenter& center,
                                    double R = 3.0, double dy = 0.01) {
  if (!(lambda > 0.0)) throw InputError("blow-up needs lambda > 0");
  if (!(R > 0.0) || !(dy > 0.0)) throw InputError("blow-up window must be positive");
  require_soliton_exponent(p);
  const auto& mesh = u.mesh();
  const auto& g = mesh.graph();
  BlowupProfile bp;
  bp.lambda = lambda;
  const double sv = std::pow(lambda, -1.0 / (p - 2.0));
  const double sl = std::sqrt(lambda);
  std::vector<double> dist;
  const auto n = static_cast<int>(std::floor(R / dy + 1e-9));
  for (int k = 0; k <= n; ++k) dist.push_back(k * dy / sl);

  if (center.vertex) {
    bp.u_center = u.values()[mesh.vertex_dof(*center.vertex)];
    for (const auto& inc : g.vertex(*center.vertex).incident) {
      const int dir = inc.end == EdgeEnd::Start ? +1 : -1;
      const double x = dir > 0 ? 0.0 : mesh.edge(inc.edge).extent;
      bp.branches.push_back(detail::walk_branch(u, inc.edge, x, dir, dist, sv, sl));
    }
  } else {
    if (center.edge >= mesh.edges().size() || center.x < 0.0 || center.x > mesh.edge(center.edge).extent)
      throw InputError("blow-up center outside the graph");
    bp.u_center = u.at(center.edge, center.x);
    bp.branches.push_back(detail::walk_branch(u, center.edge, center.x, +1, dist, sv, sl));
    auto back = detail::walk_branch(u, center.edge, center.x, -1, dist, sv, sl);
    for (auto& s : back) s.y = -s.y;
    bp.branches.push_back(std::move(back));
  }
  bp.lower_bound = std::pow(lambda, 1.0 / (p - 2.0));
  bp.lower_bound_holds = bp.u_center >= bp.lower_bound;
  const double peak = soliton_profile(p, 0.0);
  for (const auto& br : bp.branches)
    for (const auto& s : br) bp.sup_distance = std::max(bp.sup_distance, std::fabs(s.v - soliton_profile(p, std::fabs(s.y))) / peak);
  return bp;
}

// Center at the largest discrete maximum of u.
inline BumpCenter global_max_center(const GraphFunction& u) {
  const auto maxima = locate_maxima(u);
  if (maxima.empty()) throw InputError("function has no local maximum");
  const MaximumPoint* best = &maxima.front();
  for (const auto& mp : maxima)
    if (mp.value > best->value) best = &mp;
  BumpCenter c;
  c.vertex = best->vertex;
  c.edge = best->edge;
  c.x = best->x;
  return c;
}

}  // namespace graph_nls
