#pragma once

// Uniform P1 grids on every edge. Vertex nodes are shared by all incident
// edges (continuity is structural); half-lines are truncated at x = L with a
// Dirichlet (eliminated node) or Robin far end.

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "graph.hpp"

namespace graph_nls {

enum class FarBoundary { Dirichlet, Robin };

inline FarBoundary parse_far_boundary(std::string_view s) {
  if (s == "dirichlet") return FarBoundary::Dirichlet;
  if (s == "robin") return FarBoundary::Robin;
  throw InputError("far_bc must be \"dirichlet\" or \"robin\"");
}

inline const char* to_string(FarBoundary b) { return b == FarBoundary::Dirichlet ? "dirichlet" : "robin"; }

struct MeshEdge {
  std::size_t n_elems = 0;
  double h = 0.0;
  double extent = 0.0;             // edge length, or L on a half-line
  std::vector<std::ptrdiff_t> dof;  // local node -> global dof, -1 if eliminated
};

class Mesh {
public:
  const MetricGraph& graph() const { return *graph_; }
  const std::shared_ptr<const MetricGraph>& graph_ptr() const { return graph_; }
  const std::vector<MeshEdge>& edges() const { return edges_; }
  const MeshEdge& edge(std::size_t e) const { return edges_.at(e); }
  std::size_t num_dofs() const { return num_dofs_; }
  std::size_t num_nodes() const { return num_nodes_; }
  double target_h() const { return h_; }
  double truncation() const { return L_; }
  FarBoundary far_boundary() const { return far_bc_; }

  double x(std::size_t e, std::size_t i) const { return static_cast<double>(i) * edges_[e].h; }
  std::ptrdiff_t vertex_dof(std::size_t v) const { return static_cast<std::ptrdiff_t>(v); }
  bool is_vertex_dof(std::size_t dof) const { return dof < graph_->vertices().size(); }

  // Dofs of free (Robin) half-line ends.
  std::vector<std::size_t> far_dofs() const {
    std::vector<std::size_t> out;
    for (std::size_t e = 0; e < edges_.size(); ++e)
      if (!graph_->edge(e).finite() && edges_[e].dof.back() >= 0)
        out.push_back(static_cast<std::size_t>(edges_[e].dof.back()));
    return out;
  }

  double min_h() const {
    double m = kInfinity;
    for (const auto& me : edges_) m = std::min(m, me.h);
    return m;
  }

  // FNV-1a over the graph spec and the grid layout.
  std::string hash() const {
    std::uint64_t hsh = 1469598103934665603ULL;
    auto mix = [&](const std::string& s) {
      for (unsigned char c : s) {
        hsh ^= c;
        hsh *= 1099511628211ULL;
      }
    };
    mix(to_json(graph_->spec()).dump());
    for (const auto& me : edges_)
      mix(std::to_string(me.n_elems) + ":" + std::to_string(std::bit_cast<std::uint64_t>(me.h)) + ";");
    mix(std::to_string(std::bit_cast<std::uint64_t>(L_)));
    mix(to_string(far_bc_));
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hsh));
    return buf;
  }

private:
  friend Mesh build_mesh(std::shared_ptr<const MetricGraph>, double, double, FarBoundary);

  std::shared_ptr<const MetricGraph> graph_;
  std::vector<MeshEdge> edges_;
  std::size_t num_dofs_ = 0;
  std::size_t num_nodes_ = 0;
  double h_ = 0.0;
  double L_ = 0.0;
  FarBoundary far_bc_ = FarBoundary::Dirichlet;
};

inline Mesh build_mesh(std::shared_ptr<const MetricGraph> graph, double h, double L,
                       FarBoundary far_bc = FarBoundary::Dirichlet) {
  if (!graph) throw InputError("build_mesh: null graph");
  if (!(h > 0.0) || !std::isfinite(h)) throw InputError("mesh spacing h must be positive");
  if (!(L > 0.0) || !std::isfinite(L)) throw InputError("truncation length L must be positive");
  if (h > 0.5 * graph->shortest_bounded_length())
    throw InputError("mesh spacing h exceeds half the shortest edge length");
  if (L < 2.0 * h) throw InputError("truncation length L must hold at least two elements");

  Mesh m;
  m.graph_ = std::move(graph);
  m.h_ = h;
  m.L_ = L;
  m.far_bc_ = far_bc;
  const auto& g = *m.graph_;
  std::size_t next = g.vertices().size();
  std::size_t nodes = g.vertices().size();
  for (const auto& e : g.edges()) {
    MeshEdge me;
    me.extent = e.finite() ? e.length : L;
    me.n_elems = static_cast<std::size_t>(std::ceil(me.extent / h - 1e-9));
    me.n_elems = std::max<std::size_t>(me.n_elems, 2);
    me.h = me.extent / static_cast<double>(me.n_elems);
    me.dof.resize(me.n_elems + 1);
    me.dof.front() = static_cast<std::ptrdiff_t>(e.from);
    for (std::size_t i = 1; i < me.n_elems; ++i) me.dof[i] = static_cast<std::ptrdiff_t>(next++);
    nodes += me.n_elems - 1;
    if (e.finite()) {
      me.dof.back() = static_cast<std::ptrdiff_t>(*e.to);
    } else {
      ++nodes;
      me.dof.back() = far_bc == FarBoundary::Robin ? static_cast<std::ptrdiff_t>(next++) : -1;
    }
    m.edges_.push_back(std::move(me));
  }
  m.num_dofs_ = next;
  m.num_nodes_ = nodes;
  return m;
}

inline Mesh build_mesh(const MetricGraph& graph, double h, double L,
                       FarBoundary far_bc = FarBoundary::Dirichlet) {
  return build_mesh(std::make_shared<const MetricGraph>(graph), h, L, far_bc);
}

}  // namespace graph_nls
