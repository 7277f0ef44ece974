#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "mesh.hpp"

namespace graph_nls {

using Vec = Eigen::VectorXd;

// A continuous piecewise-linear function on a mesh, stored by global dof.
class GraphFunction {
public:
  GraphFunction() = default;
  explicit GraphFunction(std::shared_ptr<const Mesh> mesh)
      : mesh_(std::move(mesh)), values_(Vec::Zero(static_cast<Eigen::Index>(mesh_->num_dofs()))) {}
  GraphFunction(std::shared_ptr<const Mesh> mesh, Vec values) : mesh_(std::move(mesh)), values_(std::move(values)) {
    if (static_cast<std::size_t>(values_.size()) != mesh_->num_dofs())
      throw InputError("GraphFunction: coefficient vector does not match the mesh");
    if (!values_.allFinite()) throw InputError("GraphFunction: non-finite coefficient");
  }

  const Mesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const Mesh>& mesh_ptr() const { return mesh_; }
  const Vec& values() const { return values_; }
  Vec& values() { return values_; }

  double node(std::size_t e, std::size_t i) const {
    const auto d = mesh_->edge(e).dof[i];
    return d < 0 ? 0.0 : values_[d];
  }

  // Piecewise-linear evaluation at local coordinate x of edge e.
  double at(std::size_t e, double x) const {
    const auto& me = mesh_->edge(e);
    if (x <= 0.0) return node(e, 0);
    if (x > me.extent) return mesh_->graph().edge(e).finite() ? node(e, me.n_elems) : 0.0;
    const double s = x / me.h;
    auto k = static_cast<std::size_t>(s);
    if (k >= me.n_elems) k = me.n_elems - 1;
    const double t = s - static_cast<double>(k);
    return (1.0 - t) * node(e, k) + t * node(e, k + 1);
  }

  // Nodal interpolant of f(edge, x). Vertex values are taken from the first
  // incident edge; eliminated Dirichlet nodes are skipped.
  static GraphFunction interpolate(std::shared_ptr<const Mesh> mesh,
                                   const std::function<double(std::size_t, double)>& f) {
    GraphFunction out(mesh);
    std::vector<bool> set(mesh->num_dofs(), false);
    for (std::size_t e = 0; e < mesh->edges().size(); ++e) {
      const auto& me = mesh->edge(e);
      for (std::size_t i = 0; i <= me.n_elems; ++i) {
        const auto d = me.dof[i];
        if (d < 0 || set[d]) continue;
        out.values_[d] = f(e, mesh->x(e, i));
        set[d] = true;
      }
    }
    return out;
  }

  // Re-sample on another mesh of the same graph (zero beyond the old truncation).
  GraphFunction transfer(std::shared_ptr<const Mesh> target) const {
    if (!(target->graph() == mesh_->graph())) throw InputError("transfer: meshes are on different graphs");
    return interpolate(std::move(target), [this](std::size_t e, double x) { return at(e, x); });
  }

private:
  std::shared_ptr<const Mesh> mesh_;
  Vec values_;
};

// {"mesh_hash", "edges":[{"id","x":[...],"u":[...]}]}; vertex values are
// repeated on every incident edge.
inline nlohmann::json to_json(const GraphFunction& u) {
  const auto& mesh = u.mesh();
  nlohmann::json edges = nlohmann::json::array();
  for (std::size_t e = 0; e < mesh.edges().size(); ++e) {
    const auto& me = mesh.edge(e);
    std::vector<double> xs, us;
    for (std::size_t i = 0; i <= me.n_elems; ++i) {
      xs.push_back(mesh.x(e, i));
      us.push_back(u.node(e, i));
    }
    edges.push_back({{"id", mesh.graph().edge(e).id}, {"x", xs}, {"u", us}});
  }
  return {{"mesh_hash", mesh.hash()}, {"edges", edges}};
}

inline GraphFunction graph_function_from_json(const nlohmann::json& j, std::shared_ptr<const Mesh> mesh) {
  if (j.at("mesh_hash").get<std::string>() != mesh->hash())
    throw InputError("GraphFunction JSON was written for a different mesh");
  Vec vals = Vec::Zero(static_cast<Eigen::Index>(mesh->num_dofs()));
  std::vector<bool> set(mesh->num_dofs(), false);
  for (const auto& je : j.at("edges")) {
    const std::size_t e = mesh->graph().edge_index(je.at("id").get<std::string>());
    const auto& me = mesh->edge(e);
    const auto us = je.at("u").get<std::vector<double>>();
    const auto xs = je.at("x").get<std::vector<double>>();
    if (us.size() != me.n_elems + 1 || xs.size() != us.size())
      throw InputError("GraphFunction JSON: node count mismatch on edge " + mesh->graph().edge(e).id);
    for (std::size_t i = 0; i <= me.n_elems; ++i) {
      if (xs[i] != mesh->x(e, i)) throw InputError("GraphFunction JSON: node coordinates differ from the mesh");
      const auto d = me.dof[i];
      if (d < 0) {
        if (us[i] != 0.0) throw InputError("GraphFunction JSON: nonzero value at a Dirichlet node");
        continue;
      }
      if (set[d] && vals[d] != us[i])
        throw InputError("GraphFunction JSON: inconsistent vertex value on edge " + mesh->graph().edge(e).id);
      vals[d] = us[i];
      set[d] = true;
    }
  }
  return GraphFunction(std::move(mesh), std::move(vals));
}

}  // namespace graph_nls
