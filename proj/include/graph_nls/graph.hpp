#pragma once

// Noncompact metric graphs: finitely many edges, at least one half-line and a
// non-empty compact core. Each edge is parametrized from its start vertex;
// half-lines are [0, +inf) with the free end at infinity.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "errors.hpp"

namespace graph_nls {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct EdgeSpec {
  std::string id;
  std::string from;
  std::optional<std::string> to;  // nullopt marks a half-line
  double length = kInfinity;
  std::optional<bool> kappa;      // explicit nonlinearity-region override

  bool operator==(const EdgeSpec&) const = default;
};

struct GraphSpec {
  std::vector<std::string> vertices;
  std::vector<EdgeSpec> edges;

  bool operator==(const GraphSpec&) const = default;
};

enum class EdgeEnd { Start, End };

struct Incidence {
  std::size_t edge;
  EdgeEnd end;
};

// Internal edge. Loops from the spec are split in two halves at an artificial
// degree-2 vertex; `parent` and `parent_offset` map back to the spec edge.
struct Edge {
  std::string id;
  std::string parent;
  double parent_offset = 0.0;
  double length = kInfinity;
  std::size_t from = 0;
  std::optional<std::size_t> to;
  bool kappa = false;

  bool finite() const { return to.has_value(); }
};

struct Vertex {
  std::string id;
  bool artificial = false;
  std::vector<Incidence> incident;

  std::size_t degree() const { return incident.size(); }
};

class MetricGraph {
public:
  const GraphSpec& spec() const { return spec_; }
  const std::vector<Vertex>& vertices() const { return vertices_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(std::size_t e) const { return edges_.at(e); }
  const Vertex& vertex(std::size_t v) const { return vertices_.at(v); }
  const std::vector<std::string>& warnings() const { return warnings_; }

  std::size_t edge_index(std::string_view id) const {
    for (std::size_t e = 0; e < edges_.size(); ++e)
      if (edges_[e].id == id) return e;
    throw InputError("unknown edge id '" + std::string(id) + "'");
  }

  std::size_t vertex_index(std::string_view id) const {
    for (std::size_t v = 0; v < vertices_.size(); ++v)
      if (vertices_[v].id == id) return v;
    throw InputError("unknown vertex id '" + std::string(id) + "'");
  }

  // Internal edges addressed by an internal id or by a spec (parent) id.
  std::vector<std::size_t> edges_of(std::string_view id) const {
    std::vector<std::size_t> out;
    for (std::size_t e = 0; e < edges_.size(); ++e)
      if (edges_[e].id == id || edges_[e].parent == id) out.push_back(e);
    if (out.empty()) throw InputError("unknown edge id '" + std::string(id) + "'");
    return out;
  }

  std::vector<std::size_t> halflines() const {
    std::vector<std::size_t> out;
    for (std::size_t e = 0; e < edges_.size(); ++e)
      if (!edges_[e].finite()) out.push_back(e);
    return out;
  }

  std::vector<std::size_t> bounded_edges() const {
    std::vector<std::size_t> out;
    for (std::size_t e = 0; e < edges_.size(); ++e)
      if (edges_[e].finite()) out.push_back(e);
    return out;
  }

  std::vector<std::size_t> kappa_edges() const {
    std::vector<std::size_t> out;
    for (std::size_t e = 0; e < edges_.size(); ++e)
      if (edges_[e].kappa) out.push_back(e);
    return out;
  }

  // True when the nonlinearity acts exactly on the compact core (the default).
  bool kappa_is_core() const {
    return std::all_of(edges_.begin(), edges_.end(),
                       [](const Edge& e) { return e.kappa == e.finite(); });
  }

  // Vertex touching at least one bounded edge.
  bool vertex_in_core(std::size_t v) const {
    const auto& inc = vertices_.at(v).incident;
    return std::any_of(inc.begin(), inc.end(),
                       [&](const Incidence& i) { return edges_[i.edge].finite(); });
  }

  bool vertex_in_kappa(std::size_t v) const {
    const auto& inc = vertices_.at(v).incident;
    return std::any_of(inc.begin(), inc.end(),
                       [&](const Incidence& i) { return edges_[i.edge].kappa; });
  }

  double shortest_bounded_length() const {
    double m = kInfinity;
    for (const auto& e : edges_)
      if (e.finite()) m = std::min(m, e.length);
    return m;
  }

  bool operator==(const MetricGraph& other) const { return spec_ == other.spec_; }

private:
  friend MetricGraph build_graph(const GraphSpec& spec);

  GraphSpec spec_;
  std::vector<Vertex> vertices_;
  std::vector<Edge> edges_;
  std::vector<std::string> warnings_;
};

inline MetricGraph build_graph(const GraphSpec& spec) {
  MetricGraph g;
  g.spec_ = spec;

  if (spec.vertices.empty()) throw InputError("graph has no vertices");
  std::set<std::string> vids(spec.vertices.begin(), spec.vertices.end());
  if (vids.size() != spec.vertices.size()) throw InputError("duplicate vertex id");
  std::set<std::string> eids;
  for (const auto& e : spec.edges)
    if (!eids.insert(e.id).second) throw InputError("duplicate edge id '" + e.id + "'");

  for (const auto& id : spec.vertices) g.vertices_.push_back(Vertex{id, false, {}});
  auto vindex = [&](const std::string& id) -> std::size_t {
    auto it = std::find(spec.vertices.begin(), spec.vertices.end(), id);
    if (it == spec.vertices.end())
      throw InputError("edge endpoint refers to unknown vertex '" + id + "'");
    return static_cast<std::size_t>(it - spec.vertices.begin());
  };

  bool any_override = false;
  for (const auto& es : spec.edges) {
    if (!(es.length > 0.0) || std::isnan(es.length))
      throw InputError("nonpositive length on edge '" + es.id + "'");
    if (es.to && !std::isfinite(es.length))
      throw InputError("bounded edge '" + es.id + "' needs a finite length");
    if (!es.to && std::isfinite(es.length))
      throw InputError("half-line '" + es.id + "' must have infinite length");
    if (es.kappa) any_override = true;

    const std::size_t from = vindex(es.from);
    const bool finite = es.to.has_value();
    const bool kappa = es.kappa.value_or(finite);
    if (finite && vindex(*es.to) == from) {
      // loop: split at an artificial midpoint vertex
      const std::size_t mid = g.vertices_.size();
      g.vertices_.push_back(Vertex{es.id + "#mid", true, {}});
      const double half = 0.5 * es.length;
      g.edges_.push_back(Edge{es.id + "#0", es.id, 0.0, half, from, mid, kappa});
      g.edges_.push_back(Edge{es.id + "#1", es.id, half, half, mid, from, kappa});
    } else if (finite) {
      g.edges_.push_back(Edge{es.id, es.id, 0.0, es.length, from, vindex(*es.to), kappa});
    } else {
      g.edges_.push_back(Edge{es.id, es.id, 0.0, kInfinity, from, std::nullopt, kappa});
    }
  }

  for (std::size_t e = 0; e < g.edges_.size(); ++e) {
    g.vertices_[g.edges_[e].from].incident.push_back({e, EdgeEnd::Start});
    if (g.edges_[e].to) g.vertices_[*g.edges_[e].to].incident.push_back({e, EdgeEnd::End});
  }

  if (g.halflines().empty()) throw InputError("no half-line: graph must be noncompact");

  // connectivity
  std::vector<bool> seen(g.vertices_.size(), false);
  std::queue<std::size_t> todo;
  todo.push(0);
  seen[0] = true;
  while (!todo.empty()) {
    const std::size_t v = todo.front();
    todo.pop();
    for (const auto& inc : g.vertices_[v].incident) {
      const auto& e = g.edges_[inc.edge];
      for (auto w : {std::optional<std::size_t>(e.from), e.to}) {
        if (w && !seen[*w]) {
          seen[*w] = true;
          todo.push(*w);
        }
      }
    }
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end())
    throw InputError("disconnected graph");

  if (g.bounded_edges().empty()) {
    if (!any_override) throw InputError("empty compact core");
    g.warnings_.push_back("compact core is empty; the nonlinearity acts only on the kappa override");
  }
  if (g.kappa_edges().empty()) throw InputError("empty nonlinearity region (no kappa edge)");
  return g;
}

// Spec ids of the bounded edges (the compact core).
inline std::vector<std::string> compact_core(const MetricGraph& g) {
  std::vector<std::string> out;
  for (const auto& e : g.edges())
    if (e.finite() && std::find(out.begin(), out.end(), e.parent) == out.end())
      out.push_back(e.parent);
  return out;
}

// Spec ids of the edges carrying the nonlinearity.
inline std::vector<std::string> kappa_region(const MetricGraph& g) {
  std::vector<std::string> out;
  for (const auto& e : g.edges())
    if (e.kappa && std::find(out.begin(), out.end(), e.parent) == out.end())
      out.push_back(e.parent);
  return out;
}

// ---------------------------------------------------------------------------
// Presets

enum class KappaMode { Core, All };

inline KappaMode parse_kappa_mode(std::string_view s) {
  if (s == "core") return KappaMode::Core;
  if (s == "all") return KappaMode::All;
  throw InputError("kappa must be \"core\" or \"all\", got '" + std::string(s) + "'");
}

namespace detail {
inline void apply_kappa(GraphSpec& spec, KappaMode mode) {
  if (mode == KappaMode::All)
    for (auto& e : spec.edges) e.kappa = true;
}
inline void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw InputError(std::string("invalid parameter: ") + what + " must be positive");
}
}  // namespace detail

// m half-lines h1..hm glued at vertex "O". Needs kappa = All.
inline MetricGraph preset_star(int m, KappaMode kappa = KappaMode::All) {
  if (m < 1) throw InputError("invalid parameter: star(m) needs m >= 1");
  if (kappa != KappaMode::All) throw InputError("star(m) has no compact core; it requires kappa = \"all\"");
  GraphSpec s{{"O"}, {}};
  for (int i = 1; i <= m; ++i) s.edges.push_back({"h" + std::to_string(i), "O", std::nullopt, kInfinity, {}});
  detail::apply_kappa(s, kappa);
  return build_graph(s);
}

// Loop "loop" of length loop_len at vertex "J" plus n half-lines h1..hn at J.
inline MetricGraph preset_tadpole(double loop_len, int n_halflines, KappaMode kappa = KappaMode::Core) {
  detail::require_positive(loop_len, "loop_len");
  if (n_halflines < 1) throw InputError("invalid parameter: tadpole needs at least one half-line");
  GraphSpec s{{"J"}, {{"loop", "J", "J", loop_len, {}}}};
  for (int i = 1; i <= n_halflines; ++i)
    s.edges.push_back({"h" + std::to_string(i), "J", std::nullopt, kInfinity, {}});
  detail::apply_kappa(s, kappa);
  return build_graph(s);
}

// Loops "loopA"/"loopB" at vertices A and B joined by "bar"; one half-line at each of A, B.
inline MetricGraph preset_dumbbell(double loop_len, double bar_len, KappaMode kappa = KappaMode::Core) {
  detail::require_positive(loop_len, "loop_len");
  detail::require_positive(bar_len, "bar_len");
  GraphSpec s{{"A", "B"},
              {{"loopA", "A", "A", loop_len, {}},
               {"bar", "A", "B", bar_len, {}},
               {"loopB", "B", "B", loop_len, {}},
               {"hA", "A", std::nullopt, kInfinity, {}},
               {"hB", "B", std::nullopt, kInfinity, {}}}};
  detail::apply_kappa(s, kappa);
  return build_graph(s);
}

// Interval "e1" = [A, B] of length len with half-line "h1" at B.
inline MetricGraph preset_interval_plus_line(double len, KappaMode kappa = KappaMode::Core) {
  detail::require_positive(len, "len");
  GraphSpec s{{"A", "B"}, {{"e1", "A", "B", len, {}}, {"h1", "B", std::nullopt, kInfinity, {}}}};
  detail::apply_kappa(s, kappa);
  return build_graph(s);
}

// ---------------------------------------------------------------------------
// JSON: {"vertices":[ids], "edges":[{"id","from","to"|null,"length":number|"inf","kappa":bool?}]}

inline std::string json_id(const nlohmann::json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer()) return std::to_string(j.get<long long>());
  throw InputError("ids must be strings or integers");
}

inline GraphSpec graph_spec_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("vertices") || !j.contains("edges"))
    throw InputError("graph spec needs \"vertices\" and \"edges\"");
  GraphSpec s;
  for (const auto& v : j.at("vertices")) s.vertices.push_back(json_id(v));
  for (const auto& je : j.at("edges")) {
    EdgeSpec e;
    e.id = json_id(je.at("id"));
    e.from = json_id(je.at("from"));
    if (je.contains("to") && !je.at("to").is_null()) e.to = json_id(je.at("to"));
    const auto& len = je.at("length");
    if (len.is_string()) {
      if (len.get<std::string>() != "inf") throw InputError("length must be a number or \"inf\"");
      e.length = kInfinity;
    } else if (len.is_number()) {
      e.length = len.get<double>();
    } else {
      throw InputError("length must be a number or \"inf\"");
    }
    if (je.contains("kappa") && !je.at("kappa").is_null()) e.kappa = je.at("kappa").get<bool>();
    s.edges.push_back(std::move(e));
  }
  return s;
}

inline nlohmann::json to_json(const GraphSpec& s) {
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : s.edges) {
    nlohmann::json je{{"id", e.id}, {"from", e.from}};
    je["to"] = e.to ? nlohmann::json(*e.to) : nlohmann::json(nullptr);
    je["length"] = std::isfinite(e.length) ? nlohmann::json(e.length) : nlohmann::json("inf");
    if (e.kappa) je["kappa"] = *e.kappa;
    edges.push_back(std::move(je));
  }
  return {{"vertices", s.vertices}, {"edges", edges}};
}

// Either an inline spec or {"preset": name, ...params, "kappa": "core"|"all"}.
inline MetricGraph graph_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InputError("graph must be a JSON object");
  if (!j.contains("preset")) return build_graph(graph_spec_from_json(j));
  const std::string name = j.at("preset").get<std::string>();
  auto num = [&](const char* key, double def) { return j.contains(key) ? j.at(key).get<double>() : def; };
  auto cnt = [&](const char* key, int def) { return j.contains(key) ? j.at(key).get<int>() : def; };
  if (name == "star")
    return preset_star(cnt("m", 2), parse_kappa_mode(j.value("kappa", std::string("all"))));
  const KappaMode kappa = parse_kappa_mode(j.value("kappa", std::string("core")));
  if (name == "tadpole") return preset_tadpole(num("loop_len", 2.0), cnt("n_halflines", 1), kappa);
  if (name == "dumbbell") return preset_dumbbell(num("loop_len", 2.0), num("bar_len", 1.0), kappa);
  if (name == "interval_plus_line") return preset_interval_plus_line(num("len", 1.0), kappa);
  throw InputError("unknown preset '" + name + "'");
}

}  // namespace graph_nls
