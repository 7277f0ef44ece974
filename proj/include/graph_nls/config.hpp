#pragma once

// Run configuration: one JSON document per run.

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "certificate.hpp"
#include "continuation.hpp"

namespace graph_nls {

enum class InitialGuess { MountainPass, Soliton };

struct RunConfig {
  nlohmann::json graph;
  double p = 8.0;
  double mu = 1.0;
  double rho = 1.0;
  std::vector<ScheduleEntry> schedule;
  bool has_schedule = false;
  bool oracle_mode = false;

  double h = 1e-3;
  double L = 15.0;
  FarBoundary far_bc = FarBoundary::Dirichlet;
  std::vector<double> h_list;

  double tol_mp = 1e-3;
  double tol_newton = 1e-10;
  double tol_trunc = 1e-6;
  int max_iter = 5000;
  std::size_t path_nodes = 24;
  double step0 = 0.5;
  bool strict_geometry = true;
  int max_L_doublings = 3;
  InitialGuess initial = InitialGuess::MountainPass;
  bool warm_start = true;
  bool parallel = false;

  CertificateTolerances cert;
  std::string output_dir = "out";
  std::uint64_t seed = 1;
  std::optional<double> gn_constant;
  std::optional<std::string> solution;  // verify: path to solution.json
};

namespace detail {

inline void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key())) throw InputError("unknown key '" + it.key() + "' in " + where);
}

template <class T>
T get_or(const nlohmann::json& j, const char* key, T dflt) {
  if (!j.contains(key)) return dflt;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw InputError(std::string("config key '") + key + "' has the wrong type");
  }
}

inline double positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw InputError(std::string(what) + " must be > 0");
  return v;
}

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& j) {
  using detail::get_or;
  using detail::positive;
  if (!j.is_object()) throw InputError("config must be a JSON object");
  detail::reject_unknown(j,
                         {"graph", "p", "mu", "rho", "schedule", "oracle_mode", "mesh", "solver", "certificate",
                          "output_dir", "seed", "gn_constant", "solution"},
                         "config");
  RunConfig c;
  if (!j.contains("graph")) throw InputError("config needs a graph");
  c.graph = j.at("graph");
  c.p = get_or(j, "p", c.p);
  c.mu = positive(get_or(j, "mu", c.mu), "mu");
  c.rho = get_or(j, "rho", c.rho);
  c.oracle_mode = get_or(j, "oracle_mode", false);
  if (c.oracle_mode ? !(c.p > 2.0) : !(c.p > 6.0))
    throw InputError(c.oracle_mode ? "p must be > 2" : "p must be > 6 (set oracle_mode for p > 2)");
  if (!(c.rho >= 0.5 && c.rho <= 1.0)) throw InputError("rho must lie in [1/2, 1]");

  if (j.contains("schedule")) {
    c.has_schedule = true;
    const auto& s = j.at("schedule");
    if (!s.is_array()) throw InputError("schedule must be an array");
    for (const auto& e : s) {
      if (!e.is_object()) throw InputError("schedule entries must be objects");
      detail::reject_unknown(e, {"rho", "mu"}, "schedule entry");
      ScheduleEntry se{get_or(e, "rho", c.rho), positive(get_or(e, "mu", c.mu), "schedule mu")};
      if (!(se.rho >= 0.5 && se.rho <= 1.0)) throw InputError("schedule rho must lie in [1/2, 1]");
      c.schedule.push_back(se);
    }
  }

  const nlohmann::json mesh = j.value("mesh", nlohmann::json::object());
  detail::reject_unknown(mesh, {"h", "L", "far_bc", "h_list"}, "mesh");
  c.h = positive(get_or(mesh, "h", c.h), "mesh.h");
  c.L = positive(get_or(mesh, "L", c.L), "mesh.L");
  c.far_bc = parse_far_boundary(get_or<std::string>(mesh, "far_bc", "dirichlet"));
  c.h_list = get_or(mesh, "h_list", std::vector<double>{});
  for (double h : c.h_list) positive(h, "mesh.h_list entries");

  const nlohmann::json s = j.value("solver", nlohmann::json::object());
  detail::reject_unknown(s,
                         {"tol_mp", "tol_newton", "tol_trunc", "max_iter", "path_nodes", "step0", "strict_geometry",
                          "max_L_doublings", "initial", "warm_start", "parallel"},
                         "solver");
  c.tol_mp = positive(get_or(s, "tol_mp", c.tol_mp), "solver.tol_mp");
  c.tol_newton = positive(get_or(s, "tol_newton", c.tol_newton), "solver.tol_newton");
  c.tol_trunc = positive(get_or(s, "tol_trunc", c.tol_trunc), "solver.tol_trunc");
  c.max_iter = get_or(s, "max_iter", c.max_iter);
  if (c.max_iter < 1) throw InputError("solver.max_iter must be >= 1");
  c.path_nodes = get_or(s, "path_nodes", c.path_nodes);
  if (c.path_nodes < 2) throw InputError("solver.path_nodes must be >= 2");
  c.step0 = positive(get_or(s, "step0", c.step0), "solver.step0");
  c.strict_geometry = get_or(s, "strict_geometry", c.strict_geometry);
  c.max_L_doublings = get_or(s, "max_L_doublings", c.max_L_doublings);
  if (c.max_L_doublings < 0) throw InputError("solver.max_L_doublings must be >= 0");
  const auto init = get_or<std::string>(s, "initial", "mountain_pass");
  if (init == "mountain_pass")
    c.initial = InitialGuess::MountainPass;
  else if (init == "soliton")
    c.initial = InitialGuess::Soliton;
  else
    throw InputError("solver.initial must be \"mountain_pass\" or \"soliton\"");
  if (c.initial == InitialGuess::MountainPass && !(c.p > 6.0))
    throw InputError("the mountain-pass start needs p > 6; use solver.initial = \"soliton\"");
  c.warm_start = get_or(s, "warm_start", c.warm_start);
  c.parallel = get_or(s, "parallel", c.parallel);

  const nlohmann::json ct = j.value("certificate", nlohmann::json::object());
  detail::reject_unknown(ct,
                         {"tol_res", "tol_kirchhoff", "tol_mass", "tol_id", "tol_tail", "theta", "pairing",
                          "morse_free_max", "morse_constrained_max"},
                         "certificate");
  c.cert.tol_res = positive(get_or(ct, "tol_res", c.cert.tol_res), "certificate.tol_res");
  c.cert.tol_kirchhoff = positive(get_or(ct, "tol_kirchhoff", c.cert.tol_kirchhoff), "certificate.tol_kirchhoff");
  c.cert.tol_mass = positive(get_or(ct, "tol_mass", c.cert.tol_mass), "certificate.tol_mass");
  c.cert.tol_id = positive(get_or(ct, "tol_id", c.cert.tol_id), "certificate.tol_id");
  c.cert.tol_tail = positive(get_or(ct, "tol_tail", c.cert.tol_tail), "certificate.tol_tail");
  c.cert.morse.theta_rel = get_or(ct, "theta", c.cert.morse.theta_rel);
  if (!(c.cert.morse.theta_rel >= 0.0)) throw InputError("certificate.theta must be >= 0");
  c.cert.morse.pairing = parse_pairing(get_or<std::string>(ct, "pairing", "L2"));
  c.cert.morse_free_max = get_or(ct, "morse_free_max", c.cert.morse_free_max);
  c.cert.morse_constrained_max = get_or(ct, "morse_constrained_max", c.cert.morse_constrained_max);

  c.output_dir = get_or(j, "output_dir", c.output_dir);
  c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
  c.cert.morse.seed = c.seed;
  if (j.contains("gn_constant")) c.gn_constant = positive(get_or(j, "gn_constant", 0.0), "gn_constant");
  if (j.contains("solution")) c.solution = get_or<std::string>(j, "solution", "");
  return c;
}

inline SolveOptions solve_options(const RunConfig& c) {
  SolveOptions o;
  o.mp.max_iter = c.max_iter;
  o.mp.step0 = c.step0;
  o.mp.tol_mp = c.tol_mp;
  o.newton.tol = c.tol_newton;
  o.endpoints.strict = c.strict_geometry;
  o.endpoints.gn_constant = c.gn_constant;
  o.path_nodes = c.path_nodes;
  return o;
}

}  // namespace graph_nls
