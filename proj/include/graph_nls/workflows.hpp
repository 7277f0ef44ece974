#pragma once

// Batch workflows behind the command-line front end. Each returns an exit
// code: 0 success, 1 checks failed, 2 solver failure, 3 config or IO error,
// 4 partial failure or indeterminate result.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "soliton.hpp"

namespace graph_nls {

enum ExitCode : int { kExitOk = 0, kExitFailed = 1, kExitSolver = 2, kExitConfig = 3, kExitPartial = 4 };

class IoError : public InputError {
public:
  explicit IoError(const std::string& what) : InputError(what) {}
};

// Formats a double with 17 significant digits.
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Problem {
  std::shared_ptr<const MetricGraph> graph;
  std::shared_ptr<const Mesh> mesh;
  EnergyModel model;
};

inline Problem make_problem(const RunConfig& c, double h, double L, double rho, double mu) {
  auto g = std::make_shared<const MetricGraph>(graph_from_json(c.graph));
  auto mesh = std::make_shared<const Mesh>(build_mesh(g, h, L, c.far_bc));
  EnergyModel m(mesh, c.p, rho, mu);
  return {g, mesh, m};
}

// Star graphs only: the line soliton profile on every half-line, lambda = 1.
inline CriticalPoint solve_from_soliton(const EnergyModel& m, const SolveOptions& opt) {
  const auto& g = m.mesh().graph();
  if (!g.bounded_edges().empty()) throw InputError("the soliton start needs a star graph");
  const double p = m.p();
  const auto u0 = GraphFunction::interpolate(m.mesh_ptr(), [&](std::size_t, double x) { return soliton_profile(p, x); });
  CriticalPoint seed;
  seed.u = u0;
  seed.lambda = 1.0;
  return solve_warm(m, seed, opt);
}

inline CriticalPoint solve_point(const RunConfig& c, const EnergyModel& m) {
  const SolveOptions opt = solve_options(c);
  return c.initial == InitialGuess::Soliton ? solve_from_soliton(m, opt) : solve_from_scratch(m, opt);
}

struct AdaptiveSolve {
  Problem problem;
  CriticalPoint point;
  double L = 0.0;
};

// Doubles L when the endpoints do not fit or the tail at L is above tol_trunc.
inline AdaptiveSolve solve_adaptive(const RunConfig& c, double h, double rho, double mu) {
  double L = c.L;
  std::vector<std::string> notes;
  for (int k = 0;; ++k) {
    Problem pb = make_problem(c, h, L, rho, mu);
    CriticalPoint cp;
    try {
      cp = solve_point(c, pb.model);
    } catch (const TruncationError& e) {
      if (k >= c.max_L_doublings) throw;
      notes.push_back("L = " + fmt17(L) + " doubled: " + e.what());
      L *= 2.0;
      continue;
    }
    const double defect = truncation_defect(cp.u);
    if (defect > c.tol_trunc && k < c.max_L_doublings) {
      notes.push_back("L = " + fmt17(L) + " doubled: tail defect " + fmt17(defect) + " above tol_trunc");
      L *= 2.0;
      continue;
    }
    if (defect > c.tol_trunc) notes.push_back("tail defect " + fmt17(defect) + " above tol_trunc at the last L");
    cp.notes.insert(cp.notes.begin(), notes.begin(), notes.end());
    return {std::move(pb), std::move(cp), L};
  }
}

// Smallest L = c.L * 2^k (k <= max_L_doublings) whose mesh hosts the
// mountain-pass endpoints of every entry.
inline double endpoint_truncation(const RunConfig& c, double h, const std::vector<ScheduleEntry>& entries) {
  double L = c.L;
  if (c.initial != InitialGuess::MountainPass) return L;
  for (int k = 0;; ++k) {
    bool fits = true;
    for (const auto& se : entries) {
      const Problem pb = make_problem(c, h, L, se.rho, se.mu);
      try {
        make_endpoints(pb.model, solve_options(c).endpoints);
      } catch (const TruncationError&) {
        fits = false;
        break;
      }
    }
    if (fits || k >= c.max_L_doublings) return L;
    L *= 2.0;
  }
}

inline int thread_cap() {
  int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* s = std::getenv("GRAPH_NLS_THREADS")) {
    const int v = std::atoi(s);
    if (v >= 1) n = std::min(n, v);
  }
  return n;
}

// ---------------------------------------------------------------- artifacts

inline std::filesystem::path prepare_output_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory '" + dir + "'");
  const fs::path probe = fs::path(dir) / ".write_probe";
  {
    std::ofstream f(probe);
    if (!f) throw IoError("output directory '" + dir + "' is not writable");
  }
  fs::remove(probe, ec);
  return dir;
}

inline void write_text(const std::filesystem::path& path, const std::string& text, bool append = false) {
  std::ofstream f(path, append ? std::ios::app : std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  f << text;
  if (!f) throw IoError("write to '" + path.string() + "' failed");
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read '" + path.string() + "'");
  try {
    return nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw InputError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

inline std::string graph_label(const RunConfig& c) {
  if (c.graph.is_object() && c.graph.contains("preset") && c.graph.at("preset").is_string())
    return c.graph.at("preset").get<std::string>();
  return "inline";
}

inline nlohmann::json solution_json(const Problem& pb, const CriticalPoint& cp) {
  nlohmann::json j;
  j["graph"] = to_json(pb.graph->spec());
  j["mesh"] = {{"h", pb.mesh->target_h()}, {"L", pb.mesh->truncation()}, {"far_bc", to_string(pb.mesh->far_boundary())}};
  j["p"] = cp.p;
  j["rho"] = cp.rho;
  j["mu"] = cp.mu;
  j["robin"] = cp.robin;
  j["lambda"] = cp.lambda;
  j["energy"] = cp.energy;
  j["solver"] = {{"mp_energy", cp.mp_energy},
                 {"mp_iterations", cp.mp_iterations},
                 {"newton_steps", cp.newton_steps},
                 {"newton_at_roundoff_floor", cp.newton_at_floor},
                 {"warm_started", cp.warm_started},
                 {"notes", cp.notes}};
  j["function"] = to_json(cp.u);
  return j;
}

struct LoadedSolution {
  Problem problem;
  CriticalPoint point;
};

inline LoadedSolution load_solution(const nlohmann::json& j) {
  try {
    auto g = std::make_shared<const MetricGraph>(build_graph(graph_spec_from_json(j.at("graph"))));
    const auto& jm = j.at("mesh");
    auto mesh = std::make_shared<const Mesh>(build_mesh(g, jm.at("h").get<double>(), jm.at("L").get<double>(),
                                                        parse_far_boundary(jm.at("far_bc").get<std::string>())));
    EnergyModel m(mesh, j.at("p").get<double>(), j.at("rho").get<double>(), j.at("mu").get<double>(),
                  j.value("robin", 0.0));
    CriticalPoint cp;
    cp.u = graph_function_from_json(j.at("function"), mesh);
    cp.lambda = j.at("lambda").get<double>();
    cp.p = m.p();
    cp.rho = m.rho();
    cp.mu = m.mu();
    cp.robin = m.robin();
    cp.energy = energy(m, cp.u);
    return {{g, mesh, m}, cp};
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed solution file: ") + e.what());
  }
}

inline nlohmann::json certificate_json(const Problem& pb, const CriticalPoint& cp, const Certificate& cert) {
  nlohmann::json j = to_json(cert, *pb.graph);
  j["p"] = cp.p;
  j["rho"] = cp.rho;
  j["mu"] = cp.mu;
  return j;
}

inline void append_results_row(const std::filesystem::path& dir, const RunConfig& c, const CriticalPoint& cp,
                               const Certificate& cert) {
  const auto path = dir / "results.csv";
  const bool fresh = !std::filesystem::exists(path);
  std::ostringstream s;
  if (fresh) s << "graph,p,mu,rho,lambda,energy,morse_free,morse_constrained,verdict\n";
  s << graph_label(c) << ',' << fmt17(cp.p) << ',' << fmt17(cp.mu) << ',' << fmt17(cp.rho) << ',' << fmt17(cp.lambda)
    << ',' << fmt17(cp.energy) << ',' << cert.morse_free << ',' << cert.morse_constrained << ','
    << (cert.verdict ? "true" : "false") << '\n';
  write_text(path, s.str(), true);
}

inline void report_error(std::ostream& err, int code, const std::string& kind, const std::string& message,
                         const std::optional<std::filesystem::path>& dir = std::nullopt) {
  const nlohmann::json j = {{"status", "error"}, {"exit_code", code}, {"kind", kind}, {"message", message}};
  err << j.dump() << std::endl;
  if (dir) {
    std::ofstream f(*dir / "error.json");
    if (f) f << j.dump(2) << '\n';
  }
}

// ---------------------------------------------------------------- commands

inline int cmd_solve(const RunConfig& c, std::ostream& log = std::cout) {
  const auto dir = prepare_output_dir(c.output_dir);
  AdaptiveSolve as = solve_adaptive(c, c.h, c.rho, c.mu);
  const Certificate cert = verify_solution(model_for(as.problem.model, as.point), as.point.u, as.point.lambda, c.cert);
  write_text(dir / "solution.json", solution_json(as.problem, as.point).dump(1) + "\n");
  write_text(dir / "certificate.json", certificate_json(as.problem, as.point, cert).dump(1) + "\n");
  append_results_row(dir, c, as.point, cert);
  log << "lambda " << fmt17(as.point.lambda) << " energy " << fmt17(as.point.energy) << " L " << fmt17(as.L)
      << " verdict " << (cert.verdict ? "true" : "false") << '\n';
  for (const auto& f : cert.failed) log << "failed check: " << f << '\n';
  return cert.verdict ? kExitOk : kExitFailed;
}

inline int cmd_verify(const RunConfig& c, std::ostream& log = std::cout) {
  namespace fs = std::filesystem;
  const fs::path sol = c.solution ? fs::path(*c.solution) : fs::path(c.output_dir) / "solution.json";
  LoadedSolution ls = load_solution(read_json(sol));
  const auto dir = prepare_output_dir(c.output_dir);
  const Certificate cert = verify_solution(model_for(ls.problem.model, ls.point), ls.point.u, ls.point.lambda, c.cert);
  nlohmann::json j = certificate_json(ls.problem, ls.point, cert);
  bool matches = true;
  const fs::path stored = sol.parent_path() / "certificate.json";
  if (fs::exists(stored)) {
    const nlohmann::json old = read_json(stored);
    for (auto it = j.begin(); it != j.end(); ++it)
      if (old.contains(it.key()) && old.at(it.key()) != it.value()) {
        matches = false;
        log << "differs from stored certificate: " << it.key() << '\n';
      }
    j["matches_stored"] = matches;
  }
  write_text(dir / "certificate_verify.json", j.dump(1) + "\n");
  log << "verdict " << (cert.verdict ? "true" : "false") << '\n';
  for (const auto& f : cert.failed) log << "failed check: " << f << '\n';
  return cert.verdict && matches ? kExitOk : kExitFailed;
}

inline int cmd_continue(const RunConfig& c, std::ostream& log = std::cout) {
  if (!c.has_schedule || c.schedule.empty()) throw InputError("continue needs a non-empty schedule");
  const auto dir = prepare_output_dir(c.output_dir);
  const auto& first = c.schedule.front();
  ContinuationResult res;
  std::optional<Problem> pb;
  std::string fail;
  try {
    RunConfig cs = c;
    cs.L = endpoint_truncation(c, c.h, c.schedule);
    AdaptiveSolve as = solve_adaptive(cs, c.h, first.rho, first.mu);
    pb = as.problem;
    if (c.warm_start || !c.parallel) {
      SolveOptions opt = solve_options(c);
      if (!c.warm_start) {
        // every entry from scratch, sequentially
        for (std::size_t k = 0; k < c.schedule.size(); ++k) {
          const auto part = continuation_run(pb->model, {c.schedule[k]}, opt, c.cert,
                                             k == 0 ? std::optional<CriticalPoint>(as.point) : std::nullopt);
          for (const auto& st : part.stages) res.stages.push_back(st);
          if (part.failed) {
            res.failed = true;
            res.failed_index = k;
            res.failure = part.failure;
            break;
          }
        }
      } else {
        res = continuation_run(pb->model, c.schedule, opt, c.cert, as.point);
      }
    } else {
      // independent entries in parallel; results kept in schedule order
      const std::size_t n = c.schedule.size();
      std::vector<std::optional<StageResult>> slots(n);
      std::vector<std::string> errors(n);
      std::size_t next = 1;
      std::mutex mx;
      StageResult s0;
      s0.entry = first;
      s0.point = as.point;
      s0.certificate = verify_solution(model_for(pb->model, as.point), as.point.u, as.point.lambda, c.cert);
      if (s0.certificate.verdict)
        slots[0] = s0;
      else
        errors[0] = "not certified";
      auto worker = [&] {
        for (;;) {
          std::size_t k;
          {
            std::lock_guard<std::mutex> lk(mx);
            if (next >= n) return;
            k = next++;
          }
          const auto part = continuation_run(pb->model, {c.schedule[k]}, solve_options(c), c.cert);
          std::lock_guard<std::mutex> lk(mx);
          if (part.failed)
            errors[k] = part.failure;
          else
            slots[k] = part.stages.front();
        }
      };
      std::vector<std::thread> pool;
      const int nt = std::min<int>(thread_cap(), static_cast<int>(n));
      for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
      for (std::size_t k = 0; k < n; ++k) {
        if (!slots[k]) {
          res.failed = true;
          res.failed_index = k;
          res.failure = "stage " + std::to_string(k) + ": " + errors[k];
          break;
        }
        res.stages.push_back(*slots[k]);
      }
    }
  } catch (const SolverError& e) {
    res.failed = true;
    res.failed_index = 0;
    res.failure = std::string("stage 0: ") + e.what();
  }

  std::ostringstream csv;
  csv << "stage,rho,mu,lambda,energy,morse_free,morse_constrained,warm_started,verdict\n";
  nlohmann::json summary;
  auto& stages = summary["stages"] = nlohmann::json::array();
  double max_increase = 0.0;
  for (std::size_t k = 0; k < res.stages.size(); ++k) {
    const auto& st = res.stages[k];
    csv << k << ',' << fmt17(st.entry.rho) << ',' << fmt17(st.entry.mu) << ',' << fmt17(st.point.lambda) << ','
        << fmt17(st.point.energy) << ',' << st.certificate.morse_free << ',' << st.certificate.morse_constrained << ','
        << (st.point.warm_started ? "true" : "false") << ',' << (st.certificate.verdict ? "true" : "false") << '\n';
    stages.push_back(certificate_json(*pb, st.point, st.certificate));
    stages.back()["notes"] = st.point.notes;
    if (k > 0 && res.stages[k - 1].entry.mu == st.entry.mu && res.stages[k - 1].entry.rho <= st.entry.rho)
      max_increase = std::max(max_increase, st.point.energy - res.stages[k - 1].point.energy);
  }
  summary["completed"] = res.stages.size();
  summary["scheduled"] = c.schedule.size();
  summary["failed"] = res.failed;
  if (res.failed) summary["failure"] = res.failure;
  summary["max_level_increase"] = max_increase;
  write_text(dir / "continuation.csv", csv.str());
  write_text(dir / "continuation.json", summary.dump(1) + "\n");
  log << "stages " << res.stages.size() << "/" << c.schedule.size() << " max level increase " << fmt17(max_increase)
      << '\n';
  if (res.failed) {
    report_error(std::cerr, kExitPartial, "partial", res.failure, dir);
    return kExitPartial;
  }
  return kExitOk;
}

struct ConvergenceRow {
  double h = 0.0;
  double lambda = 0.0;
  double energy = 0.0;
  bool verdict = false;
};

struct OrderEstimate {
  double order = 0.0;
  bool determinate = false;
};

// Observed order from three consecutive values at h1 > h2 > h3.
inline OrderEstimate observed_order(double v1, double v2, double v3, double h1, double h2) {
  const double e1 = v1 - v2, e2 = v2 - v3;
  OrderEstimate o;
  if (e1 == 0.0 || e2 == 0.0 || (e1 > 0.0) != (e2 > 0.0) || std::fabs(e2) >= std::fabs(e1)) return o;
  o.order = std::log(std::fabs(e1) / std::fabs(e2)) / std::log(h1 / h2);
  o.determinate = std::isfinite(o.order);
  return o;
}

inline int cmd_convergence(const RunConfig& c, std::ostream& log = std::cout) {
  if (c.h_list.size() < 3) throw InputError("convergence needs at least three mesh sizes in mesh.h_list");
  std::vector<double> hs = c.h_list;
  std::sort(hs.begin(), hs.end(), std::greater<>());
  if (std::adjacent_find(hs.begin(), hs.end()) != hs.end()) throw InputError("mesh.h_list has repeated values");
  const auto dir = prepare_output_dir(c.output_dir);
  std::vector<ConvergenceRow> rows;
  std::string fail;
  try {
    AdaptiveSolve as = solve_adaptive(c, hs.front(), c.rho, c.mu);
    CriticalPoint prev = as.point;
    const double L = as.L;
    for (std::size_t k = 0; k < hs.size(); ++k) {
      Problem pb = k == 0 ? as.problem : make_problem(c, hs[k], L, c.rho, c.mu);
      CriticalPoint cp = k == 0 ? as.point : solve_warm(pb.model, prev, solve_options(c));
      const Certificate cert = verify_solution(model_for(pb.model, cp), cp.u, cp.lambda, c.cert);
      rows.push_back({hs[k], cp.lambda, cp.energy, cert.verdict});
      prev = std::move(cp);
    }
  } catch (const SolverError& e) {
    fail = e.what();
  }
  std::ostringstream csv;
  csv << "h,lambda,energy,order_lambda,verdict\n";
  nlohmann::json summary;
  std::vector<OrderEstimate> orders(rows.size());
  for (std::size_t k = 2; k < rows.size(); ++k)
    orders[k] = observed_order(rows[k - 2].lambda, rows[k - 1].lambda, rows[k].lambda, rows[k - 2].h, rows[k - 1].h);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    csv << fmt17(rows[k].h) << ',' << fmt17(rows[k].lambda) << ',' << fmt17(rows[k].energy) << ',';
    if (k >= 2) csv << (orders[k].determinate ? fmt17(orders[k].order) : std::string("indeterminate"));
    csv << ',' << (rows[k].verdict ? "true" : "false") << '\n';
  }
  write_text(dir / "convergence.csv", csv.str());
  summary["h"] = hs;
  summary["completed"] = rows.size();
  if (!fail.empty()) {
    summary["failure"] = fail;
    write_text(dir / "convergence.json", summary.dump(1) + "\n");
    report_error(std::cerr, kExitPartial, "partial", fail, dir);
    return kExitPartial;
  }
  const OrderEstimate last = orders.back();
  summary["order_lambda"] = last.determinate ? nlohmann::json(last.order) : nlohmann::json("indeterminate");
  const bool ok = last.determinate && last.order >= 1.8 && last.order <= 2.2;
  summary["order_in_range"] = ok;
  write_text(dir / "convergence.json", summary.dump(1) + "\n");
  log << "observed order of lambda: " << (last.determinate ? fmt17(last.order) : std::string("indeterminate")) << '\n';
  if (!last.determinate) {
    report_error(std::cerr, kExitPartial, "indeterminate", "observed order is indeterminate (non-monotone differences)",
                 dir);
    return kExitPartial;
  }
  return ok ? kExitOk : kExitFailed;
}

// Parses the config file and dispatches; all error kinds map to exit codes.
// error.json goes to the output directory whenever that directory exists.
inline int run_command(const std::string& command, const std::string& config_path,
                       const std::optional<std::string>& out_override, std::ostream& log = std::cout,
                       std::ostream& err = std::cerr) {
  std::optional<std::filesystem::path> dir;
  auto fail = [&](int code, const char* kind, const std::string& what) {
    std::error_code ec;
    const bool have = dir && std::filesystem::is_directory(*dir, ec);
    report_error(err, code, kind, what, have ? dir : std::nullopt);
    return code;
  };
  try {
    RunConfig c = parse_config(read_json(config_path));
    if (out_override) c.output_dir = *out_override;
    dir = std::filesystem::path(c.output_dir);
    if (command == "solve") return cmd_solve(c, log);
    if (command == "continue") return cmd_continue(c, log);
    if (command == "verify") return cmd_verify(c, log);
    if (command == "convergence") return cmd_convergence(c, log);
    throw InputError("unknown command '" + command + "'");
  } catch (const IoError& e) {
    dir.reset();
    return fail(kExitConfig, "io", e.what());
  } catch (const InputError& e) {
    return fail(kExitConfig, "config", e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(kExitConfig, "config", e.what());
  } catch (const SolverError& e) {
    return fail(kExitSolver, "solver", e.what());
  } catch (const std::exception& e) {
    return fail(kExitSolver, "internal", e.what());
  }
}

}  // namespace graph_nls
