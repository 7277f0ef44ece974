#pragma once

// Full pipeline for one (rho, mu) pair and warm-started continuation along a
// schedule of such pairs.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "certificate.hpp"
#include "endpoints.hpp"
#include "mountain_pass.hpp"
#include "newton.hpp"

namespace graph_nls {

struct SolveOptions {
  MountainPassOptions mp;
  NewtonOptions newton;
  EndpointOptions endpoints;
  std::size_t path_nodes = 24;
  int robin_sweeps = 8;  // outer updates of the Robin coefficient sqrt(lambda)
};

struct CriticalPoint {
  GraphFunction u;
  double lambda = 0.0;
  double rho = 1.0, mu = 1.0, p = 8.0;
  double robin = 0.0;
  double energy = 0.0;
  double mp_energy = 0.0;  // path maximum before Newton
  int mp_iterations = 0;
  int newton_steps = 0;
  bool newton_at_floor = false;
  bool warm_started = false;
  std::vector<double> mp_history;
  std::vector<double> newton_history;
  std::vector<std::string> notes;
};

namespace detail {

inline double initial_robin(const EnergyModel& m) {
  return m.mesh().far_boundary() == FarBoundary::Robin ? 1.0 : 0.0;
}

// Newton with the far-end Robin coefficient tied to sqrt(lambda).
inline CriticalPoint newton_stage(const EnergyModel& m0, const Vec& u0, double lambda0, const SolveOptions& opt,
                                  CriticalPoint cp) {
  EnergyModel m = m0;
  NewtonResult nr = newton_refine(m, u0, lambda0, opt.newton);
  cp.newton_steps = nr.steps;
  if (m.mesh().far_boundary() == FarBoundary::Robin) {
    for (int k = 0; k < opt.robin_sweeps; ++k) {
      if (!(nr.lambda > 0.0)) throw SolverError("Robin far end needs lambda > 0");
      const double c = std::sqrt(nr.lambda);
      if (std::fabs(c - m.robin()) <= 1e-13 * c) break;
      m = m.with_robin(c);
      nr = newton_refine(m, nr.u, nr.lambda, opt.newton);
      cp.newton_steps += nr.steps;
    }
  }
  cp.robin = m.robin();
  cp.u = GraphFunction(m.mesh_ptr(), nr.u);
  cp.lambda = nr.lambda;
  cp.energy = energy(m, nr.u);
  cp.newton_at_floor = nr.at_roundoff_floor;
  cp.newton_history = nr.history;
  cp.rho = m.rho();
  cp.mu = m.mu();
  cp.p = m.p();
  return cp;
}

}  // namespace detail

// Model used for certification of a computed point (carries its Robin coefficient).
inline EnergyModel model_for(const EnergyModel& m, const CriticalPoint& cp) { return m.with_robin(cp.robin); }

// Endpoints, mountain-pass deformation and Newton polish.
inline CriticalPoint solve_from_scratch(const EnergyModel& m_in, const SolveOptions& opt = {}) {
  const EnergyModel m = m_in.with_robin(detail::initial_robin(m_in));
  const Endpoints ep = make_endpoints(m, opt.endpoints);
  const Path path = init_path(m.ops(), ep.w1, ep.w2, opt.path_nodes, m.mu());
  const MountainPassResult mp = mountain_pass_deform(m, path, opt.mp);
  if (!mp.converged)
    throw SolverError("mountain pass did not reach tol_mp in " + std::to_string(mp.iterations) + " iterations (|pg| = " +
                      std::to_string(mp.pg_norm) + ")");
  CriticalPoint cp;
  cp.mp_energy = mp.energy;
  cp.mp_iterations = mp.iterations;
  cp.mp_history = mp.history;
  cp.notes = ep.notes;
  return detail::newton_stage(m, mp.u, mp.lambda_hat, opt, std::move(cp));
}

// Newton from a previous solution projected to the new mass, lambda kept.
inline CriticalPoint solve_warm(const EnergyModel& m_in, const CriticalPoint& prev, const SolveOptions& opt = {}) {
  const EnergyModel m = m_in.with_robin(prev.robin > 0.0 ? prev.robin : detail::initial_robin(m_in));
  const GraphFunction u0 =
      &prev.u.mesh() == &m.mesh() ? prev.u : prev.u.transfer(m.mesh_ptr());
  const Vec start = project_to_mass_sphere(m.ops(), u0.values(), m.mu());
  CriticalPoint cp;
  cp.warm_started = true;
  return detail::newton_stage(m, start, prev.lambda, opt, std::move(cp));
}

struct ScheduleEntry {
  double rho = 1.0;
  double mu = 1.0;
};

struct StageResult {
  ScheduleEntry entry;
  CriticalPoint point;
  Certificate certificate;
};

struct ContinuationResult {
  std::vector<StageResult> stages;
  bool failed = false;
  std::size_t failed_index = 0;
  std::string failure;
};

// First entry from scratch (or from `first` when given), later entries warm
// started; a warm start that fails or does not certify falls back to a fresh
// mountain pass. Stops at the first entry that cannot be certified.
inline ContinuationResult continuation_run(const EnergyModel& m_template, const std::vector<ScheduleEntry>& schedule,
                                           const SolveOptions& opt = {}, const CertificateTolerances& tol = {},
                                           const std::optional<CriticalPoint>& first = std::nullopt) {
  if (schedule.empty()) throw InputError("continuation schedule is empty");
  ContinuationResult out;
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    const auto& se = schedule[k];
    StageResult st;
    st.entry = se;
    const EnergyModel m = m_template.with_rho(se.rho).with_mu(se.mu);
    auto certify = [&](const CriticalPoint& cp) { return verify_solution(model_for(m, cp), cp.u, cp.lambda, tol); };
    std::string err;
    bool done = false;
    if (k == 0 && first) {
      st.point = *first;
      st.certificate = certify(st.point);
      done = st.certificate.verdict;
      if (!done) err = "supplied first point not certified";
    } else if (k > 0) {
      try {
        st.point = solve_warm(m, out.stages.back().point, opt);
        st.certificate = certify(st.point);
        done = st.certificate.verdict;
        if (!done) err = "warm start not certified";
      } catch (const SolverError& e) {
        err = e.what();
      }
    }
    if (!done) {
      try {
        st.point = solve_from_scratch(m, opt);
        if (!err.empty()) st.point.notes.push_back("warm start abandoned: " + err);
        st.certificate = certify(st.point);
        done = st.certificate.verdict;
        if (!done) {
          err = "not certified:";
          for (const auto& f : st.certificate.failed) err += " " + f;
        }
      } catch (const SolverError& e) {
        err = e.what();
      } catch (const TruncationError& e) {
        err = e.what();
      }
    }
    if (!done) {
      out.failed = true;
      out.failed_index = k;
      out.failure = "stage " + std::to_string(k) + " (rho=" + std::to_string(se.rho) + ", mu=" + std::to_string(se.mu) +
                    "): " + err;
      return out;
    }
    out.stages.push_back(std::move(st));
  }
  return out;
}

}  // namespace graph_nls
