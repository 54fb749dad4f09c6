#include "bcpr/simulator.hpp"

#include <algorithm>
#include <chrono>
#include <sstream>

#include <Eigen/SparseLU>
#include <spdlog/spdlog.h>

namespace bcpr {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

bool convergence_check(const Residual& R, const Residual& R0, double tol_abs, double tol_rel) {
  const auto n = R.norms();
  const auto n0 = R0.norms();
  if (*std::max_element(n.begin(), n.end()) < tol_abs) return true;
  for (int k = 0; k < 3; ++k)
    if (n0[k] > 0.0 && !(n[k] / n0[k] < tol_rel)) return false;
  return true;
}

void appleyard_chop(Vector& dx, const State& s, const DofLayout& dofs, const FluidProps& fluid,
                    double ds_max) {
  const double lo = fluid.Swr, hi = 1.0 - fluid.Sor;
  for (Index c = 0; c < dofs.ne; ++c) {
    double& ds = dx[dofs.off_s() + c];
    ds = std::clamp(ds, -ds_max, ds_max);
    if (s.Sw[c] + ds > hi) ds = hi - s.Sw[c];
    if (s.Sw[c] + ds < lo) ds = lo - s.Sw[c];
  }
}

NewtonResult newton_solve(const Model& model, const State& prev, const State& guess, double dt,
                          const NewtonSettings& settings, BcprPreconditioner& precond) {
  const DofLayout dofs = model.layout();
  NewtonResult out;
  out.state = guess;
  Residual R0;
  try {
    for (int k = 0;; ++k) {
      const Residual R = assemble_residual(model, out.state, prev, dt);
      if (!R.flat().allFinite()) {
        spdlog::debug("non-finite residual at Newton iteration {}", k);
        return out;
      }
      out.residual_norms.push_back(R.norms());
      {
        const auto n = out.residual_norms.back();
        spdlog::debug("Newton {:2d}: |R_pi| {:.3e} |R_p| {:.3e} |R_s| {:.3e}", k, n[0], n[1], n[2]);
      }
      if (k == 0) R0 = R;
      if (convergence_check(R, R0, settings.tol_abs, settings.tol_rel)) {
        out.converged = true;
        return out;
      }
      if (k == settings.max_iter) return out;

      LinearSolveMetrics lm;
      auto t0 = Clock::now();
      const BlockJacobian J = assemble_jacobian(model, out.state, prev, dt);
      precond.build(J);
      lm.t_p = seconds_since(t0);
      t0 = Clock::now();
      const SparseMatrix& A = precond.jacobian();
      const auto sol = linalg::gmres<double>([&A](const Vector& x) -> Vector { return A * x; },
                                             Vector(-R.flat()),
                                             [&precond](const Vector& x) { return precond(x); },
                                             settings.linear);
      lm.t_s = seconds_since(t0);
      lm.iterations = sol.iterations;
      lm.converged = sol.converged;
      lm.residual_history = sol.residual_history;
      out.linear.push_back(lm);
      out.iterations = k + 1;
      if (!sol.converged) {
        spdlog::debug("GMRES stopped after {} iterations at relative residual {:.3e}",
                      sol.iterations, sol.residual_history.back());
        return out;
      }
      Vector dx = sol.x;
      appleyard_chop(dx, out.state, dofs, model.fluid, settings.ds_max);
      Vector x = pack_state(out.state) + dx;
      unpack_state(x, dofs, out.state);
    }
  } catch (const ConstitutiveError& e) {
    spdlog::debug("Newton iterate rejected: {}", e.what());
  } catch (const linalg::NumericError& e) {
    spdlog::debug("Newton iterate rejected: {}", e.what());
  }
  return out;
}

void initialize_face_pressures(const Model& model, State& s) {
  const DofLayout dofs = model.layout();
  std::fill(s.p_face.begin(), s.p_face.end(), 0.0);
  const Residual R = assemble_residual(model, s, s, 1.0);
  const BlockJacobian J = assemble_jacobian(model, s, s, 1.0);
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(Eigen::SparseMatrix<double>(J.pipi));
  if (lu.info() != Eigen::Success) throw SimulationError("face pressure system is singular");
  const Vector pi = lu.solve(Vector(-R.R_pi));
  s.p_face.assign(pi.data(), pi.data() + dofs.nf);
}

State initial_state(const Scenario& sc) {
  const Model& m = sc.model;
  State s = make_state(m.layout());
  double z_top = std::numeric_limits<double>::infinity();
  for (const auto& x : m.mesh.nodes) z_top = std::min(z_top, x.z());
  for (Index c = 0; c < m.mesh.num_cells(); ++c) {
    s.p_elem[c] = sc.p_init + m.gamma(Phase::Oil) * (m.mesh.cell_depth(c) - z_top);
    s.Sw[c] = sc.sw_init;
  }
  for (std::size_t w = 0; w < m.wells.size(); ++w) {
    const Well& well = m.wells[w];
    if (well.control == WellControl::Bhp) {
      s.p_bh[w] = well.target;
    } else {
      double sum = 0.0;
      for (Index c : well.cells) sum += s.p_elem[c];
      s.p_bh[w] = sum / static_cast<double>(well.cells.size());
    }
  }
  initialize_face_pressures(m, s);
  return s;
}

void RunMetrics::finalize() {
  total_newton = total_linear = 0;
  total_t_p = total_t_s = total_t_t = 0.0;
  mean_first_linear = mean_first_t_p = mean_first_t_s = mean_first_t_t = 0.0;
  for (const auto& s : steps) {
    total_newton += s.newton;
    total_linear += s.linear;
    total_t_p += s.t_p;
    total_t_s += s.t_s;
    total_t_t += s.t_t;
    mean_first_linear += s.first_linear;
    mean_first_t_p += s.first_t_p;
    mean_first_t_s += s.first_t_s;
    mean_first_t_t += s.first_t_t;
  }
  if (!steps.empty()) {
    const double n = static_cast<double>(steps.size());
    mean_first_linear /= n;
    mean_first_t_p /= n;
    mean_first_t_s /= n;
    mean_first_t_t /= n;
  }
}

RunResult timestep_driver(const Scenario& sc, const StepObserver& observer) {
  const Schedule& sch = sc.schedule;
  if (!(sch.t_end > 0.0) || !(sch.dt_init > 0.0) || sch.dt_init > sch.dt_max)
    throw SimulationError("schedule needs t_end > 0 and 0 < dt_init <= dt_max");
  const Model& model = sc.model;
  RunResult out;
  out.state = initial_state(sc);
  BcprPreconditioner precond(model.mesh, sc.newton.bcpr);

  double t = 0.0;
  double dt = sch.dt_init;
  int step = 0;
  while (t < sch.t_end * (1.0 - 1e-12) && (sch.max_steps <= 0 || step < sch.max_steps)) {
    StepMetrics m;
    m.step = ++step;
    double dt_try = std::min(dt, sch.t_end - t);
    bool first = true;
    NewtonResult nr;
    for (;;) {
      const auto t0 = Clock::now();
      nr = newton_solve(model, out.state, out.state, dt_try, sc.newton, precond);
      const double elapsed = seconds_since(t0);
      m.t_t += elapsed;
      m.newton += nr.iterations;
      for (const auto& lm : nr.linear) {
        m.linear += lm.iterations;
        m.t_p += lm.t_p;
        m.t_s += lm.t_s;
        ++out.metrics.systems;
        if (first) {
          m.first_linear = lm.iterations;
          m.first_t_p = lm.t_p;
          m.first_t_s = lm.t_s;
          m.first_t_t = lm.t_p + lm.t_s;
          first = false;
        }
      }
      if (nr.converged) break;
      if (++m.cuts > sch.max_cuts) {
        std::ostringstream msg;
        msg << "time step " << step << " at t = " << t << " d failed after " << sch.max_cuts
            << " cuts";
        throw SimulationError(msg.str());
      }
      spdlog::info("step {}: Newton failed with dt = {:.4g} d, halving", step, dt_try);
      dt_try *= 0.5;
    }
    m.dt = dt_try;
    m.water_change = water_in_place(model, nr.state) - water_in_place(model, out.state);
    m.water_injected = dt_try * net_water_inflow(model, nr.state);
    m.cfl = cfl_report(model, nr.state, dt_try);
    m.rs = precond.report().rs;
    t += dt_try;
    m.time = t;
    out.state = std::move(nr.state);
    out.state.time = t;
    dt = std::min(sch.growth * dt_try, sch.dt_max);
    spdlog::info("step {:4d} t = {:9.4f} d dt = {:7.4f} d Newton {:2d} GMRES {:4d} cuts {}",
                 m.step, m.time, m.dt, m.newton, m.linear, m.cuts);
    out.metrics.steps.push_back(m);
    if (observer) observer(m, out.state);
  }
  out.metrics.report = precond.report();
  out.metrics.rs = out.metrics.report.rs;
  out.metrics.finalize();
  return out;
}

Scenario build_five_spot(Index nx, Index ny, Index nz, const Vec3& cell_size, double rate,
                         double bhp, bool gravity) {
  Scenario sc;
  Model& m = sc.model;
  m.mesh = build_cartesian(nx, ny, nz, cell_size.x(), cell_size.y(), cell_size.z());
  m.rock = RockProps::uniform(m.mesh.num_cells(), 1e-12, 0.25, 5e-7, sc.p_init);
  m.gravity = gravity;
  auto column = [&](Index i, Index j) {
    std::vector<Index> cells;
    for (Index k = 0; k < nz; ++k) cells.push_back(m.mesh.cell_index(i, j, k));
    return cells;
  };
  m.wells.push_back(make_well(m.mesh, m.rock, "INJ", column(nx / 2, ny / 2), 0.1,
                              WellControl::Rate, rate, true));
  const std::array<std::array<Index, 2>, 4> corners = {
      {{0, 0}, {nx - 1, 0}, {0, ny - 1}, {nx - 1, ny - 1}}};
  int n = 1;
  for (const auto& [i, j] : corners)
    m.wells.push_back(make_well(m.mesh, m.rock, "PROD" + std::to_string(n++), column(i, j), 0.1,
                                WellControl::Bhp, bhp, false));
  m.prepare();
  return sc;
}

double cfl_report(const Model& model, const State& s, double dt) {
  const HexMesh& mesh = model.mesh;
  std::vector<double> out(mesh.num_cells(), 0.0);
  for (Index f = 0; f < mesh.num_faces(); ++f) {
    const auto& fc = mesh.face_cells[f];
    if (fc[1] == kNoCell) continue;
    double q = 0.0;
    for (Phase ph : kPhases) q += continuous_flux(model, s, f, ph);
    if (q > 0.0)
      out[fc[0]] += q;
    else
      out[fc[1]] -= q;
  }
  for (Index w = 0; w < static_cast<Index>(model.wells.size()); ++w)
    for (std::size_t k = 0; k < model.wells[w].cells.size(); ++k) {
      double q = 0.0;
      for (Phase ph : kPhases) q += perforation_inflow(model, s, w, k, ph);
      if (q < 0.0) out[model.wells[w].cells[k]] -= q;
    }
  double cfl = 0.0;
  for (Index c = 0; c < mesh.num_cells(); ++c) {
    const double pv = mesh.cell_volume[c] * porosity(model.rock, c, s.p_elem[c]).value;
    cfl = std::max(cfl, dt * out[c] / pv);
  }
  return cfl;
}

}  // namespace bcpr
