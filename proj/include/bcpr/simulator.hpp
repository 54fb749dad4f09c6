#pragma once

#include <array>
#include <functional>
#include <stdexcept>
#include <vector>

#include "bcpr/bcpr_preconditioner.hpp"
#include "bcpr/discretization.hpp"
#include "bcpr/linalg/krylov.hpp"

namespace bcpr {

class SimulationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct NewtonSettings {
  double tol_abs = 1e-6;
  double tol_rel = 1e-6;
  int max_iter = 10;
  double ds_max = 0.2;
  linalg::KrylovOptions linear{1e-6, 300, 0};
  BcprOptions bcpr;
};

struct Schedule {
  double t_end = 100.0;  // d
  double dt_init = 0.5;
  double dt_max = 2.0;
  double growth = 1.2;
  int max_steps = 0;  // 0: run to t_end
  int max_cuts = 10;
};

struct Scenario {
  Model model;
  Schedule schedule;
  NewtonSettings newton;
  double p_init = 500.0;  // kPa at the top of the reservoir
  double sw_init = 0.0;
};

/// One linearization inside a Newton loop.
struct LinearSolveMetrics {
  int iterations = 0;
  bool converged = false;
  double t_p = 0.0;  // s, preconditioner setup
  double t_s = 0.0;  // s, Krylov iterations
  std::vector<double> residual_history;
};

struct NewtonResult {
  State state;
  bool converged = false;
  int iterations = 0;
  std::vector<LinearSolveMetrics> linear;
  std::vector<std::array<double, 3>> residual_norms;  // one entry per assembled residual
};

/// Max of the three part norms below tol_abs, or all relative drops below tol_rel.
/// A zero reference part counts as satisfied.
bool convergence_check(const Residual& R, const Residual& R0, double tol_abs, double tol_rel);

/// Limits every saturation change to ds_max in magnitude and keeps the updated
/// saturation inside [Swr, 1 - Sor]. Pressure components are untouched.
void appleyard_chop(Vector& dx, const State& s, const DofLayout& dofs, const FluidProps& fluid,
                    double ds_max);

NewtonResult newton_solve(const Model& model, const State& prev, const State& guess, double dt,
                          const NewtonSettings& settings, BcprPreconditioner& precond);

/// Face pressures satisfying the face equations for the given cell pressures
/// and saturations.
void initialize_face_pressures(const Model& model, State& s);

/// Hydrostatic (oil gradient when gravity is on) initial state with wells
/// started at their targets or at the mean pressure of their cells.
State initial_state(const Scenario& sc);

struct StepMetrics {
  int step = 0;
  double time = 0.0;
  double dt = 0.0;
  int newton = 0;
  int linear = 0;
  double t_p = 0.0;
  double t_s = 0.0;
  double t_t = 0.0;
  int cuts = 0;
  int first_linear = 0;
  double first_t_p = 0.0;
  double first_t_s = 0.0;
  double first_t_t = 0.0;
  double water_change = 0.0;    // m^3
  double water_injected = 0.0;  // m^3, net well inflow over the step
  double cfl = 0.0;
  double rs = 0.0;
};

struct RunMetrics {
  std::vector<StepMetrics> steps;
  long total_newton = 0;
  long total_linear = 0;
  long systems = 0;
  double total_t_p = 0.0;
  double total_t_s = 0.0;
  double total_t_t = 0.0;
  double mean_first_linear = 0.0;
  double mean_first_t_p = 0.0;
  double mean_first_t_s = 0.0;
  double mean_first_t_t = 0.0;
  double rs = 0.0;
  BcprReport report;

  void finalize();
};

struct RunResult {
  State state;
  RunMetrics metrics;
};

using StepObserver = std::function<void(const StepMetrics&, const State&)>;

/// Fixed-schedule fully implicit run with step cutting on Newton failure.
RunResult timestep_driver(const Scenario& sc, const StepObserver& observer = {});

/// Five-spot: rate injector in the central column, BHP producers in the four
/// corner columns, all perforating every layer.
Scenario build_five_spot(Index nx, Index ny, Index nz, const Vec3& cell_size, double rate,
                         double bhp, bool gravity);

/// Largest dt * (outgoing total flux) / (phi Omega) over the cells.
double cfl_report(const Model& model, const State& s, double dt);

}  // namespace bcpr
