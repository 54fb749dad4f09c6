// Command-line driver: runs five-spot simulations, dumps Jacobians and
// benchmarks preconditioner patterns on a dumped system.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/cfg/env.h>
#include <spdlog/spdlog.h>

#include "bcpr/config.hpp"
#include "bcpr/io.hpp"
#include "bcpr/linalg/krylov.hpp"
#include "bcpr/linalg/matrix_market.hpp"
#include "bcpr/simulator.hpp"

namespace fs = std::filesystem;
using namespace bcpr;

namespace {

struct Common {
  std::string config;
  std::string output;
  std::string pattern;
  std::string gravity;  // "", "on" or "off"
  bool deterministic = false;
  int threads = 1;
};

RunConfig load(const Common& c) {
  RunConfig cfg = parse_config(c.config);
  if (!c.output.empty()) cfg.output_dir = c.output;
  if (!c.pattern.empty()) cfg.pattern = c.pattern;
  if (c.gravity == "on") cfg.gravity = true;
  if (c.gravity == "off") cfg.gravity = false;
  return cfg;
}

int effective_threads(const Common& c) { return c.deterministic ? 1 : std::max(1, c.threads); }

void echo_config(const Common& c, const RunConfig& cfg) {
  fs::create_directories(cfg.output_dir);
  const fs::path dst = fs::path(cfg.output_dir) / "config.echo";
  std::ifstream in(c.config);
  std::ofstream out(dst);
  out << in.rdbuf();
  out << "\n# command-line overrides\n";
  out << "output.dir = " << cfg.output_dir << "\n";
  out << "solver.pattern = " << cfg.pattern << "\n";
  out << "physics.gravity = " << (cfg.gravity ? "true" : "false") << "\n";
  if (!out) throw linalg::IoError("cannot write '" + dst.string() + "'");
}

int cmd_run(const Common& c, int vtk_every) {
  const RunConfig cfg = load(c);
  echo_config(c, cfg);
  Scenario sc = make_scenario(cfg, effective_threads(c));
  const fs::path dir = cfg.output_dir;
  spdlog::info("{} cells, {} faces, {} wells, pattern {}", sc.model.mesh.num_cells(),
               sc.model.mesh.num_faces(), sc.model.wells.size(), sc.newton.bcpr.pattern.name());
  write_fields_vtk(sc.model.mesh, initial_state(sc), (dir / "fields_0000.vtk").string());
  StepObserver obs;
  if (vtk_every > 0) {
    obs = [&](const StepMetrics& m, const State& s) {
      if (m.step % vtk_every != 0) return;
      char name[32];
      std::snprintf(name, sizeof name, "fields_%04d.vtk", m.step);
      write_fields_vtk(sc.model.mesh, s, (dir / name).string());
    };
  }
  const RunResult r = timestep_driver(sc, obs);
  write_fields_vtk(sc.model.mesh, r.state, (dir / "fields_final.vtk").string());
  write_metrics_csv(r.metrics, (dir / "metrics.csv").string());
  const auto& m = r.metrics;
  std::printf("steps %zu  Newton %ld  GMRES %ld  systems %ld  mean GMRES/system %.2f  R_S %.3f\n",
              m.steps.size(), m.total_newton, m.total_linear, m.systems,
              m.systems > 0 ? double(m.total_linear) / m.systems : 0.0, m.rs);
  std::printf("t_p %.3f s  t_s %.3f s  t_t %.3f s\n", m.total_t_p, m.total_t_s, m.total_t_t);
  return 0;
}

int cmd_dump(const Common& c) {
  const RunConfig cfg = load(c);
  echo_config(c, cfg);
  const Scenario sc = make_scenario(cfg, effective_threads(c));
  const State s0 = initial_state(sc);
  const double dt = std::min(cfg.schedule.dt_init, cfg.schedule.t_end);
  const BlockJacobian J = assemble_jacobian(sc.model, s0, s0, dt);
  const Residual R = assemble_residual(sc.model, s0, s0, dt);
  const std::string prefix = (fs::path(cfg.output_dir) / "jacobian").string();
  dump_jacobian_mm(J, prefix);
  const Vector rhs = -R.flat();
  SparseMatrix b(rhs.size(), 1);
  std::vector<Eigen::Triplet<double>> t;
  for (Index i = 0; i < rhs.size(); ++i)
    if (rhs[i] != 0.0) t.emplace_back(i, 0, rhs[i]);
  b.setFromTriplets(t.begin(), t.end());
  linalg::write_matrix_market(b, prefix + "_rhs.mtx");
  std::printf("wrote %s_*.mtx (n_f %d, n_E %d, n_w %d)\n", prefix.c_str(), J.dofs.nf, J.dofs.ne,
              J.dofs.nw);
  return 0;
}

int cmd_bench(const Common& c, const std::string& prefix, std::vector<std::string> patterns) {
  const RunConfig cfg = load(c);
  const Scenario sc = make_scenario(cfg, effective_threads(c));
  const BlockJacobian J = load_jacobian_mm(prefix);
  if (J.dofs.nf != sc.model.mesh.num_faces() || J.dofs.ne != sc.model.mesh.num_cells())
    throw linalg::IoError(prefix + ": system does not belong to the configured mesh");
  Vector b;
  if (fs::exists(prefix + "_rhs.mtx")) {
    b = Eigen::MatrixXd(linalg::read_matrix_market(prefix + "_rhs.mtx")).col(0);
  } else {
    b = J.full() * Vector::Ones(J.dofs.total());
  }
  if (patterns.empty()) patterns = {"Orig", "A", "B", "C", "D", "E", "F"};
  std::printf("%-14s %6s %8s %10s %10s %10s\n", "pattern", "N_l", "R_S", "t_p[s]", "t_s[s]",
              "rel.res");
  for (const auto& name : patterns) {
    BcprOptions opt = sc.newton.bcpr;
    opt.pattern = PatternSpec::parse(name);
    BcprPreconditioner M(sc.model.mesh, opt);
    using Clock = std::chrono::steady_clock;
    auto t0 = Clock::now();
    M.build(J);
    const double tp = std::chrono::duration<double>(Clock::now() - t0).count();
    t0 = Clock::now();
    const SparseMatrix& A = M.jacobian();
    const auto sol = linalg::gmres<double>([&A](const Vector& x) -> Vector { return A * x; }, b,
                                           [&M](const Vector& x) { return M(x); },
                                           sc.newton.linear);
    const double ts = std::chrono::duration<double>(Clock::now() - t0).count();
    std::printf("%-14s %6d %8.3f %10.4f %10.4f %10.2e%s\n", name.c_str(), sol.iterations,
                M.report().rs, tp, ts, sol.residual_history.back(),
                sol.converged ? "" : "  (not converged)");
  }
  return 0;
}

int cmd_field(Index nx, Index ny, Index nz, const FieldSpec& spec, const std::string& path) {
  const RockProps rock = generate_lognormal_field(nx, ny, nz, spec);
  write_perm_ascii(rock, path);
  std::printf("wrote %s (%d cells)\n", path.c_str(), nx * ny * nz);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::cfg::load_env_levels();

  CLI::App app{"Fully implicit two-phase reservoir simulator with BCPR preconditioning"};
  app.require_subcommand(1);
  Common c;

  auto add_common = [&c](CLI::App* sub, bool need_config) {
    auto* opt = sub->add_option("-c,--config", c.config, "configuration file");
    if (need_config) opt->required()->check(CLI::ExistingFile);
    sub->add_option("-o,--output", c.output, "output directory (overrides output.dir)");
    sub->add_option("-p,--pattern", c.pattern,
                    "decoupling pattern: Orig, A-F, full or dyn:<n_ent>:<n_add>");
    sub->add_option("--gravity", c.gravity, "override physics.gravity")
        ->check(CLI::IsMember({"on", "off"}));
    sub->add_flag("--deterministic", c.deterministic, "single-threaded, reproducible run");
    sub->add_option("-t,--threads", c.threads, "threads for the factor construction")
        ->check(CLI::PositiveNumber);
  };

  int vtk_every = 0;
  auto* run = app.add_subcommand("run", "run a simulation and write metrics and fields");
  add_common(run, true);
  run->add_option("--vtk-every", vtk_every, "write fields every N steps (0: first and last only)");

  auto* dump = app.add_subcommand("dump-matrices", "write the first Jacobian as Matrix Market");
  add_common(dump, true);

  std::string prefix;
  std::vector<std::string> patterns;
  auto* bench = app.add_subcommand("precond-bench", "solve a dumped system with several patterns");
  add_common(bench, true);
  bench->add_option("-m,--matrices", prefix, "prefix given to dump-matrices")->required();
  bench->add_option("--patterns", patterns, "patterns to compare (default: Orig and A-F)");

  Index nx = 0, ny = 0, nz = 0;
  FieldSpec field;
  std::string field_path;
  auto* gen = app.add_subcommand("generate-field", "write a synthetic log-normal property file");
  gen->add_option("--nx", nx)->required()->check(CLI::PositiveNumber);
  gen->add_option("--ny", ny)->required()->check(CLI::PositiveNumber);
  gen->add_option("--nz", nz)->required()->check(CLI::PositiveNumber);
  gen->add_option("--decades", field.decades, "log10 of the kx contrast");
  gen->add_option("--anisotropy", field.anisotropy, "kx / kz");
  gen->add_option("--mean-log10-k", field.mean_log10_k, "log10 of the mean kx in m^2");
  gen->add_option("--seed", field.seed);
  gen->add_option("-o,--output", field_path, "output file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(c, vtk_every);
    if (*dump) return cmd_dump(c);
    if (*bench) return cmd_bench(c, prefix, patterns);
    if (*gen) return cmd_field(nx, ny, nz, field, field_path);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
