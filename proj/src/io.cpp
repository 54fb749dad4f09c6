#include "bcpr/io.hpp"

#include <algorithm>
#include <array>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include <spdlog/spdlog.h>

#include "bcpr/linalg/matrix_market.hpp"

namespace bcpr {

namespace {

std::FILE* open_for_writing(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw linalg::IoError("cannot open '" + path + "' for writing");
  return f;
}

void close_checked(std::FILE* f, const std::string& path) {
  if (std::fclose(f) != 0) throw linalg::IoError("error while writing '" + path + "'");
}

const std::array<const char*, 9> kBlockNames = {"pipi", "pip", "pis", "ppi", "pp",
                                                "ps",   "spi", "sp",  "ss"};

}  // namespace

RockProps load_perm_ascii(const std::string& path, Index nx, Index ny, Index nz, double phi_floor,
                          double cr, double p0) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open '" + path + "'");
  const long n = static_cast<long>(nx) * ny * nz;
  std::vector<double> values;
  values.reserve(4 * n);
  std::string token;
  long pos = 0;
  while (in >> token) {
    ++pos;
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(token.c_str(), &end);
    if (end == token.c_str() || *end != '\0' || errno == ERANGE)
      throw IngestionError(path + ": token " + std::to_string(pos) + " ('" + token +
                           "') is not a number");
    values.push_back(v);
  }
  if (static_cast<long>(values.size()) != 4 * n)
    throw IngestionError(path + ": expected " + std::to_string(4 * n) + " values, found " +
                         std::to_string(values.size()));
  RockProps rock = RockProps::uniform(static_cast<Index>(n), 1.0, 1.0, cr, p0);
  long clamped = 0;
  for (long c = 0; c < n; ++c) {
    rock.perm[c] = Vec3(values[c], values[n + c], values[2 * n + c]);
    double phi = values[3 * n + c];
    if (phi < phi_floor) {
      phi = phi_floor;
      ++clamped;
    }
    rock.phi0[c] = phi;
  }
  if (clamped > 0) spdlog::info("{}: raised porosity of {} cells to {}", path, clamped, phi_floor);
  rock.validate();
  return rock;
}

void write_perm_ascii(const RockProps& rock, const std::string& path) {
  std::FILE* f = open_for_writing(path);
  for (int d = 0; d < 4; ++d) {
    for (std::size_t c = 0; c < rock.perm.size(); ++c)
      std::fprintf(f, "%.17g\n", d < 3 ? rock.perm[c][d] : rock.phi0[c]);
  }
  close_checked(f, path);
}

RockProps generate_lognormal_field(Index nx, Index ny, Index nz, const FieldSpec& spec, double cr,
                                   double p0) {
  const Index n = nx * ny * nz;
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> g(n);
  for (auto& v : g) v = normal(rng);
  auto id = [&](Index i, Index j, Index k) { return i + nx * (j + ny * k); };
  for (int pass = 0; pass < spec.smoothing_passes; ++pass) {
    std::vector<double> h(n);
    for (Index k = 0; k < nz; ++k)
      for (Index j = 0; j < ny; ++j)
        for (Index i = 0; i < nx; ++i) {
          double sum = 0.0;
          int cnt = 0;
          for (Index dj = -1; dj <= 1; ++dj)
            for (Index di = -1; di <= 1; ++di) {
              const Index ii = i + di, jj = j + dj;
              if (ii < 0 || jj < 0 || ii >= nx || jj >= ny) continue;
              sum += g[id(ii, jj, k)];
              ++cnt;
            }
          h[id(i, j, k)] = sum / cnt;
        }
    g.swap(h);
  }
  // Stretch to the requested contrast around the mean.
  const auto [mn, mx] = std::minmax_element(g.begin(), g.end());
  const double lo = *mn, span = std::max(*mx - *mn, 1e-300);
  RockProps rock = RockProps::uniform(n, 1.0, spec.phi_mean, cr, p0);
  for (Index c = 0; c < n; ++c) {
    const double t = (g[c] - lo) / span - 0.5;  // in [-0.5, 0.5]
    const double kx = std::pow(10.0, spec.mean_log10_k + spec.decades * t);
    rock.perm[c] = Vec3(kx, kx, kx / spec.anisotropy);
    rock.phi0[c] = std::clamp(spec.phi_mean * std::pow(10.0, 0.1 * spec.decades * t), 0.01, 0.5);
  }
  return rock;
}

void write_metrics_csv(const RunMetrics& m, const std::string& path) {
  std::FILE* f = open_for_writing(path);
  std::fprintf(f,
               "step,time_d,dt_d,newton,linear,t_p_s,t_s_s,t_t_s,cuts,first_linear,first_t_p_s,"
               "first_t_s_s,first_t_t_s,water_change_m3,water_injected_m3,cfl,rs\n");
  for (const auto& s : m.steps)
    std::fprintf(f, "%d,%.17g,%.17g,%d,%d,%.6g,%.6g,%.6g,%d,%d,%.6g,%.6g,%.6g,%.17g,%.17g,%.6g,%.6g\n",
                 s.step, s.time, s.dt, s.newton, s.linear, s.t_p, s.t_s, s.t_t, s.cuts,
                 s.first_linear, s.first_t_p, s.first_t_s, s.first_t_t, s.water_change,
                 s.water_injected, s.cfl, s.rs);
  const double t_end = m.steps.empty() ? 0.0 : m.steps.back().time;
  std::fprintf(f, "total,%.17g,,%ld,%ld,%.6g,%.6g,%.6g,,%.6g,%.6g,%.6g,%.6g,,,,%.6g\n", t_end,
               m.total_newton, m.total_linear, m.total_t_p, m.total_t_s, m.total_t_t,
               m.mean_first_linear, m.mean_first_t_p, m.mean_first_t_s, m.mean_first_t_t, m.rs);
  close_checked(f, path);
}

void write_fields_vtk(const HexMesh& mesh, const State& s, const std::string& path) {
  std::FILE* f = open_for_writing(path);
  std::fprintf(f, "# vtk DataFile Version 3.0\nreservoir state t = %.9g d\nASCII\n", s.time);
  std::fprintf(f, "DATASET UNSTRUCTURED_GRID\nPOINTS %d double\n", mesh.num_nodes());
  for (const auto& x : mesh.nodes) std::fprintf(f, "%.17g %.17g %.17g\n", x.x(), x.y(), x.z());
  std::fprintf(f, "CELLS %d %d\n", mesh.num_cells(), 9 * mesh.num_cells());
  // VTK_HEXAHEDRON walks each quad cyclically.
  constexpr std::array<int, 8> order = {0, 1, 3, 2, 4, 5, 7, 6};
  for (const auto& c : mesh.cells) {
    std::fprintf(f, "8");
    for (int a : order) std::fprintf(f, " %d", c[a]);
    std::fprintf(f, "\n");
  }
  std::fprintf(f, "CELL_TYPES %d\n", mesh.num_cells());
  for (Index c = 0; c < mesh.num_cells(); ++c) std::fprintf(f, "12\n");
  std::fprintf(f, "CELL_DATA %d\n", mesh.num_cells());
  std::fprintf(f, "SCALARS pressure_kPa double 1\nLOOKUP_TABLE default\n");
  for (double p : s.p_elem) std::fprintf(f, "%.17g\n", p);
  std::fprintf(f, "SCALARS Sw double 1\nLOOKUP_TABLE default\n");
  for (double v : s.Sw) std::fprintf(f, "%.17g\n", v);
  close_checked(f, path);
}

void dump_jacobian_mm(const BlockJacobian& J, const std::string& prefix) {
  const std::array<const SparseMatrix*, 9> blocks = {&J.pipi, &J.pip, &J.pis, &J.ppi, &J.pp,
                                                     &J.ps,   &J.spi, &J.sp,  &J.ss};
  for (std::size_t b = 0; b < blocks.size(); ++b)
    linalg::write_matrix_market(*blocks[b], prefix + "_" + kBlockNames[b] + ".mtx");
  const std::string side = prefix + "_blocks.txt";
  std::FILE* f = open_for_writing(side);
  std::fprintf(f, "n_faces %d\nn_cells %d\nn_wells %d\n", J.dofs.nf, J.dofs.ne, J.dofs.nw);
  close_checked(f, side);
}

BlockJacobian load_jacobian_mm(const std::string& prefix) {
  BlockJacobian J;
  const std::string side = prefix + "_blocks.txt";
  std::ifstream in(side);
  if (!in) throw linalg::IoError("cannot open '" + side + "'");
  std::string key;
  long v = 0;
  while (in >> key >> v) {
    if (key == "n_faces") J.dofs.nf = static_cast<Index>(v);
    else if (key == "n_cells") J.dofs.ne = static_cast<Index>(v);
    else if (key == "n_wells") J.dofs.nw = static_cast<Index>(v);
    else throw linalg::IoError(side + ": unknown key '" + key + "'");
  }
  const std::array<SparseMatrix*, 9> blocks = {&J.pipi, &J.pip, &J.pis, &J.ppi, &J.pp,
                                               &J.ps,   &J.spi, &J.sp,  &J.ss};
  for (std::size_t b = 0; b < blocks.size(); ++b)
    *blocks[b] = linalg::read_matrix_market(prefix + "_" + kBlockNames[b] + ".mtx");
  const Index np = J.dofs.n_pressure();
  if (J.pipi.rows() != J.dofs.nf || J.pp.rows() != np || J.ss.rows() != J.dofs.ne ||
      J.pip.cols() != np)
    throw linalg::IoError(prefix + ": block sizes disagree with the sidecar");
  return J;
}

}  // namespace bcpr
