#pragma once

#include <stdexcept>
#include <string>

#include "bcpr/discretization.hpp"
#include "bcpr/physics.hpp"
#include "bcpr/simulator.hpp"

namespace bcpr {

class IngestionError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Reads 4*n whitespace-separated values: the kx block, then ky, kz and phi,
/// each in x-fastest cell order. Porosity below `phi_floor` is raised to it.
RockProps load_perm_ascii(const std::string& path, Index nx, Index ny, Index nz,
                          double phi_floor = 1e-4, double cr = 5e-7, double p0 = 500.0);

/// Writes the same layout with 17 significant digits.
void write_perm_ascii(const RockProps& rock, const std::string& path);

struct FieldSpec {
  double mean_log10_k = -12.0;  // log10 of the geometric-mean kx in m^2
  double decades = 6.0;         // max/min kx ratio is 10^decades
  double anisotropy = 1000.0;   // kx / kz
  int smoothing_passes = 2;
  unsigned long seed = 1;
  double phi_mean = 0.25;
};

/// Correlated log-normal permeability with porosity tied to log k.
RockProps generate_lognormal_field(Index nx, Index ny, Index nz, const FieldSpec& spec,
                                   double cr = 5e-7, double p0 = 500.0);

/// One row per step and a final summary row.
void write_metrics_csv(const RunMetrics& metrics, const std::string& path);

/// Legacy VTK unstructured grid with cell pressure and saturation.
void write_fields_vtk(const HexMesh& mesh, const State& state, const std::string& path);

/// Nine <prefix>_<block>.mtx files and <prefix>_blocks.txt with n_f, n_E, n_w.
void dump_jacobian_mm(const BlockJacobian& J, const std::string& prefix);

/// Reads back what dump_jacobian_mm wrote.
BlockJacobian load_jacobian_mm(const std::string& prefix);

}  // namespace bcpr
