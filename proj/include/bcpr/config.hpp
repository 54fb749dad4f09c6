#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "bcpr/simulator.hpp"

namespace bcpr {

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Parsed run description. Text format: one `key = value` per line, `#`
/// starts a comment. Units: m, m^2, kPa, kPa*d, kPa/m, d.
struct RunConfig {
  // mesh
  Index nx = 0, ny = 0, nz = 0;
  double dx = 0, dy = 0, dz = 0;
  double dome_amplitude = 0.0;  // m, 0 keeps the mesh Cartesian
  double dome_radius = 0.0;     // m, 0 selects half the shorter horizontal side

  // rock
  double perm = 1e-12;
  double phi0 = 0.25;
  double cr = 5e-7;
  std::string perm_file;  // kx, ky, kz and phi blocks, x fastest
  double phi_floor = 1e-4;
  bool synthetic_field = false;
  double field_decades = 6.0;
  double field_anisotropy = 1000.0;
  unsigned long field_seed = 1;

  FluidProps fluid;

  // wells
  double injection_rate = 20.0;  // m^3/d
  double producer_bhp = 490.0;   // kPa
  double well_radius = 0.1;      // m

  // initial state
  double p_init = 500.0;
  double sw_init = 0.0;

  Schedule schedule;
  bool gravity = false;

  // solver
  double tol_linear = 1e-6;
  int gmres_maxit = 300;
  double tol_nl_abs = 1e-6;
  double tol_nl_rel = 1e-6;
  int newton_maxit = 10;
  double ds_max = 0.2;
  double inner_tol = 1e-5;
  int inner_maxit = 15;
  std::string pattern = "A";
  bool reuse = true;

  std::string output_dir = "output";
};

/// Keys that must appear in every configuration.
const std::vector<std::string>& required_config_keys();

RunConfig parse_config_text(const std::string& text, const std::string& source = "<string>");
RunConfig parse_config(const std::string& path);

/// Mesh, properties and wells as described by the configuration.
Scenario make_scenario(const RunConfig& cfg, int threads = 1);

}  // namespace bcpr
