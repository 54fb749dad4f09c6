#pragma once

#include <stdexcept>
#include <vector>

#include "bcpr/grid.hpp"

namespace bcpr {

class ConstitutiveError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class Phase { Water, Oil };

/// Per-cell rock properties. Units: m^2, -, 1/kPa, kPa.
struct RockProps {
  std::vector<Vec3> perm;  // diagonal tensor (kx, ky, kz)
  std::vector<double> phi0;
  double cr = 5e-7;
  std::vector<double> p0;

  static RockProps uniform(Index num_cells, double k, double phi0, double cr, double p0);
  void validate() const;
};

/// Fluid properties. Viscosities in kPa*d, specific weights in kPa/m.
struct FluidProps {
  double mu_o = 2.3148e-11;
  double mu_w = 1.1574e-11;
  double gamma_o = 8.00;
  double gamma_w = 9.81;
  double Swr = 0.0;
  double Sor = 0.0;
  double corey_exp = 2.0;

  void validate() const;
  double mu(Phase ph) const { return ph == Phase::Water ? mu_w : mu_o; }
  double gamma(Phase ph) const { return ph == Phase::Water ? gamma_w : gamma_o; }
};

/// Primary unknowns at one time level.
struct State {
  std::vector<double> p_elem;
  std::vector<double> p_face;
  std::vector<double> p_bh;
  std::vector<double> Sw;
  double time = 0.0;
};

struct ValueAndDerivative {
  double value;
  double derivative;
};

/// phi = phi0 (1 + cr (p - p0)); throws when the result is not positive.
ValueAndDerivative porosity(const RockProps& rock, Index cell, double p);

/// Brooks-Corey relative permeability on the normalized saturation.
ValueAndDerivative relperm(const FluidProps& fluid, double Sw, Phase ph);

/// lambda = kr / mu.
ValueAndDerivative mobility(const FluidProps& fluid, double Sw, Phase ph);

}  // namespace bcpr
