#include "bcpr/physics.hpp"

#include <cmath>
#include <sstream>

namespace bcpr {

RockProps RockProps::uniform(Index num_cells, double k, double phi0, double cr, double p0) {
  RockProps r;
  r.perm.assign(num_cells, Vec3::Constant(k));
  r.phi0.assign(num_cells, phi0);
  r.cr = cr;
  r.p0.assign(num_cells, p0);
  return r;
}

void RockProps::validate() const {
  if (phi0.size() != perm.size() || p0.size() != perm.size())
    throw std::invalid_argument("rock property arrays differ in length");
  if (cr < 0.0) throw std::invalid_argument("rock compressibility must be >= 0");
  for (std::size_t c = 0; c < perm.size(); ++c) {
    if (!(perm[c].minCoeff() > 0.0)) {
      std::ostringstream msg;
      msg << "non-positive permeability in cell " << c;
      throw std::invalid_argument(msg.str());
    }
    if (!(phi0[c] > 0.0 && phi0[c] <= 1.0)) {
      std::ostringstream msg;
      msg << "porosity out of (0,1] in cell " << c;
      throw std::invalid_argument(msg.str());
    }
  }
}

void FluidProps::validate() const {
  if (!(mu_o > 0.0 && mu_w > 0.0)) throw std::invalid_argument("viscosities must be positive");
  if (Swr < 0.0 || Sor < 0.0 || !(Swr + Sor < 1.0))
    throw std::invalid_argument("residual saturations must satisfy 0 <= Swr + Sor < 1");
  if (!(corey_exp >= 1.0)) throw std::invalid_argument("Corey exponent must be >= 1");
}

ValueAndDerivative porosity(const RockProps& rock, Index cell, double p) {
  const double phi0 = rock.phi0[cell];
  const double phi = phi0 * (1.0 + rock.cr * (p - rock.p0[cell]));
  if (!(phi > 0.0)) {
    std::ostringstream msg;
    msg << "non-positive porosity " << phi << " in cell " << cell << " at p = " << p << " kPa";
    throw ConstitutiveError(msg.str());
  }
  return {phi, phi0 * rock.cr};
}

ValueAndDerivative relperm(const FluidProps& fluid, double Sw, Phase ph) {
  const double span = 1.0 - fluid.Swr - fluid.Sor;
  double se = (Sw - fluid.Swr) / span;
  double dse = 1.0 / span;
  if (se < 0.0) {
    se = 0.0;
    dse = 0.0;
  } else if (se > 1.0) {
    se = 1.0;
    dse = 0.0;
  }
  const double n = fluid.corey_exp;
  if (ph == Phase::Water) return {std::pow(se, n), n * std::pow(se, n - 1.0) * dse};
  const double so = 1.0 - se;
  return {std::pow(so, n), -n * std::pow(so, n - 1.0) * dse};
}

ValueAndDerivative mobility(const FluidProps& fluid, double Sw, Phase ph) {
  const auto kr = relperm(fluid, Sw, ph);
  const double mu = fluid.mu(ph);
  return {kr.value / mu, kr.derivative / mu};
}

}  // namespace bcpr
