#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bcpr/grid.hpp"
#include "bcpr/linalg/sparse.hpp"
#include "bcpr/physics.hpp"

namespace bcpr {

using linalg::SparseMatrix;
using linalg::Vector;

class DiscretizationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ConfigurationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

using Mat6 = Eigen::Matrix<double, 6, 6>;
using Vec6 = Eigen::Matrix<double, 6, 1>;

inline constexpr std::array<Phase, 2> kPhases = {Phase::Water, Phase::Oil};

/// Elementary mixed matrix of one cell, its inverse and the inverse row sums.
struct ElemB {
  Mat6 B;
  Mat6 Binv;
  Vec6 L;
};

/// B_ij = int eta_i^T K^-1 eta_j over the cell, with `order` Gauss points per
/// reference direction.
ElemB elementary_B(const HexMesh& mesh, Index cell, const Vec3& K, int order = 2);

enum class WellControl { Rate, Bhp };

struct Well {
  std::string name;
  std::vector<Index> cells;
  std::vector<double> wi;
  double radius = 0.1;
  WellControl control = WellControl::Bhp;
  double target = 0.0;  // m^3/d (positive = injection) or kPa
  bool injector = false;
};

/// Peaceman index with the anisotropic equivalent radius.
/// `extent` holds the cell sizes (dx, dy, dz).
double peaceman_wi(const Vec3& extent, const Vec3& perm, double rw);

/// Well perforating `cells`, with indices from the host cell geometry.
Well make_well(const HexMesh& mesh, const RockProps& rock, std::string name,
               std::vector<Index> cells, double radius, WellControl control, double target,
               bool injector);

/// Unknown layout of the full system: [pi; p_elem; p_bh; Sw].
struct DofLayout {
  Index nf = 0, ne = 0, nw = 0;

  Index n_pressure() const { return ne + nw; }
  Index off_pi() const { return 0; }
  Index off_p() const { return nf; }
  Index off_bh() const { return nf + ne; }
  Index off_s() const { return nf + ne + nw; }
  Index total() const { return nf + 2 * ne + nw; }
};

/// Everything the residual needs besides the two states.
struct Model {
  HexMesh mesh;
  RockProps rock;
  FluidProps fluid;
  std::vector<Well> wells;
  bool gravity = false;
  /// Prescribed face pressure per face; NaN where the face is free.
  std::vector<double> dirichlet;
  std::vector<ElemB> elem;
  /// Mobility scale of the face-continuity rows when gravity is off.
  double lambda_ref = 1.0;

  /// Computes the elementary matrices and checks the property tables.
  void prepare();
  DofLayout layout() const {
    return {mesh.num_faces(), mesh.num_cells(), static_cast<Index>(wells.size())};
  }
  bool is_dirichlet(Index face) const {
    return !dirichlet.empty() && !std::isnan(dirichlet[face]);
  }
  double gamma(Phase ph) const { return gravity ? fluid.gamma(ph) : 0.0; }
};

State make_state(const DofLayout& dofs);

/// Phase potential p - gamma z at the cell centroid.
double cell_potential(const Model& model, const State& s, Index cell, Phase ph);

/// Mobility-free continuous flux across an interior face, positive from
/// face_cells[0] to face_cells[1].
double face_flux_potential(const Model& model, const State& s, Index face, Phase ph);

/// Cell whose mobility is used on `face` for phase `ph`: the one the
/// continuous flux leaves, the lower index on ties, the interior cell on the
/// boundary.
Index upwind_cell(const Model& model, const State& s, Index face, Phase ph);

/// lambda* on `face` for phase `ph`.
ValueAndDerivative upwind_mobility(const Model& model, const State& s, Index face, Phase ph);

/// Mobility-free one-sided fluxes u = L Phi - Binv psi of `cell` (outward).
Vec6 local_potential_fluxes(const Model& model, const State& s, Index cell, Phase ph);

/// q^E = lambda* u for all six faces of `cell`.
Vec6 local_fluxes(const Model& model, const State& s, Index cell, Phase ph);

/// Lambda^E_i: the one-sided flux without the contribution of face i itself.
double lambda_term(const Model& model, const State& s, Index cell, int local, Phase ph);

/// Flux across an interior face eliminating its own pressure, positive from
/// face_cells[0] to face_cells[1].
double continuous_flux(const Model& model, const State& s, Index face, Phase ph);

/// Well inflow of phase `ph` at perforation `k` (positive into the reservoir).
double perforation_inflow(const Model& model, const State& s, Index well, std::size_t k,
                          Phase ph);

struct Residual {
  Vector R_pi;
  Vector R_p;  // element rows then well rows
  Vector R_s;

  Vector flat() const;
  std::array<double, 3> norms() const { return {R_pi.norm(), R_p.norm(), R_s.norm()}; }
};

Residual assemble_residual(const Model& model, const State& s, const State& prev, double dt);

/// Nine blocks of the Jacobian. Index "p" covers element and well pressures.
struct BlockJacobian {
  SparseMatrix pipi, pip, pis;
  SparseMatrix ppi, pp, ps;
  SparseMatrix spi, sp, ss;
  DofLayout dofs;

  /// Monolithic matrix in the [pi; p; s] order.
  SparseMatrix full() const;
  /// Pressure block [[J_pipi, J_pip], [J_ppi, J_pp]].
  SparseMatrix pressure_block() const;
  /// Coupling of the pressure unknowns to saturations, [J_pis; J_ps].
  SparseMatrix pressure_saturation() const;
  /// Coupling of saturations to the pressure unknowns, [J_spi, J_sp].
  SparseMatrix saturation_pressure() const;
};

BlockJacobian assemble_jacobian(const Model& model, const State& s, const State& prev, double dt);

/// Scatters a state into a flat vector in the layout order, and back.
Vector pack_state(const State& s);
void unpack_state(const Vector& x, const DofLayout& dofs, State& s);

/// Water volume in place, sum of Omega phi(p) Sw.
double water_in_place(const Model& model, const State& s);

/// Sum over wells of water inflow.
double net_water_inflow(const Model& model, const State& s);

}  // namespace bcpr
