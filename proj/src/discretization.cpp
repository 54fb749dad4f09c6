#include "bcpr/discretization.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

namespace bcpr {

namespace {

struct GaussRule {
  std::vector<double> x;  // on [0,1]
  std::vector<double> w;
};

// Golub-Welsch on the Legendre recurrence, mapped to [0,1].
GaussRule gauss_legendre(int n) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    J(k, k - 1) = J(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(J);
  GaussRule g;
  for (int k = 0; k < n; ++k) {
    const double v = eig.eigenvectors()(0, k);
    g.x.push_back(0.5 * (eig.eigenvalues()(k) + 1.0));
    g.w.push_back(v * v);  // weights on [-1,1] are 2 v^2; halved by the map
  }
  return g;
}

// Lowest-order reference fluxes; face l has unit outward flux through face l only.
Vec3 rt0_reference(int l, const Vec3& xi) {
  Vec3 v = Vec3::Zero();
  const int d = l / 2;
  v[d] = (l % 2 == 0) ? xi[d] - 1.0 : xi[d];
  return v;
}

Eigen::Matrix3d trilinear_jacobian(const std::array<Vec3, kNodesPerCell>& x, const Vec3& xi) {
  Eigen::Matrix3d DF = Eigen::Matrix3d::Zero();
  for (int a = 0; a < kNodesPerCell; ++a) {
    const int ix = a & 1, iy = (a >> 1) & 1, iz = (a >> 2) & 1;
    const double nx = ix ? xi[0] : 1.0 - xi[0];
    const double ny = iy ? xi[1] : 1.0 - xi[1];
    const double nz = iz ? xi[2] : 1.0 - xi[2];
    const double sx = ix ? 1.0 : -1.0, sy = iy ? 1.0 : -1.0, sz = iz ? 1.0 : -1.0;
    DF.col(0) += sx * ny * nz * x[a];
    DF.col(1) += nx * sy * nz * x[a];
    DF.col(2) += nx * ny * sz * x[a];
  }
  return DF;
}

using TripletList = std::vector<linalg::Triplet>;

SparseMatrix from_triplets(Index rows, Index cols, const TripletList& t) {
  SparseMatrix A(rows, cols);
  A.setFromTriplets(t.begin(), t.end());
  linalg::drop_small(A, 0.0);
  A.makeCompressed();
  return A;
}

void append_block(TripletList& out, const SparseMatrix& A, Index r0, Index c0) {
  for (int i = 0; i < A.outerSize(); ++i)
    for (SparseMatrix::InnerIterator it(A, i); it; ++it)
      out.emplace_back(r0 + it.row(), c0 + it.col(), it.value());
}

SparseMatrix stack(const std::vector<std::vector<const SparseMatrix*>>& blocks) {
  std::vector<Index> row_off{0}, col_off{0};
  for (const auto& row : blocks) row_off.push_back(row_off.back() + row.front()->rows());
  for (const auto* b : blocks.front()) col_off.push_back(col_off.back() + b->cols());
  TripletList t;
  for (std::size_t r = 0; r < blocks.size(); ++r)
    for (std::size_t c = 0; c < blocks[r].size(); ++c)
      append_block(t, *blocks[r][c], row_off[r], col_off[c]);
  SparseMatrix A(row_off.back(), col_off.back());
  A.setFromTriplets(t.begin(), t.end());
  A.makeCompressed();
  return A;
}

}  // namespace

namespace {

constexpr double kCouplingDrop = 1e-13;

// Inverts each connected component of the exact-nonzero graph on its own so
// that decoupled face groups stay exactly decoupled in the inverse.
Mat6 invert_by_components(const Mat6& B) {
  std::array<int, 6> comp;
  comp.fill(-1);
  int ncomp = 0;
  for (int s = 0; s < 6; ++s) {
    if (comp[s] >= 0) continue;
    std::array<int, 6> stack{};
    int top = 0;
    stack[top++] = s;
    comp[s] = ncomp;
    while (top > 0) {
      const int i = stack[--top];
      for (int j = 0; j < 6; ++j)
        if (comp[j] < 0 && (B(i, j) != 0.0 || B(j, i) != 0.0)) {
          comp[j] = ncomp;
          stack[top++] = j;
        }
    }
    ++ncomp;
  }
  if (ncomp == 1) return B.inverse();
  Mat6 out = Mat6::Zero();
  for (int c = 0; c < ncomp; ++c) {
    std::vector<int> idx;
    for (int i = 0; i < 6; ++i)
      if (comp[i] == c) idx.push_back(i);
    const int m = static_cast<int>(idx.size());
    Eigen::MatrixXd sub(m, m);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) sub(a, b) = B(idx[a], idx[b]);
    const Eigen::MatrixXd inv = sub.inverse();
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) out(idx[a], idx[b]) = inv(a, b);
  }
  return out;
}

}  // namespace

ElemB elementary_B(const HexMesh& mesh, Index cell, const Vec3& K, int order) {
  const auto x = cell_nodes(mesh, cell);
  const GaussRule g = gauss_legendre(order);
  const Eigen::Matrix3d Kinv = K.cwiseInverse().asDiagonal();
  ElemB e;
  e.B.setZero();
  for (int a = 0; a < order; ++a)
    for (int b = 0; b < order; ++b)
      for (int c = 0; c < order; ++c) {
        const Vec3 xi(g.x[a], g.x[b], g.x[c]);
        const double w = g.w[a] * g.w[b] * g.w[c];
        const Eigen::Matrix3d DF = trilinear_jacobian(x, xi);
        const double det = DF.determinant();
        if (!(det > 0.0)) {
          std::ostringstream msg;
          msg << "non-positive Jacobian determinant " << det << " in cell " << cell;
          throw GeometryError(msg.str());
        }
        Eigen::Matrix<double, 3, 6> V;
        for (int l = 0; l < kFacesPerCell; ++l) V.col(l) = DF * rt0_reference(l, xi);
        e.B.noalias() += (w / det) * V.transpose() * Kinv * V;
      }
  e.B = 0.5 * (e.B + e.B.transpose()).eval();
  // Quadrature round-off couples faces of different axes on affine-aligned
  // cells; remove it so that the inverse keeps their exact decoupling.
  for (int i = 0; i < kFacesPerCell; ++i)
    for (int j = 0; j < kFacesPerCell; ++j)
      if (i != j && std::abs(e.B(i, j)) < kCouplingDrop * std::sqrt(e.B(i, i) * e.B(j, j)))
        e.B(i, j) = 0.0;
  e.Binv = invert_by_components(e.B);
  e.Binv = 0.5 * (e.Binv + e.Binv.transpose()).eval();
  e.L = e.Binv.rowwise().sum();
  return e;
}

double peaceman_wi(const Vec3& extent, const Vec3& perm, double rw) {
  if (!(rw > 0.0)) throw ConfigurationError("well radius must be positive");
  const double kx = perm.x(), ky = perm.y();
  const double dx = extent.x(), dy = extent.y(), dz = extent.z();
  const double r_eq = 0.28 *
                      std::sqrt(std::sqrt(ky / kx) * dx * dx + std::sqrt(kx / ky) * dy * dy) /
                      (std::pow(ky / kx, 0.25) + std::pow(kx / ky, 0.25));
  if (!(r_eq > rw)) {
    std::ostringstream msg;
    msg << "equivalent radius " << r_eq << " m does not exceed the well radius " << rw << " m";
    throw ConfigurationError(msg.str());
  }
  return 2.0 * std::numbers::pi * std::sqrt(kx * ky) * dz / std::log(r_eq / rw);
}

Well make_well(const HexMesh& mesh, const RockProps& rock, std::string name,
               std::vector<Index> cells, double radius, WellControl control, double target,
               bool injector) {
  Well w;
  w.name = std::move(name);
  w.radius = radius;
  w.control = control;
  w.target = target;
  w.injector = injector;
  for (Index c : cells) {
    if (c < 0 || c >= mesh.num_cells())
      throw ConfigurationError("well " + w.name + " perforates a cell outside the mesh");
    w.wi.push_back(peaceman_wi(cell_extent(mesh, c), rock.perm[c], radius));
  }
  w.cells = std::move(cells);
  return w;
}

void Model::prepare() {
  rock.validate();
  fluid.validate();
  if (static_cast<Index>(rock.perm.size()) != mesh.num_cells())
    throw ConfigurationError("rock properties do not match the number of cells");
  if (!dirichlet.empty() && static_cast<Index>(dirichlet.size()) != mesh.num_faces())
    throw ConfigurationError("Dirichlet table does not match the number of faces");
  elem.resize(mesh.num_cells());
  for (Index c = 0; c < mesh.num_cells(); ++c) elem[c] = elementary_B(mesh, c, rock.perm[c]);
  lambda_ref = 1.0 / fluid.mu_w;
}

State make_state(const DofLayout& dofs) {
  State s;
  s.p_face.assign(dofs.nf, 0.0);
  s.p_elem.assign(dofs.ne, 0.0);
  s.p_bh.assign(dofs.nw, 0.0);
  s.Sw.assign(dofs.ne, 0.0);
  return s;
}

double cell_potential(const Model& model, const State& s, Index cell, Phase ph) {
  return s.p_elem[cell] - model.gamma(ph) * model.mesh.cell_depth(cell);
}

Index upwind_cell(const Model& model, const State& s, Index face, Phase ph) {
  const auto& fc = model.mesh.face_cells[face];
  if (fc[1] == kNoCell) return fc[0];
  const int i = model.mesh.local_face(fc[0], face);
  const int j = model.mesh.local_face(fc[1], face);
  const double a = model.elem[fc[0]].Binv(i, i);
  const double b = model.elem[fc[1]].Binv(j, j);
  const double out = b * lambda_term(model, s, fc[0], i, ph);
  const double in = a * lambda_term(model, s, fc[1], j, ph);
  const double d = out - in;
  if (std::abs(d) <= 1e-14 * (std::abs(out) + std::abs(in))) return std::min(fc[0], fc[1]);
  return d > 0.0 ? fc[0] : fc[1];
}

ValueAndDerivative upwind_mobility(const Model& model, const State& s, Index face, Phase ph) {
  return mobility(model.fluid, s.Sw[upwind_cell(model, s, face, ph)], ph);
}

Vec6 local_potential_fluxes(const Model& model, const State& s, Index cell, Phase ph) {
  const ElemB& e = model.elem[cell];
  const double g = model.gamma(ph);
  Vec6 psi;
  for (int l = 0; l < kFacesPerCell; ++l) {
    const Index f = model.mesh.cell_faces[cell][l];
    psi[l] = s.p_face[f] - g * model.mesh.face_centroid[f].z();
  }
  return e.L * cell_potential(model, s, cell, ph) - e.Binv * psi;
}

Vec6 local_fluxes(const Model& model, const State& s, Index cell, Phase ph) {
  Vec6 q = local_potential_fluxes(model, s, cell, ph);
  for (int l = 0; l < kFacesPerCell; ++l)
    q[l] *= upwind_mobility(model, s, model.mesh.cell_faces[cell][l], ph).value;
  return q;
}

double lambda_term(const Model& model, const State& s, Index cell, int local, Phase ph) {
  const Index f = model.mesh.cell_faces[cell][local];
  const double psi = s.p_face[f] - model.gamma(ph) * model.mesh.face_centroid[f].z();
  return local_potential_fluxes(model, s, cell, ph)[local] +
         model.elem[cell].Binv(local, local) * psi;
}

double face_flux_potential(const Model& model, const State& s, Index face, Phase ph) {
  const auto& fc = model.mesh.face_cells[face];
  if (fc[1] == kNoCell) throw DiscretizationError("continuous flux on a boundary face");
  const int i = model.mesh.local_face(fc[0], face);
  const int j = model.mesh.local_face(fc[1], face);
  const double a = model.elem[fc[0]].Binv(i, i);
  const double b = model.elem[fc[1]].Binv(j, j);
  if (!(a + b > 0.0)) {
    std::ostringstream msg;
    msg << "degenerate cell pair across face " << face;
    throw DiscretizationError(msg.str());
  }
  return (b * lambda_term(model, s, fc[0], i, ph) - a * lambda_term(model, s, fc[1], j, ph)) /
         (a + b);
}

double continuous_flux(const Model& model, const State& s, Index face, Phase ph) {
  return upwind_mobility(model, s, face, ph).value * face_flux_potential(model, s, face, ph);
}

double perforation_inflow(const Model& model, const State& s, Index well, std::size_t k,
                          Phase ph) {
  const Well& w = model.wells[well];
  const Index c = w.cells[k];
  const double dp = s.p_bh[well] - s.p_elem[c];
  if (w.injector) {
    if (ph == Phase::Oil) return 0.0;
    const double lt = mobility(model.fluid, s.Sw[c], Phase::Water).value +
                      mobility(model.fluid, s.Sw[c], Phase::Oil).value;
    return lt * w.wi[k] * dp;
  }
  return mobility(model.fluid, s.Sw[c], ph).value * w.wi[k] * dp;
}

Vector Residual::flat() const {
  Vector x(R_pi.size() + R_p.size() + R_s.size());
  x << R_pi, R_p, R_s;
  return x;
}

namespace {

// Per-cell quantities shared by the residual and the Jacobian.
struct CellFluxes {
  std::array<Vec6, 2> u;  // mobility-free one-sided fluxes per phase
};

std::vector<CellFluxes> cell_fluxes(const Model& model, const State& s) {
  std::vector<CellFluxes> out(model.mesh.num_cells());
  for (Index c = 0; c < model.mesh.num_cells(); ++c)
    for (int a = 0; a < 2; ++a) out[c].u[a] = local_potential_fluxes(model, s, c, kPhases[a]);
  return out;
}

struct WellTerm {
  double m, dm;  // mobility driving the perforation and its Sw derivative
};

WellTerm well_mobility(const Model& model, const Well& w, double sw, Phase ph) {
  if (w.injector) {
    if (ph == Phase::Oil) return {0.0, 0.0};
    const auto lw = mobility(model.fluid, sw, Phase::Water);
    const auto lo = mobility(model.fluid, sw, Phase::Oil);
    return {lw.value + lo.value, lw.derivative + lo.derivative};
  }
  const auto l = mobility(model.fluid, sw, ph);
  return {l.value, l.derivative};
}

}  // namespace

Residual assemble_residual(const Model& model, const State& s, const State& prev, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("time step must be positive");
  const HexMesh& mesh = model.mesh;
  const DofLayout dofs = model.layout();
  Residual r;
  r.R_pi = Vector::Zero(dofs.nf);
  r.R_p = Vector::Zero(dofs.n_pressure());
  r.R_s = Vector::Zero(dofs.ne);
  const auto cf = cell_fluxes(model, s);

  for (Index c = 0; c < dofs.ne; ++c) {
    const double vol = mesh.cell_volume[c];
    const double phi = porosity(model.rock, c, s.p_elem[c]).value;
    const double phi_prev = porosity(model.rock, c, prev.p_elem[c]).value;
    r.R_p[c] += vol * (phi - phi_prev) / dt;
    r.R_s[c] += vol * (phi * s.Sw[c] - phi_prev * prev.Sw[c]) / dt;
  }

  for (Index f = 0; f < dofs.nf; ++f) {
    const auto& fc = mesh.face_cells[f];
    const Index e = fc[0];
    const int i = mesh.local_face(e, f);
    if (fc[1] != kNoCell) {
      const Index e2 = fc[1];
      const int j = mesh.local_face(e2, f);
      const double a = model.elem[e].Binv(i, i);
      const double b = model.elem[e2].Binv(j, j);
      double rpi = 0.0;
      for (int k = 0; k < 2; ++k) {
        const Phase ph = kPhases[k];
        const double lam = upwind_mobility(model, s, f, ph).value;
        const double gz = model.gamma(ph) * mesh.face_centroid[f].z();
        const double Le = cf[e].u[k][i] + a * (s.p_face[f] - gz);
        const double Le2 = cf[e2].u[k][j] + b * (s.p_face[f] - gz);
        const double q = lam * (b * Le - a * Le2) / (a + b);
        r.R_p[e] += q;
        r.R_p[e2] -= q;
        if (ph == Phase::Water) {
          r.R_s[e] += q;
          r.R_s[e2] -= q;
        }
        if (model.gravity) rpi -= lam * (cf[e].u[k][i] + cf[e2].u[k][j]);
      }
      if (!model.gravity) rpi = -model.lambda_ref * (cf[e].u[0][i] + cf[e2].u[0][j]);
      r.R_pi[f] = rpi;
    } else if (model.is_dirichlet(f)) {
      const double a = model.elem[e].Binv(i, i);
      r.R_pi[f] = model.lambda_ref * a * (s.p_face[f] - model.dirichlet[f]);
      for (int k = 0; k < 2; ++k) {
        const double q = upwind_mobility(model, s, f, kPhases[k]).value * cf[e].u[k][i];
        r.R_p[e] += q;
        if (k == 0) r.R_s[e] += q;
      }
    } else {
      double rpi = 0.0;
      if (model.gravity)
        for (int k = 0; k < 2; ++k)
          rpi -= upwind_mobility(model, s, f, kPhases[k]).value * cf[e].u[k][i];
      else
        rpi = -model.lambda_ref * cf[e].u[0][i];
      r.R_pi[f] = rpi;
    }
  }

  for (Index w = 0; w < dofs.nw; ++w) {
    const Well& well = model.wells[w];
    double total = 0.0;
    for (std::size_t k = 0; k < well.cells.size(); ++k) {
      const Index c = well.cells[k];
      const double qw = perforation_inflow(model, s, w, k, Phase::Water);
      const double qo = perforation_inflow(model, s, w, k, Phase::Oil);
      r.R_p[c] -= qw + qo;
      r.R_s[c] -= qw;
      total += qw + qo;
    }
    r.R_p[dofs.ne + w] = well.control == WellControl::Rate ? total - well.target
                                                           : s.p_bh[w] - well.target;
  }
  return r;
}

BlockJacobian assemble_jacobian(const Model& model, const State& s, const State& prev,
                                double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("time step must be positive");
  (void)prev;
  const HexMesh& mesh = model.mesh;
  const DofLayout dofs = model.layout();
  const auto cf = cell_fluxes(model, s);
  TripletList tpipi, tpip, tpis, tppi, tpp, tps, tspi, tsp, tss;

  // Adds d(row)/d(col) to the element-pressure row and, for water, the saturation row.
  auto add_balance = [&](Index cell, bool water, int block, Index col, double v) {
    TripletList* prow[3] = {&tppi, &tpp, &tps};
    TripletList* srow[3] = {&tspi, &tsp, &tss};
    prow[block]->emplace_back(cell, col, v);
    if (water) srow[block]->emplace_back(cell, col, v);
  };
  constexpr int kPi = 0, kP = 1, kS = 2;

  for (Index c = 0; c < dofs.ne; ++c) {
    const double vol = mesh.cell_volume[c];
    const auto phi = porosity(model.rock, c, s.p_elem[c]);
    tpp.emplace_back(c, c, vol * phi.derivative / dt);
    tsp.emplace_back(c, c, vol * phi.derivative * s.Sw[c] / dt);
    tss.emplace_back(c, c, vol * phi.value / dt);
  }

  for (Index f = 0; f < dofs.nf; ++f) {
    const auto& fc = mesh.face_cells[f];
    const Index e = fc[0];
    const int i = mesh.local_face(e, f);
    const ElemB& Be = model.elem[e];
    if (fc[1] != kNoCell) {
      const Index e2 = fc[1];
      const int j = mesh.local_face(e2, f);
      const ElemB& Be2 = model.elem[e2];
      const double a = Be.Binv(i, i);
      const double b = Be2.Binv(j, j);
      double lam_t = 0.0;
      for (int k = 0; k < 2; ++k) {
        const Phase ph = kPhases[k];
        const bool water = ph == Phase::Water;
        const Index up = upwind_cell(model, s, f, ph);
        const auto lam = mobility(model.fluid, s.Sw[up], ph);
        lam_t += lam.value;
        const double gz = model.gamma(ph) * mesh.face_centroid[f].z();
        const double Le = cf[e].u[k][i] + a * (s.p_face[f] - gz);
        const double Le2 = cf[e2].u[k][j] + b * (s.p_face[f] - gz);
        const double c0 = lam.value / (a + b);
        // q = c0 (b Le - a Le2), added to e and subtracted from e2.
        for (int sign = 0; sign < 2; ++sign) {
          const Index row = sign == 0 ? e : e2;
          const double sg = sign == 0 ? 1.0 : -1.0;
          add_balance(row, water, kP, e, sg * c0 * b * Be.L[i]);
          add_balance(row, water, kP, e2, -sg * c0 * a * Be2.L[j]);
          for (int l = 0; l < kFacesPerCell; ++l) {
            if (l != i)
              add_balance(row, water, kPi, mesh.cell_faces[e][l], -sg * c0 * b * Be.Binv(i, l));
            if (l != j)
              add_balance(row, water, kPi, mesh.cell_faces[e2][l], sg * c0 * a * Be2.Binv(j, l));
          }
          if (lam.derivative != 0.0)
            add_balance(row, water, kS, up, sg * lam.derivative * (b * Le - a * Le2) / (a + b));
        }
        if (model.gravity && lam.derivative != 0.0)
          tpis.emplace_back(f, up, -lam.derivative * (cf[e].u[k][i] + cf[e2].u[k][j]));
      }
      const double w = model.gravity ? lam_t : model.lambda_ref;
      tpip.emplace_back(f, e, -w * Be.L[i]);
      tpip.emplace_back(f, e2, -w * Be2.L[j]);
      for (int l = 0; l < kFacesPerCell; ++l) {
        tpipi.emplace_back(f, mesh.cell_faces[e][l], w * Be.Binv(i, l));
        tpipi.emplace_back(f, mesh.cell_faces[e2][l], w * Be2.Binv(j, l));
      }
    } else if (model.is_dirichlet(f)) {
      tpipi.emplace_back(f, f, model.lambda_ref * Be.Binv(i, i));
      for (int k = 0; k < 2; ++k) {
        const Phase ph = kPhases[k];
        const bool water = ph == Phase::Water;
        const auto lam = mobility(model.fluid, s.Sw[e], ph);
        add_balance(e, water, kP, e, lam.value * Be.L[i]);
        for (int l = 0; l < kFacesPerCell; ++l)
          add_balance(e, water, kPi, mesh.cell_faces[e][l], -lam.value * Be.Binv(i, l));
        if (lam.derivative != 0.0) add_balance(e, water, kS, e, lam.derivative * cf[e].u[k][i]);
      }
    } else {
      double w = model.lambda_ref;
      if (model.gravity) {
        w = 0.0;
        for (int k = 0; k < 2; ++k) {
          const auto lam = mobility(model.fluid, s.Sw[e], kPhases[k]);
          w += lam.value;
          if (lam.derivative != 0.0)
            tpis.emplace_back(f, e, -lam.derivative * cf[e].u[k][i]);
        }
      }
      tpip.emplace_back(f, e, -w * Be.L[i]);
      for (int l = 0; l < kFacesPerCell; ++l)
        tpipi.emplace_back(f, mesh.cell_faces[e][l], w * Be.Binv(i, l));
    }
  }

  for (Index w = 0; w < dofs.nw; ++w) {
    const Well& well = model.wells[w];
    const Index wrow = dofs.ne + w;
    if (well.control == WellControl::Bhp) tpp.emplace_back(wrow, wrow, 1.0);
    for (std::size_t k = 0; k < well.cells.size(); ++k) {
      const Index c = well.cells[k];
      const double dp = s.p_bh[w] - s.p_elem[c];
      for (int ph = 0; ph < 2; ++ph) {
        const WellTerm m = well_mobility(model, well, s.Sw[c], kPhases[ph]);
        const bool water = ph == 0;
        const double wi = well.wi[k];
        // Reservoir rows carry -inflow.
        add_balance(c, water, kP, wrow, -m.m * wi);
        add_balance(c, water, kP, c, m.m * wi);
        if (m.dm != 0.0) add_balance(c, water, kS, c, -m.dm * wi * dp);
        if (well.control == WellControl::Rate) {
          tpp.emplace_back(wrow, wrow, m.m * wi);
          tpp.emplace_back(wrow, c, -m.m * wi);
          if (m.dm != 0.0) tps.emplace_back(wrow, c, m.dm * wi * dp);
        }
      }
    }
  }

  const Index np = dofs.n_pressure();
  BlockJacobian J;
  J.dofs = dofs;
  J.pipi = from_triplets(dofs.nf, dofs.nf, tpipi);
  J.pip = from_triplets(dofs.nf, np, tpip);
  J.pis = from_triplets(dofs.nf, dofs.ne, tpis);
  J.ppi = from_triplets(np, dofs.nf, tppi);
  J.pp = from_triplets(np, np, tpp);
  J.ps = from_triplets(np, dofs.ne, tps);
  J.spi = from_triplets(dofs.ne, dofs.nf, tspi);
  J.sp = from_triplets(dofs.ne, np, tsp);
  J.ss = from_triplets(dofs.ne, dofs.ne, tss);
  return J;
}

SparseMatrix BlockJacobian::full() const {
  return stack({{&pipi, &pip, &pis}, {&ppi, &pp, &ps}, {&spi, &sp, &ss}});
}

SparseMatrix BlockJacobian::pressure_block() const { return stack({{&pipi, &pip}, {&ppi, &pp}}); }

SparseMatrix BlockJacobian::pressure_saturation() const { return stack({{&pis}, {&ps}}); }

SparseMatrix BlockJacobian::saturation_pressure() const { return stack({{&spi, &sp}}); }

Vector pack_state(const State& s) {
  const auto nf = s.p_face.size(), ne = s.p_elem.size(), nw = s.p_bh.size();
  Vector x(nf + 2 * ne + nw);
  x << Eigen::Map<const Vector>(s.p_face.data(), nf), Eigen::Map<const Vector>(s.p_elem.data(), ne),
      Eigen::Map<const Vector>(s.p_bh.data(), nw), Eigen::Map<const Vector>(s.Sw.data(), ne);
  return x;
}

void unpack_state(const Vector& x, const DofLayout& dofs, State& s) {
  if (x.size() != dofs.total()) throw std::invalid_argument("state vector size mismatch");
  s.p_face.assign(x.data(), x.data() + dofs.nf);
  s.p_elem.assign(x.data() + dofs.off_p(), x.data() + dofs.off_bh());
  s.p_bh.assign(x.data() + dofs.off_bh(), x.data() + dofs.off_s());
  s.Sw.assign(x.data() + dofs.off_s(), x.data() + dofs.total());
}

double water_in_place(const Model& model, const State& s) {
  double v = 0.0;
  for (Index c = 0; c < model.mesh.num_cells(); ++c)
    v += model.mesh.cell_volume[c] * porosity(model.rock, c, s.p_elem[c]).value * s.Sw[c];
  return v;
}

double net_water_inflow(const Model& model, const State& s) {
  double q = 0.0;
  for (Index w = 0; w < static_cast<Index>(model.wells.size()); ++w)
    for (std::size_t k = 0; k < model.wells[w].cells.size(); ++k)
      q += perforation_inflow(model, s, w, k, Phase::Water);
  return q;
}

}  // namespace bcpr
