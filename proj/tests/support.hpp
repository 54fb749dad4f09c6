#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "bcpr/discretization.hpp"
#include "bcpr/grid.hpp"
#include "bcpr/linalg/sparse.hpp"
#include "bcpr/physics.hpp"

namespace bcpr::testing {

using linalg::DenseMatrix;

/// Small five-spot-like model: a rate injector in the middle column and BHP
/// producers in two corners. Permeability is log-uniform when `contrast` > 0.
inline Model small_model(Index nx, Index ny, Index nz, bool gravity, double contrast = 0.0,
                         unsigned seed = 1, bool deform = false) {
  Model m;
  m.mesh = build_cartesian(nx, ny, nz, 6.096, 3.048, 0.6096);
  if (deform)
    m.mesh = deform_dome(m.mesh, 0.8, 0.5 * std::min(nx * 6.096, ny * 3.048),
                         Eigen::Vector2d(0.5 * nx * 6.096, 0.5 * ny * 3.048));
  m.rock = RockProps::uniform(m.mesh.num_cells(), 1e-12, 0.25, 5e-7, 500.0);
  if (contrast > 0.0) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (auto& k : m.rock.perm) {
      const double kx = 1e-12 * std::pow(10.0, contrast * u(rng));
      k = Vec3(kx, kx * std::pow(10.0, 0.3 * u(rng)), kx / 10.0);
    }
  }
  m.gravity = gravity;
  auto column = [&](Index i, Index j) {
    std::vector<Index> cells;
    for (Index k = 0; k < nz; ++k) cells.push_back(m.mesh.cell_index(i, j, k));
    return cells;
  };
  m.wells.push_back(
      make_well(m.mesh, m.rock, "I", column(nx / 2, ny / 2), 0.1, WellControl::Rate, 5.0, true));
  m.wells.push_back(
      make_well(m.mesh, m.rock, "P1", column(0, 0), 0.1, WellControl::Bhp, 495.0, false));
  m.wells.push_back(make_well(m.mesh, m.rock, "P2", column(nx - 1, ny - 1), 0.1,
                              WellControl::Bhp, 497.0, false));
  m.prepare();
  return m;
}

/// State with pressures around `p_mean` and saturations strictly inside (0, 1),
/// so that no upwind choice or relperm clamp sits on a switch.
inline State random_state(const Model& m, std::mt19937& rng, double p_mean = 500.0,
                          double p_spread = 5.0) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> sw(0.15, 0.85);
  State s = make_state(m.layout());
  for (auto& p : s.p_elem) p = p_mean + p_spread * u(rng);
  for (auto& p : s.p_face) p = p_mean + p_spread * u(rng);
  for (auto& p : s.p_bh) p = p_mean + p_spread * u(rng);
  for (auto& v : s.Sw) v = sw(rng);
  if (m.gravity) {
    for (Index c = 0; c < m.mesh.num_cells(); ++c) s.p_elem[c] += 9.0 * m.mesh.cell_depth(c);
    for (Index f = 0; f < m.mesh.num_faces(); ++f)
      s.p_face[f] += 9.0 * m.mesh.face_centroid[f].z();
  }
  return s;
}

/// Upwind cell of every face for both phases.
inline std::vector<Index> upwind_pattern(const Model& m, const State& s) {
  std::vector<Index> out;
  for (Index f = 0; f < m.mesh.num_faces(); ++f)
    for (Phase ph : {Phase::Water, Phase::Oil}) out.push_back(upwind_cell(m, s, f, ph));
  return out;
}

/// Central differences of the flattened residual. For a fixed upwind choice
/// the residual is affine in the pressure unknowns, so pressure columns take
/// the wide relative step `h_p` to keep round-off low, shrinking towards `h_s`
/// while the step changes an upwind choice. Saturation columns use `h_s`.
/// `narrowed`, when given, is set if any pressure column had to shrink.
inline DenseMatrix fd_jacobian(const Model& m, const State& s, const State& prev, double dt,
                               bool* narrowed = nullptr, double h_p = 1e-4,
                               double h_s = 1e-6) {
  const DofLayout dofs = m.layout();
  const Vector x0 = pack_state(s);
  const std::vector<Index> up0 = upwind_pattern(m, s);
  DenseMatrix J(dofs.total(), dofs.total());
  State tp = s, tm = s;
  const Index first_sw = dofs.total() - dofs.ne;
  if (narrowed) *narrowed = false;
  for (Index c = 0; c < dofs.total(); ++c) {
    auto perturb = [&](double h) {
      const double step = h * std::max(1.0, std::abs(x0[c]));
      Vector x = x0;
      x[c] = x0[c] + step;
      unpack_state(x, dofs, tp);
      x[c] = x0[c] - step;
      unpack_state(x, dofs, tm);
      return step;
    };
    double h = c < first_sw ? h_p : h_s;
    double step = perturb(h);
    while (h > h_s && (upwind_pattern(m, tp) != up0 || upwind_pattern(m, tm) != up0))
    {
      step = perturb(h = std::max(h_s, 0.1 * h));
      if (narrowed) *narrowed = true;
    }
    const Vector rp = assemble_residual(m, tp, prev, dt).flat();
    const Vector rm = assemble_residual(m, tm, prev, dt).flat();
    J.col(c) = (rp - rm) / (2.0 * step);
  }
  return J;
}

/// Random sparse SPD matrix: a weighted graph Laplacian plus a positive shift.
inline linalg::SparseMatrix random_spd(int n, double density, std::mt19937& rng,
                                       double shift = 0.1) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<linalg::Triplet> t;
  Vector diag = Vector::Constant(n, shift);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (j == i + 1 || u(rng) < density) {
        const double w = 0.1 + u(rng);
        t.emplace_back(i, j, -w);
        t.emplace_back(j, i, -w);
        diag[i] += w;
        diag[j] += w;
      }
  for (int i = 0; i < n; ++i) t.emplace_back(i, i, diag[i]);
  linalg::SparseMatrix A(n, n);
  A.setFromTriplets(t.begin(), t.end());
  return A;
}

// Dynamic growth written directly from its description, on dense matrices.
struct DynResult {
  std::vector<Index> pattern;
  Vector values;
  int solves = 0;
  bool short_step = false;  // some step found fewer than n_add candidates
};

inline double rounded_magnitude(double r) {
  // 40 mantissa bits, the tie resolution of the ranking.
  if (r == 0.0) return 0.0;
  const double e = std::floor(std::log2(std::abs(r))) + 1.0;
  const double scale = std::exp2(40.0 - e);
  return std::round(std::abs(r) * scale) / scale;
}

inline DynResult reference_dynamic(const DenseMatrix& Jpipi, const Vector& j, int n_ent,
                            int n_add) {
  DynResult out;
  for (Index p = 0; p < j.size(); ++p)
    if (j[p] != 0.0) out.pattern.push_back(p);
  int added = 0;
  for (;;) {
    const int k = static_cast<int>(out.pattern.size());
    DenseMatrix A(k, k);
    Vector b(k);
    for (int a = 0; a < k; ++a) {
      b[a] = j[out.pattern[a]];
      for (int c = 0; c < k; ++c) A(a, c) = Jpipi(out.pattern[a], out.pattern[c]);
    }
    out.values = -A.partialPivLu().solve(b);
    ++out.solves;
    if (added == n_ent) break;
    Vector f = Vector::Zero(j.size());
    for (int a = 0; a < k; ++a) f[out.pattern[a]] = out.values[a];
    const Vector r = j + Jpipi * f;
    std::vector<std::pair<double, Index>> ranked;
    for (Index p = 0; p < j.size(); ++p)
      if (std::find(out.pattern.begin(), out.pattern.end(), p) == out.pattern.end() && r[p] != 0.0)
        ranked.emplace_back(-rounded_magnitude(r[p]), p);
    std::sort(ranked.begin(), ranked.end());
    const int want = std::min(n_add, n_ent - added);
    const int take = std::min<int>(want, static_cast<int>(ranked.size()));
    if (take < want) out.short_step = true;
    if (take == 0) break;
    for (int t = 0; t < take; ++t) out.pattern.push_back(ranked[t].second);
    std::sort(out.pattern.begin(), out.pattern.end());
    added += take;
  }
  return out;
}

}  // namespace bcpr::testing
