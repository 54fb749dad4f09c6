#pragma once

#include <atomic>
#include <memory>
#include <utility>

#include <Eigen/SparseLU>

#include "bcpr/discretization.hpp"
#include "bcpr/edfa.hpp"
#include "bcpr/linalg/amg.hpp"

namespace bcpr {

struct BcprOptions {
  PatternSpec pattern = PatternSpec::fixed(1, false);
  double inner_tol = 1e-5;
  int inner_maxit = 15;
  /// Keep the J_pipi hierarchy and the factor while J_pipi and J_pip are unchanged.
  bool reuse = true;
  /// Rebuild everything on every call, regardless of `reuse`.
  bool force_rebuild = false;
  /// Direct J_pipi solves in place of the V-cycle.
  bool exact_pipi = false;
  int threads = 1;
  linalg::AmgOptions amg;
};

struct BcprReport {
  double rs = 0.0;
  long nnz_schur = 0;
  long nnz_schur_orig = 0;
  EdfaStats edfa;
  int pipi_levels = 0;
  int schur_levels = 0;
  bool pipi_stagnated = false;
  bool schur_stagnated = false;
  long builds = 0;
  long pipi_rebuilds = 0;
  long applications = 0;
  long inner_iterations = 0;
  long inner_unconverged = 0;
};

/// Two-stage preconditioner: a Jacobi sweep on the whole Jacobian followed by
/// a block lower-diagonal-upper solve of the face/element pressure system.
class BcprPreconditioner {
public:
  BcprPreconditioner(const HexMesh& mesh, BcprOptions opt);

  /// Sets up (or refreshes) every component from a new Jacobian.
  void build(const BlockJacobian& J);

  /// v = M1 w; r = w - J v; v += M2 r.
  Vector apply(const Vector& w) const;
  Vector operator()(const Vector& w) const { return apply(w); }

  /// Pressure-stage corrections for the face and element/well residuals.
  std::pair<Vector, Vector> apply_second_stage(const Vector& r_pi, const Vector& r_p) const;

  /// Approximate J_pipi^{-1} r: one V-cycle, or a direct solve in exact mode.
  Vector solve_pipi(const Vector& r) const;
  /// Approximate S^{-1} r by AMG-preconditioned GCR.
  Vector solve_schur(const Vector& r) const;

  BcprReport report() const;
  const SparseMatrix& schur() const { return S_; }
  const SparseMatrix& factor() const { return edfa_.F; }
  const SparseMatrix& jacobian() const { return J_; }
  const Vector& inverse_diagonal() const { return inv_diag_; }
  const BcprOptions& options() const { return opt_; }

private:
  bool is_orig() const {
    return opt_.pattern.kind == PatternSpec::Kind::Static && opt_.pattern.level == 0;
  }

  const HexMesh& mesh_;
  BcprOptions opt_;
  DofLayout dofs_;

  SparseMatrix J_;
  Vector inv_diag_;
  SparseMatrix Jpipi_, Jpip_, Jppi_;
  EdfaFactor edfa_;
  SparseMatrix F_orig_;
  SparseMatrix S_;
  linalg::AmgHierarchy<double> amg_pipi_, amg_schur_;
  std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>> lu_pipi_;
  bool built_ = false;

  BcprReport report_;
  mutable std::atomic<long> applications_{0};
  mutable std::atomic<long> inner_iterations_{0};
  mutable std::atomic<long> inner_unconverged_{0};
};

}  // namespace bcpr
