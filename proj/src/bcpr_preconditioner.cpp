#include "bcpr/bcpr_preconditioner.hpp"

#include <sstream>

#include <spdlog/spdlog.h>

#include "bcpr/linalg/krylov.hpp"
#include "bcpr/linalg/precond.hpp"

namespace bcpr {

namespace {

bool same_matrix(const SparseMatrix& a, const SparseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.nonZeros() != b.nonZeros()) return false;
  const auto n = static_cast<std::size_t>(a.nonZeros());
  return std::equal(a.valuePtr(), a.valuePtr() + n, b.valuePtr()) &&
         std::equal(a.innerIndexPtr(), a.innerIndexPtr() + n, b.innerIndexPtr()) &&
         std::equal(a.outerIndexPtr(), a.outerIndexPtr() + a.outerSize() + 1, b.outerIndexPtr());
}

void check_finite(const Vector& v, const char* stage) {
  if (!v.allFinite())
    throw linalg::NumericError(std::string("non-finite value after ") + stage);
}

}  // namespace

BcprPreconditioner::BcprPreconditioner(const HexMesh& mesh, BcprOptions opt)
    : mesh_(mesh), opt_(std::move(opt)) {}

void BcprPreconditioner::build(const BlockJacobian& J) {
  dofs_ = J.dofs;
  J_ = J.full();
  try {
    inv_diag_ = linalg::Jacobi<double>(J_).inverse_diagonal();
  } catch (const linalg::PreconditionerBuildError& e) {
    std::ostringstream msg;
    msg << "Jacobian has a zero diagonal in row " << e.row();
    throw linalg::PreconditionerBuildError(msg.str(), e.row());
  }

  const bool keep = built_ && opt_.reuse && !opt_.force_rebuild && same_matrix(Jpipi_, J.pipi) &&
                    same_matrix(Jpip_, J.pip);
  if (!keep) {
    Jpipi_ = J.pipi;
    Jpip_ = J.pip;
    if (opt_.exact_pipi) {
      lu_pipi_ = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
      lu_pipi_->compute(Eigen::SparseMatrix<double>(Jpipi_));
      if (lu_pipi_->info() != Eigen::Success)
        throw linalg::PreconditionerBuildError("J_pipi factorization failed", -1);
    } else {
      amg_pipi_.setup(Jpipi_, opt_.amg);
    }
    edfa_ = build_edfa(mesh_, J, opt_.pattern, opt_.threads);
    if (edfa_.stats.fallbacks > 0)
      spdlog::warn("{} factor columns fell back to the cell faces", edfa_.stats.fallbacks);
    ++report_.pipi_rebuilds;
    if (is_orig())
      F_orig_ = SparseMatrix();
    else
      F_orig_ = build_edfa(mesh_, J, PatternSpec::fixed(0, false), opt_.threads).F;
  }
  Jppi_ = J.ppi;
  S_ = schur_approx(J.pp, J.ppi, edfa_.F);
  amg_schur_.setup(S_, opt_.amg);

  report_.nnz_schur = S_.nonZeros();
  report_.nnz_schur_orig =
      is_orig() ? report_.nnz_schur : schur_approx(J.pp, J.ppi, F_orig_).nonZeros();
  report_.rs = static_cast<double>(report_.nnz_schur) / static_cast<double>(report_.nnz_schur_orig);
  report_.edfa = edfa_.stats;
  report_.pipi_levels = opt_.exact_pipi ? 0 : amg_pipi_.num_levels();
  report_.pipi_stagnated = !opt_.exact_pipi && amg_pipi_.stagnated();
  report_.schur_levels = amg_schur_.num_levels();
  report_.schur_stagnated = amg_schur_.stagnated();
  ++report_.builds;
  built_ = true;
}

Vector BcprPreconditioner::solve_pipi(const Vector& r) const {
  if (opt_.exact_pipi) return lu_pipi_->solve(r);
  return amg_pipi_.vcycle(r);
}

Vector BcprPreconditioner::solve_schur(const Vector& r) const {
  linalg::KrylovOptions kopt;
  kopt.tol = opt_.inner_tol;
  kopt.maxit = opt_.inner_maxit;
  const auto res = linalg::gcr<double>([this](const Vector& x) -> Vector { return S_ * x; }, r,
                                       [this](const Vector& x) { return amg_schur_.vcycle(x); },
                                       kopt);
  inner_iterations_ += res.iterations;
  if (!res.converged) ++inner_unconverged_;
  return res.x;
}

std::pair<Vector, Vector> BcprPreconditioner::apply_second_stage(const Vector& r_pi,
                                                                 const Vector& r_p) const {
  if (r_pi.size() != dofs_.nf || r_p.size() != dofs_.n_pressure())
    throw std::invalid_argument("second stage: residual size mismatch");
  Vector t_pi = solve_pipi(r_pi);
  check_finite(t_pi, "the first J_pipi solve");
  const Vector t_p = r_p - Jppi_ * t_pi;
  Vector dv_p = solve_schur(t_p);
  check_finite(dv_p, "the Schur solve");
  t_pi = r_pi - Jpip_ * dv_p;
  Vector dv_pi = solve_pipi(t_pi);
  check_finite(dv_pi, "the second J_pipi solve");
  return {std::move(dv_pi), std::move(dv_p)};
}

Vector BcprPreconditioner::apply(const Vector& w) const {
  if (w.size() != J_.rows()) throw std::invalid_argument("BCPR apply: vector size mismatch");
  ++applications_;
  Vector v = inv_diag_.cwiseProduct(w);
  check_finite(v, "the Jacobi stage");
  const Vector r = w - J_ * v;
  const Index np = dofs_.n_pressure();
  auto [dpi, dp] = apply_second_stage(r.head(dofs_.nf), r.segment(dofs_.nf, np));
  v.head(dofs_.nf) += dpi;
  v.segment(dofs_.nf, np) += dp;
  return v;
}

BcprReport BcprPreconditioner::report() const {
  BcprReport r = report_;
  r.applications = applications_;
  r.inner_iterations = inner_iterations_;
  r.inner_unconverged = inner_unconverged_;
  return r;
}

}  // namespace bcpr
