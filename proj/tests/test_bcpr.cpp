#include <gtest/gtest.h>

#include <limits>
#include <random>

#include "bcpr/bcpr_preconditioner.hpp"
#include "bcpr/linalg/krylov.hpp"
#include "bcpr/simulator.hpp"
#include "support.hpp"

namespace bcpr {
namespace {

using linalg::DenseMatrix;

Vector random_vector(Index n, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

BlockJacobian jacobian_of(const Model& m, unsigned seed) {
  std::mt19937 rng(seed);
  const State s = testing::random_state(m, rng);
  const State prev = testing::random_state(m, rng);
  return assemble_jacobian(m, s, prev, 0.5);
}

SparseMatrix diagonal(const Vector& d) {
  SparseMatrix D(d.size(), d.size());
  std::vector<linalg::Triplet> t;
  for (Index i = 0; i < d.size(); ++i) t.emplace_back(i, i, d[i]);
  D.setFromTriplets(t.begin(), t.end());
  return D;
}

// Block-diagonal toy: every coupling block is zero.
BlockJacobian decoupled_toy(const HexMesh& mesh, Index nw, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(0.5, 5.0);
  BlockJacobian J;
  J.dofs = {mesh.num_faces(), mesh.num_cells(), nw};
  const Index nf = J.dofs.nf, np = J.dofs.n_pressure(), ne = J.dofs.ne;
  auto diag = [&](Index n) {
    Vector d(n);
    for (Index i = 0; i < n; ++i) d[i] = u(rng);
    return diagonal(d);
  };
  J.pipi = diag(nf);
  J.pp = diag(np);
  J.ss = diag(ne);
  J.pip.resize(nf, np);
  J.pis.resize(nf, ne);
  J.ppi.resize(np, nf);
  J.ps.resize(np, ne);
  J.spi.resize(ne, nf);
  J.sp.resize(ne, np);
  return J;
}

BcprOptions options(const std::string& pattern) {
  BcprOptions o;
  o.pattern = PatternSpec::parse(pattern);
  return o;
}

TEST(Bcpr, ZeroInputGivesZeroOutput) {
  const Model m = testing::small_model(4, 4, 2, true, 1.0, 3);
  BcprPreconditioner P(m.mesh, options("A"));
  P.build(jacobian_of(m, 1));
  const Vector v = P(Vector::Zero(m.layout().total()));
  EXPECT_EQ(v, Vector::Zero(m.layout().total()));
  const auto [dpi, dp] = P.apply_second_stage(Vector::Zero(m.layout().nf),
                                              Vector::Zero(m.layout().n_pressure()));
  EXPECT_EQ(dpi.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(dp.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Bcpr, DecoupledDiagonalToyIsSolvedExactly) {
  const HexMesh mesh = build_cartesian(3, 3, 2, 1.0, 1.0, 1.0);
  std::mt19937 rng(2);
  const BlockJacobian J = decoupled_toy(mesh, 2, rng);
  BcprPreconditioner P(mesh, options("C"));
  P.build(J);
  const SparseMatrix A = J.full();
  for (int trial = 0; trial < 5; ++trial) {
    const Vector w = random_vector(J.dofs.total(), rng);
    const Vector v = P(w);
    EXPECT_LE((A * v - w).cwiseAbs().maxCoeff(), 1e-15 * w.cwiseAbs().maxCoeff());
  }
  // Saturation-only input: the second stage leaves it alone.
  Vector w = Vector::Zero(J.dofs.total());
  w.tail(J.dofs.ne) = random_vector(J.dofs.ne, rng);
  const Vector v = P(w);
  EXPECT_EQ(v.head(J.dofs.off_s()).cwiseAbs().maxCoeff(), 0.0);
  const Vector inv_ss = J.ss.diagonal().cwiseInverse();
  EXPECT_EQ(v.tail(J.dofs.ne), Vector(w.tail(J.dofs.ne).cwiseProduct(inv_ss)));
  // GMRES sees the identity.
  const auto r = linalg::gmres<double>([&A](const Vector& x) -> Vector { return A * x; },
                                       random_vector(J.dofs.total(), rng), P, {});
  EXPECT_EQ(r.iterations, 1);
}

TEST(Bcpr, OrigHasUnitFillRatio) {
  const Model m = testing::small_model(5, 5, 2, false);
  BcprPreconditioner P(m.mesh, options("Orig"));
  P.build(jacobian_of(m, 3));
  EXPECT_EQ(P.report().rs, 1.0);
  EXPECT_EQ(P.report().nnz_schur, P.report().nnz_schur_orig);
}

TEST(Bcpr, FillRatioIncreasesWithPattern) {
  const Model m = testing::small_model(10, 10, 4, false);
  const BlockJacobian J = jacobian_of(m, 4);
  double prev = 0.0;
  for (const std::string name : {"Orig", "A", "C", "E", "F"}) {
    BcprPreconditioner P(m.mesh, options(name));
    P.build(J);
    EXPECT_GE(P.report().rs, 1.0) << name;
    EXPECT_GE(P.report().rs, prev) << name;
    prev = P.report().rs;
  }
}

TEST(Bcpr, FirstStageFollowedBySecondStage) {
  const Model m = testing::small_model(4, 4, 2, true, 1.5, 5);
  const BlockJacobian J = jacobian_of(m, 5);
  BcprPreconditioner P(m.mesh, options("A"));
  P.build(J);
  const DenseMatrix A = DenseMatrix(J.full());
  const DofLayout d = J.dofs;
  std::mt19937 rng(6);
  for (int trial = 0; trial < 3; ++trial) {
    const Vector w = random_vector(d.total(), rng);
    // v = M1 w; r = w - J v; v += M2 r, with dense algebra for the outer steps.
    Vector v(d.total());
    for (Index i = 0; i < d.total(); ++i) v[i] = w[i] / A(i, i);
    const Vector r = w - A * v;
    const auto [dpi, dp] = P.apply_second_stage(r.head(d.nf), r.segment(d.nf, d.n_pressure()));
    v.head(d.nf) += dpi;
    v.segment(d.nf, d.n_pressure()) += dp;
    const Vector got = P(w);
    EXPECT_LE((got - v).cwiseAbs().maxCoeff(), 1e-12 * v.cwiseAbs().maxCoeff());
  }
}

TEST(Bcpr, SecondStageFollowsBlockFactorization) {
  const Model m = testing::small_model(4, 4, 2, true, 1.5, 6);
  const BlockJacobian J = jacobian_of(m, 7);
  BcprPreconditioner P(m.mesh, options("B"));
  P.build(J);
  const DenseMatrix Jppi(J.ppi), Jpip(J.pip);
  std::mt19937 rng(8);
  for (int trial = 0; trial < 3; ++trial) {
    const Vector r_pi = random_vector(J.dofs.nf, rng);
    const Vector r_p = random_vector(J.dofs.n_pressure(), rng);
    // Lower solve, Schur solve, upper solve; inner solvers taken from P so the
    // iteration counts agree.
    const Vector t1 = P.solve_pipi(r_pi);
    const Vector tp = r_p - Jppi * t1;
    const Vector dp = P.solve_schur(tp);
    const Vector t2 = r_pi - Jpip * dp;
    const Vector dpi = P.solve_pipi(t2);
    const auto [got_pi, got_p] = P.apply_second_stage(r_pi, r_p);
    EXPECT_LE((got_p - dp).norm(), 1e-12 * dp.norm());
    EXPECT_LE((got_pi - dpi).norm(), 1e-12 * dpi.norm());
  }
}

TEST(Bcpr, SchurSolveIsAmgPreconditionedGcr) {
  const Model m = testing::small_model(5, 5, 2, false);
  BcprPreconditioner P(m.mesh, options("A"));
  P.build(jacobian_of(m, 9));
  const SparseMatrix& S = P.schur();
  const linalg::AmgHierarchy<double> H(S, P.options().amg);
  linalg::KrylovOptions opt;
  opt.tol = P.options().inner_tol;
  opt.maxit = P.options().inner_maxit;
  std::mt19937 rng(10);
  const Vector b = random_vector(S.rows(), rng);
  const auto ref =
      linalg::gcr<double>([&S](const Vector& x) -> Vector { return S * x; }, b, H, opt);
  EXPECT_EQ(P.solve_schur(b), ref.x);
}

TEST(Bcpr, ExactLimitInvertsPressureBlock) {
  for (bool gravity : {false, true}) {
    const Model m = testing::small_model(4, 4, 2, gravity, 2.0, 7);
    ASSERT_LE(m.mesh.num_faces(), 500);
    const BlockJacobian J = jacobian_of(m, 11);
    BcprOptions o = options("full");
    o.exact_pipi = true;
    o.inner_tol = 1e-14;
    o.inner_maxit = 1000;
    BcprPreconditioner P(m.mesh, o);
    P.build(J);
    const DenseMatrix JPP = DenseMatrix(J.pressure_block());
    std::mt19937 rng(12);
    const Vector r = random_vector(JPP.rows(), rng);
    const Vector ref = JPP.fullPivLu().solve(r);
    const auto [dpi, dp] = P.apply_second_stage(r.head(J.dofs.nf), r.tail(J.dofs.n_pressure()));
    Vector got(JPP.rows());
    got << dpi, dp;
    EXPECT_LE((got - ref).norm(), 1e-8 * ref.norm()) << "gravity " << gravity;
  }
}

TEST(Bcpr, DecoupledPressureBlocksAreSolvedSeparately) {
  const Model m = testing::small_model(4, 3, 2, false);
  BlockJacobian J = jacobian_of(m, 13);
  J.pip = SparseMatrix(J.pip.rows(), J.pip.cols());
  J.ppi = SparseMatrix(J.ppi.rows(), J.ppi.cols());
  BcprPreconditioner P(m.mesh, options("A"));
  P.build(J);
  std::mt19937 rng(14);
  const Vector r_pi = random_vector(J.dofs.nf, rng);
  const Vector r_p = random_vector(J.dofs.n_pressure(), rng);
  const auto [dpi, dp] = P.apply_second_stage(r_pi, r_p);
  EXPECT_EQ(dpi, P.solve_pipi(r_pi));
  EXPECT_EQ(dp, P.solve_schur(r_p));
  EXPECT_EQ(DenseMatrix(P.schur()), DenseMatrix(J.pp));
}

TEST(Bcpr, GravityOffReusesFaceHierarchyAndFactor) {
  const Model m = testing::small_model(5, 4, 2, false, 1.0, 8);
  BcprPreconditioner reuse(m.mesh, options("C"));
  BcprOptions fo = options("C");
  fo.force_rebuild = true;
  BcprPreconditioner fresh(m.mesh, fo);
  std::mt19937 rng(15);
  for (unsigned k = 0; k < 4; ++k) {
    const BlockJacobian J = jacobian_of(m, 20 + k);
    reuse.build(J);
    fresh.build(J);
    const Vector w = random_vector(J.dofs.total(), rng);
    EXPECT_EQ(reuse(w), fresh(w));
  }
  EXPECT_EQ(reuse.report().builds, 4);
  EXPECT_EQ(reuse.report().pipi_rebuilds, 1);
  EXPECT_EQ(fresh.report().pipi_rebuilds, 4);
}

TEST(Bcpr, GravityOnRebuildsAndMatchesForcedRebuild) {
  const Model m = testing::small_model(5, 4, 2, true, 1.0, 9);
  BcprPreconditioner reuse(m.mesh, options("A"));
  BcprOptions fo = options("A");
  fo.force_rebuild = true;
  BcprPreconditioner fresh(m.mesh, fo);
  std::mt19937 rng(16);
  for (unsigned k = 0; k < 3; ++k) {
    const BlockJacobian J = jacobian_of(m, 30 + k);
    reuse.build(J);
    fresh.build(J);
    const Vector w = random_vector(J.dofs.total(), rng);
    EXPECT_EQ(reuse(w), fresh(w));
  }
  EXPECT_EQ(reuse.report().pipi_rebuilds, 3);
}

TEST(Bcpr, ThreadCountDoesNotChangeOutput) {
  const Model m = testing::small_model(6, 5, 3, true, 2.0, 10);
  const BlockJacobian J = jacobian_of(m, 17);
  BcprOptions o = options("dyn:6:2");
  BcprPreconditioner one(m.mesh, o);
  o.threads = 3;
  BcprPreconditioner three(m.mesh, o);
  one.build(J);
  three.build(J);
  std::mt19937 rng(18);
  const Vector w = random_vector(J.dofs.total(), rng);
  EXPECT_EQ(one(w), three(w));
}

TEST(Bcpr, ZeroDiagonalIsReportedWithItsRow) {
  const Model m = testing::small_model(3, 3, 1, false);
  BlockJacobian J = jacobian_of(m, 19);
  J.ss.coeffRef(2, 2) = 0.0;
  BcprPreconditioner P(m.mesh, options("A"));
  try {
    P.build(J);
    FAIL() << "expected a build error";
  } catch (const linalg::PreconditionerBuildError& e) {
    EXPECT_EQ(e.row(), J.dofs.off_s() + 2);
    EXPECT_NE(std::string(e.what()).find(std::to_string(J.dofs.off_s() + 2)), std::string::npos);
  }
}

TEST(Bcpr, NonFiniteInputNamesTheStage) {
  const Model m = testing::small_model(3, 3, 1, false);
  BcprPreconditioner P(m.mesh, options("A"));
  P.build(jacobian_of(m, 21));
  Vector w = Vector::Ones(m.layout().total());
  w[3] = std::numeric_limits<double>::quiet_NaN();
  try {
    P(w);
    FAIL() << "expected a numeric error";
  } catch (const linalg::NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("Jacobi"), std::string::npos);
  }
  EXPECT_THROW(P(Vector::Ones(3)), std::invalid_argument);
}

TEST(Bcpr, InnerNonConvergenceIsCountedNotThrown) {
  const Model m = testing::small_model(6, 6, 2, false, 2.0, 11);
  BcprOptions o = options("A");
  o.inner_tol = 1e-15;
  o.inner_maxit = 1;
  BcprPreconditioner P(m.mesh, o);
  P.build(jacobian_of(m, 22));
  std::mt19937 rng(23);
  EXPECT_NO_THROW(P(random_vector(m.layout().total(), rng)));
  EXPECT_EQ(P.report().applications, 1);
  EXPECT_EQ(P.report().inner_unconverged, 1);
  EXPECT_EQ(P.report().inner_iterations, 1);
}

class DeskFiveSpot : public ::testing::Test {
protected:
  static void SetUpTestSuite() {
    sc_ = new Scenario(
        build_five_spot(20, 20, 4, Vec3(6.096, 3.048, 0.6096), 20.0, 490.0, false));
    const State s0 = initial_state(*sc_);
    J_ = new BlockJacobian(assemble_jacobian(sc_->model, s0, s0, 0.5));
    R_ = new Vector(-assemble_residual(sc_->model, s0, s0, 0.5).flat());
  }
  static void TearDownTestSuite() {
    delete sc_;
    delete J_;
    delete R_;
  }
  static int iterations(const std::string& pattern) {
    BcprPreconditioner P(sc_->model.mesh, options(pattern));
    P.build(*J_);
    const SparseMatrix& A = P.jacobian();
    return linalg::gmres<double>([&A](const Vector& x) -> Vector { return A * x; }, *R_, P,
                                 sc_->newton.linear)
        .iterations;
  }
  static Scenario* sc_;
  static BlockJacobian* J_;
  static Vector* R_;
};
Scenario* DeskFiveSpot::sc_ = nullptr;
BlockJacobian* DeskFiveSpot::J_ = nullptr;
Vector* DeskFiveSpot::R_ = nullptr;

TEST_F(DeskFiveSpot, PatternAFillRatio) {
  BcprPreconditioner P(sc_->model.mesh, options("A"));
  P.build(*J_);
  EXPECT_GT(P.report().rs, 1.0);
  EXPECT_LE(P.report().rs, 2.0);
}

TEST_F(DeskFiveSpot, PatternANeedsNoMoreIterationsThanOrig) {
  const int orig = iterations("Orig");
  const int a = iterations("A");
  EXPECT_GT(orig, 0);
  EXPECT_LE(a, orig);
}

}  // namespace
}  // namespace bcpr
