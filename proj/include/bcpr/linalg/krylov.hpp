#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "bcpr/linalg/sparse.hpp"

namespace bcpr::linalg {

struct KrylovOptions {
  double tol = 1e-6;
  int maxit = 300;
  int restart = 0;  // 0: full GMRES, no restart
};

template <typename Scalar>
struct KrylovResult {
  Vec<Scalar> x;
  int iterations = 0;
  bool converged = false;
  bool breakdown = false;
  /// Relative residual norms; entry 0 is the initial residual (1).
  std::vector<Scalar> residual_history;
};

/// Preconditioner that returns its input.
struct IdentityOperator {
  template <typename V>
  V operator()(const V& v) const {
    return v;
  }
};

namespace detail {
template <typename Scalar>
void require_finite(const Vec<Scalar>& v, const char* what) {
  if (!v.allFinite()) throw NumericError(std::string("non-finite value in ") + what);
}
}  // namespace detail

/// Right-preconditioned GMRES with modified Gram-Schmidt Arnoldi and Givens
/// rotations, started from x0 = 0. The preconditioned directions are kept,
/// so a preconditioner that varies between calls is handled correctly.
/// Stops once ||r_k|| / ||r_0|| < tol.
template <typename Scalar, typename ApplyA, typename ApplyM>
KrylovResult<Scalar> gmres(ApplyA&& apply_A, const Vec<Scalar>& b, ApplyM&& apply_M,
                           const KrylovOptions& opt) {
  const Eigen::Index n = b.size();
  KrylovResult<Scalar> res;
  res.x = Vec<Scalar>::Zero(n);
  detail::require_finite(b, "GMRES right-hand side");
  const Scalar bnorm = b.norm();
  res.residual_history.push_back(Scalar(1));
  if (bnorm == Scalar(0)) {
    res.converged = true;
    return res;
  }
  const int m_max = opt.restart > 0 ? std::min(opt.restart, opt.maxit) : opt.maxit;

  Vec<Scalar> r = b;
  Scalar rel = Scalar(1);
  while (res.iterations < opt.maxit) {
    const Scalar beta = r.norm();
    std::vector<Vec<Scalar>> V;
    std::vector<Vec<Scalar>> Z;
    V.reserve(m_max + 1);
    Z.reserve(m_max);
    V.push_back(r / beta);
    Dense<Scalar> H = Dense<Scalar>::Zero(m_max + 1, m_max);
    Vec<Scalar> cs = Vec<Scalar>::Zero(m_max), sn = Vec<Scalar>::Zero(m_max);
    Vec<Scalar> g = Vec<Scalar>::Zero(m_max + 1);
    g(0) = beta;
    int k = 0;
    bool stop = false;
    for (; k < m_max && res.iterations < opt.maxit; ++k) {
      Z.push_back(apply_M(V[k]));
      detail::require_finite(Z.back(), "GMRES preconditioner output");
      Vec<Scalar> w = apply_A(Z.back());
      detail::require_finite(w, "GMRES operator output");
      for (int i = 0; i <= k; ++i) {
        H(i, k) = w.dot(V[i]);
        w -= H(i, k) * V[i];
      }
      const Scalar hnext = w.norm();
      H(k + 1, k) = hnext;
      for (int i = 0; i < k; ++i) {
        const Scalar t = cs(i) * H(i, k) + sn(i) * H(i + 1, k);
        H(i + 1, k) = -sn(i) * H(i, k) + cs(i) * H(i + 1, k);
        H(i, k) = t;
      }
      const Scalar h = std::hypot(H(k, k), H(k + 1, k));
      if (h == Scalar(0)) {
        res.breakdown = true;
        stop = true;
        break;
      }
      cs(k) = H(k, k) / h;
      sn(k) = H(k + 1, k) / h;
      H(k, k) = h;
      H(k + 1, k) = Scalar(0);
      g(k + 1) = -sn(k) * g(k);
      g(k) = cs(k) * g(k);
      ++res.iterations;
      rel = std::abs(g(k + 1)) / bnorm;
      res.residual_history.push_back(rel);
      // hnext == 0 is a happy breakdown: the Krylov space holds the solution.
      if (rel < opt.tol || !(hnext > Scalar(0))) {
        ++k;
        stop = true;
        break;
      }
      V.push_back(w / hnext);
    }
    if (k > 0) {
      const Vec<Scalar> y =
          H.topLeftCorner(k, k).template triangularView<Eigen::Upper>().solve(g.head(k));
      for (int i = 0; i < k; ++i) res.x += y(i) * Z[i];
    }
    if (stop || res.iterations >= opt.maxit) break;
    r = b - apply_A(res.x);
  }
  res.converged = rel < opt.tol;
  return res;
}

/// Generalized conjugate residual with right preconditioning, x0 = 0.
/// Returns the last (minimal-residual) iterate with converged == false when
/// maxit is reached.
template <typename Scalar, typename ApplyA, typename ApplyM>
KrylovResult<Scalar> gcr(ApplyA&& apply_A, const Vec<Scalar>& b, ApplyM&& apply_M,
                         const KrylovOptions& opt) {
  const Eigen::Index n = b.size();
  KrylovResult<Scalar> res;
  res.x = Vec<Scalar>::Zero(n);
  detail::require_finite(b, "GCR right-hand side");
  const Scalar bnorm = b.norm();
  res.residual_history.push_back(Scalar(1));
  if (bnorm == Scalar(0)) {
    res.converged = true;
    return res;
  }
  Vec<Scalar> r = b;
  std::vector<Vec<Scalar>> U, C;
  U.reserve(opt.maxit);
  C.reserve(opt.maxit);
  for (int k = 0; k < opt.maxit; ++k) {
    Vec<Scalar> u = apply_M(r);
    detail::require_finite(u, "GCR preconditioner output");
    Vec<Scalar> c = apply_A(u);
    detail::require_finite(c, "GCR operator output");
    for (std::size_t j = 0; j < C.size(); ++j) {
      const Scalar a = c.dot(C[j]);
      c -= a * C[j];
      u -= a * U[j];
    }
    const Scalar cn = c.norm();
    if (!(cn > Scalar(0))) {
      res.breakdown = true;
      break;
    }
    c /= cn;
    u /= cn;
    const Scalar a = c.dot(r);
    res.x += a * u;
    r -= a * c;
    U.push_back(std::move(u));
    C.push_back(std::move(c));
    ++res.iterations;
    const Scalar rel = r.norm() / bnorm;
    res.residual_history.push_back(rel);
    if (rel < opt.tol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace bcpr::linalg
