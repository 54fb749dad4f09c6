#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "bcpr/linalg/sparse.hpp"

namespace bcpr::linalg {

class PreconditionerBuildError : public std::runtime_error {
public:
  PreconditionerBuildError(const std::string& what, int row)
      : std::runtime_error(what), row_(row) {}
  int row() const { return row_; }

private:
  int row_;
};

inline constexpr double kTinyPivot = 1e-300;

/// Inverse diagonal of A.
template <typename Scalar>
class Jacobi {
public:
  Jacobi() = default;
  explicit Jacobi(const Csr<Scalar>& A) { build(A); }

  void build(const Csr<Scalar>& A) {
    inv_diag_ = A.diagonal();
    for (Eigen::Index i = 0; i < inv_diag_.size(); ++i) {
      if (!(std::abs(inv_diag_(i)) >= kTinyPivot)) {
        std::ostringstream msg;
        msg << "zero diagonal entry in row " << i;
        throw PreconditionerBuildError(msg.str(), static_cast<int>(i));
      }
      inv_diag_(i) = Scalar(1) / inv_diag_(i);
    }
  }

  Vec<Scalar> operator()(const Vec<Scalar>& r) const { return inv_diag_.cwiseProduct(r); }
  const Vec<Scalar>& inverse_diagonal() const { return inv_diag_; }

private:
  Vec<Scalar> inv_diag_;
};

/// Zero fill-in incomplete LU. L (unit lower) and U share the pattern of A
/// and are stored together in one matrix.
template <typename Scalar>
class Ilu0 {
public:
  Ilu0() = default;
  explicit Ilu0(const Csr<Scalar>& A) { build(A); }

  void build(const Csr<Scalar>& A) {
    if (A.rows() != A.cols()) throw std::invalid_argument("ILU(0) needs a square matrix");
    lu_ = A;
    lu_.makeCompressed();
    const int n = static_cast<int>(lu_.rows());
    const int* outer = lu_.outerIndexPtr();
    const int* inner = lu_.innerIndexPtr();
    Scalar* val = lu_.valuePtr();
    diag_pos_.assign(n, -1);
    for (int i = 0; i < n; ++i)
      for (int k = outer[i]; k < outer[i + 1]; ++k)
        if (inner[k] == i) diag_pos_[i] = k;

    std::vector<int> pos(n, -1);
    for (int i = 0; i < n; ++i) {
      for (int k = outer[i]; k < outer[i + 1]; ++k) pos[inner[k]] = k;
      for (int k = outer[i]; k < outer[i + 1] && inner[k] < i; ++k) {
        const int j = inner[k];
        const Scalar piv = val[diag_pos_[j]];
        val[k] /= piv;
        const Scalar lij = val[k];
        for (int kk = diag_pos_[j] + 1; kk < outer[j + 1]; ++kk) {
          const int p = pos[inner[kk]];
          if (p >= 0) val[p] -= lij * val[kk];
        }
      }
      if (diag_pos_[i] < 0 || !(std::abs(val[diag_pos_[i]]) >= kTinyPivot)) {
        std::ostringstream msg;
        msg << "zero pivot in ILU(0) at row " << i;
        throw PreconditionerBuildError(msg.str(), i);
      }
      for (int k = outer[i]; k < outer[i + 1]; ++k) pos[inner[k]] = -1;
    }
  }

  Vec<Scalar> operator()(const Vec<Scalar>& r) const {
    const int n = static_cast<int>(lu_.rows());
    const int* outer = lu_.outerIndexPtr();
    const int* inner = lu_.innerIndexPtr();
    const Scalar* val = lu_.valuePtr();
    Vec<Scalar> y = r;
    for (int i = 0; i < n; ++i) {
      Scalar s = y(i);
      for (int k = outer[i]; k < diag_pos_[i]; ++k) s -= val[k] * y(inner[k]);
      y(i) = s;
    }
    for (int i = n - 1; i >= 0; --i) {
      Scalar s = y(i);
      for (int k = diag_pos_[i] + 1; k < outer[i + 1]; ++k) s -= val[k] * y(inner[k]);
      y(i) = s / val[diag_pos_[i]];
    }
    return y;
  }

  /// Combined factors: strictly lower part is L (unit diagonal implied), the rest is U.
  const Csr<Scalar>& factors() const { return lu_; }

private:
  Csr<Scalar> lu_;
  std::vector<int> diag_pos_;
};

/// Reverse Cuthill-McKee ordering of the symmetrized graph of A.
/// perm[new] = old.
std::vector<int> rcm_ordering(const SparseMatrix& A);

/// P A P^T for perm[new] = old.
SparseMatrix permute_symmetric(const SparseMatrix& A, const std::vector<int>& perm);

}  // namespace bcpr::linalg
