#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace bcpr::linalg {

/// Compressed sparse row storage with sorted column indices.
template <typename Scalar>
using Csr = Eigen::SparseMatrix<Scalar, Eigen::RowMajor, int>;

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Dense = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using SparseMatrix = Csr<double>;
using Vector = Vec<double>;
using DenseMatrix = Dense<double>;
using Triplet = Eigen::Triplet<double, int>;

class NumericError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

template <typename Scalar>
Vec<Scalar> spmv(const Csr<Scalar>& A, const Vec<Scalar>& x) {
  if (A.cols() != x.size()) throw std::invalid_argument("spmv: dimension mismatch");
  return A * x;
}

template <typename Scalar>
Csr<Scalar> transpose(const Csr<Scalar>& A) {
  return Csr<Scalar>(A.transpose());
}

template <typename Scalar>
Vec<Scalar> extract_diag(const Csr<Scalar>& A) {
  return A.diagonal();
}

/// A(rows, cols) as a dense block, preserving the requested ordering.
/// Rows of A are scanned with a column lookup table, so the cost is the
/// number of stored entries in the requested rows.
template <typename Scalar>
Dense<Scalar> extract_dense(const Csr<Scalar>& A, std::span<const int> rows,
                            std::span<const int> cols, std::vector<int>& col_lookup) {
  if (col_lookup.size() != static_cast<std::size_t>(A.cols())) col_lookup.assign(A.cols(), -1);
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (cols[j] < 0 || cols[j] >= A.cols()) throw std::invalid_argument("column index out of range");
    col_lookup[cols[j]] = static_cast<int>(j);
  }
  Dense<Scalar> out = Dense<Scalar>::Zero(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= A.rows()) {
      for (int c : cols) col_lookup[c] = -1;
      throw std::invalid_argument("row index out of range");
    }
    for (typename Csr<Scalar>::InnerIterator it(A, rows[i]); it; ++it) {
      const int j = col_lookup[it.col()];
      if (j >= 0) out(i, j) = it.value();
    }
  }
  for (int c : cols) col_lookup[c] = -1;
  return out;
}

template <typename Scalar>
Dense<Scalar> extract_dense(const Csr<Scalar>& A, std::span<const int> rows,
                            std::span<const int> cols) {
  std::vector<int> lookup;
  return extract_dense(A, rows, cols, lookup);
}

/// Sparse counterpart of extract_dense.
SparseMatrix extract_submatrix(const SparseMatrix& A, std::span<const int> rows,
                               std::span<const int> cols);

/// Contiguous block A[r0:r0+nr, c0:c0+nc].
SparseMatrix block(const SparseMatrix& A, int r0, int nr, int c0, int nc);

/// Removes stored entries with |a| < threshold and all exact zeros.
void drop_small(SparseMatrix& A, double threshold);

/// Number of stored entries.
inline long nnz(const SparseMatrix& A) { return A.nonZeros(); }

/// Checks the CSR invariants: monotone offsets, in-range strictly increasing indices.
bool csr_well_formed(const SparseMatrix& A);

}  // namespace bcpr::linalg
