#include "bcpr/linalg/sparse.hpp"

#include <cmath>

namespace bcpr::linalg {

SparseMatrix extract_submatrix(const SparseMatrix& A, std::span<const int> rows,
                               std::span<const int> cols) {
  std::vector<int> lookup(A.cols(), -1);
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (cols[j] < 0 || cols[j] >= A.cols()) throw std::invalid_argument("column index out of range");
    lookup[cols[j]] = static_cast<int>(j);
  }
  std::vector<Triplet> trip;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= A.rows()) throw std::invalid_argument("row index out of range");
    for (SparseMatrix::InnerIterator it(A, rows[i]); it; ++it) {
      const int j = lookup[it.col()];
      if (j >= 0) trip.emplace_back(static_cast<int>(i), j, it.value());
    }
  }
  SparseMatrix out(static_cast<int>(rows.size()), static_cast<int>(cols.size()));
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

SparseMatrix block(const SparseMatrix& A, int r0, int nr, int c0, int nc) {
  if (r0 < 0 || c0 < 0 || r0 + nr > A.rows() || c0 + nc > A.cols())
    throw std::invalid_argument("block out of range");
  return SparseMatrix(A.block(r0, c0, nr, nc));
}

void drop_small(SparseMatrix& A, double threshold) {
  A.prune([threshold](int, int, double v) { return std::abs(v) >= threshold && v != 0.0; });
}

bool csr_well_formed(const SparseMatrix& A) {
  if (!A.isCompressed()) return false;
  const int* outer = A.outerIndexPtr();
  const int* inner = A.innerIndexPtr();
  for (int r = 0; r < A.rows(); ++r) {
    if (outer[r + 1] < outer[r]) return false;
    for (int k = outer[r]; k < outer[r + 1]; ++k) {
      if (inner[k] < 0 || inner[k] >= A.cols()) return false;
      if (k > outer[r] && inner[k] <= inner[k - 1]) return false;
    }
  }
  return true;
}

}  // namespace bcpr::linalg
