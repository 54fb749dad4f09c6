#pragma once

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <Eigen/LU>

#include "bcpr/linalg/sparse.hpp"

namespace bcpr::linalg {

class SingularMatrixError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Partial-pivoting LU for small dense systems. A pivot below
/// n * eps * max|a_ij| is reported as singular instead of being divided by.
template <typename Scalar>
class DenseLu {
public:
  DenseLu() = default;
  explicit DenseLu(const Dense<Scalar>& A) { compute(A); }

  void compute(const Dense<Scalar>& A) {
    if (A.rows() != A.cols()) throw std::invalid_argument("dense LU needs a square matrix");
    lu_.compute(A);
    const Scalar scale = A.size() ? A.cwiseAbs().maxCoeff() : Scalar(0);
    const Scalar tol = Scalar(A.rows()) * std::numeric_limits<Scalar>::epsilon() * scale;
    const auto& u = lu_.matrixLU();
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
      if (!(std::abs(u(i, i)) > tol)) {
        std::ostringstream msg;
        msg << "zero pivot in column " << i << " of a " << A.rows() << "x" << A.cols()
            << " matrix";
        throw SingularMatrixError(msg.str());
      }
    }
  }

  template <typename Rhs>
  Dense<Scalar> solve(const Rhs& b) const {
    return lu_.solve(b);
  }

  Eigen::Index rows() const { return lu_.rows(); }

private:
  Eigen::PartialPivLU<Dense<Scalar>> lu_;
};

template <typename Scalar>
Vec<Scalar> dense_lu_solve(const Dense<Scalar>& A, const Vec<Scalar>& b) {
  if (A.rows() != b.size()) throw std::invalid_argument("dense_lu_solve: dimension mismatch");
  return DenseLu<Scalar>(A).solve(b);
}

}  // namespace bcpr::linalg
