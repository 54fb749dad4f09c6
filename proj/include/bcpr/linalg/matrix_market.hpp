#pragma once

#include <stdexcept>
#include <string>

#include "bcpr/linalg/sparse.hpp"

namespace bcpr::linalg {

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Writes a "matrix coordinate real general" file with 17 significant digits,
/// so reading it back reproduces every stored value exactly.
void write_matrix_market(const SparseMatrix& A, const std::string& path);

/// Reads coordinate real/integer general or symmetric files. Duplicates are summed.
SparseMatrix read_matrix_market(const std::string& path);

}  // namespace bcpr::linalg
