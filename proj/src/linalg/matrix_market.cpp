#include "bcpr/linalg/matrix_market.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace bcpr::linalg {

void write_matrix_market(const SparseMatrix& A, const std::string& path) {
  std::FILE* out = std::fopen(path.c_str(), "w");
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  std::fprintf(out, "%%%%MatrixMarket matrix coordinate real general\n");
  std::fprintf(out, "%ld %ld %ld\n", static_cast<long>(A.rows()), static_cast<long>(A.cols()),
               static_cast<long>(A.nonZeros()));
  for (int i = 0; i < A.outerSize(); ++i)
    for (SparseMatrix::InnerIterator it(A, i); it; ++it)
      std::fprintf(out, "%ld %ld %.17g\n", static_cast<long>(it.row()) + 1,
                   static_cast<long>(it.col()) + 1, it.value());
  if (std::fclose(out) != 0) throw IoError("error while writing '" + path + "'");
}

SparseMatrix read_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw IoError(path + ": empty file");
  std::string lower = line;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  std::istringstream banner(lower);
  std::string tag, object, format, field, symmetry;
  banner >> tag >> object >> format >> field >> symmetry;
  if (tag != "%%matrixmarket" || object != "matrix" || format != "coordinate")
    throw IoError(path + ": only coordinate matrices are supported");
  if (field != "real" && field != "integer")
    throw IoError(path + ": unsupported field '" + field + "'");
  if (symmetry != "general" && symmetry != "symmetric")
    throw IoError(path + ": unsupported symmetry '" + symmetry + "'");

  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line[0] != '%') break;
  }
  long rows = 0, cols = 0, entries = 0;
  if (!(std::istringstream(line) >> rows >> cols >> entries) || rows < 0 || cols < 0 ||
      entries < 0)
    throw IoError(path + ":" + std::to_string(lineno) + ": bad size line");

  std::vector<Triplet> trip;
  trip.reserve(entries);
  for (long k = 0; k < entries; ++k) {
    if (!std::getline(in, line))
      throw IoError(path + ": expected " + std::to_string(entries) + " entries, found " +
                    std::to_string(k));
    ++lineno;
    long i = 0, j = 0;
    double v = 0.0;
    std::istringstream ls(line);
    if (!(ls >> i >> j >> v) || i < 1 || i > rows || j < 1 || j > cols)
      throw IoError(path + ":" + std::to_string(lineno) + ": bad entry");
    trip.emplace_back(static_cast<int>(i - 1), static_cast<int>(j - 1), v);
    if (symmetry == "symmetric" && i != j)
      trip.emplace_back(static_cast<int>(j - 1), static_cast<int>(i - 1), v);
  }
  SparseMatrix A(rows, cols);
  A.setFromTriplets(trip.begin(), trip.end());
  A.makeCompressed();
  return A;
}

}  // namespace bcpr::linalg
