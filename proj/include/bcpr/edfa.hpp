#pragma once

#include <string>
#include <vector>

#include "bcpr/discretization.hpp"
#include "bcpr/grid.hpp"
#include "bcpr/linalg/sparse.hpp"

namespace bcpr {

/// Sparsity prescription for the columns of the decoupling factor.
///
/// Static names: Orig (level 0), A (1), B (1 + laterals), C (2), D (2 + laterals),
/// E (3), F (4). Dynamic: "dyn:<n_ent>:<n_add>". "full" uses every face.
struct PatternSpec {
  enum class Kind { Static, Dynamic, Full };
  Kind kind = Kind::Static;
  int level = 0;
  bool laterals = false;
  int n_ent = 0;
  int n_add = 1;

  static PatternSpec parse(const std::string& text);
  static PatternSpec fixed(int level, bool laterals) { return {Kind::Static, level, laterals, 0, 1}; }
  static PatternSpec dynamic(int n_ent, int n_add);
  static PatternSpec full() { return {Kind::Full, 0, false, 0, 1}; }
  std::string name() const;
};

/// Faces whose values may be non-zero in column `cell` of the factor.
/// Level L walks L cells in each of the six axis directions and adds the far
/// face of every visited cell; laterals adds its four side faces as well.
/// Sorted, without duplicates.
std::vector<Index> static_pattern(const HexMesh& mesh, Index cell, int level, bool laterals);

struct SparseColumn {
  std::vector<Index> index;  // sorted
  std::vector<double> value;
};

/// Column q of a matrix, read from the row-major transpose.
SparseColumn column_of(const SparseMatrix& At, Index q);

struct EdfaColumn {
  std::vector<Index> pattern;
  Vector values;  // aligned with pattern
  int solves = 0;
  bool fallback = false;    // restricted matrix was singular; level 0 used instead
  bool early_stop = false;  // dynamic growth ended with a zero residual
};

/// -J_r f = R j restricted to `pattern`. The non-zeros of j are always included.
EdfaColumn edfa_column_static(const SparseMatrix& Jpipi, const SparseColumn& j,
                              std::vector<Index> pattern);

/// Residual-driven pattern growth: up to n_add positions per step, n_ent in total.
/// Residual magnitudes that agree to 40 bits are ties, won by the lower index.
/// `JpipiT` is the row-major transpose of Jpipi.
EdfaColumn edfa_column_dynamic(const SparseMatrix& Jpipi, const SparseMatrix& JpipiT,
                               const SparseColumn& j, int n_ent, int n_add);

struct EdfaStats {
  long pattern_entries = 0;
  int min_pattern = 0;
  int max_pattern = 0;
  long restricted_solves = 0;
  int fallbacks = 0;
  int early_stops = 0;
};

struct EdfaFactor {
  SparseMatrix F;  // n_f x (n_E + n_w); well columns empty
  std::vector<int> column_size;
  EdfaStats stats;
};

/// Assembles the factor column by column, optionally on `threads` workers.
/// The result does not depend on the thread count.
EdfaFactor build_edfa(const HexMesh& mesh, const BlockJacobian& J, const PatternSpec& spec,
                      int threads = 1);

/// J_pp + J_ppi F, dropping only entries below 1e-300 in magnitude.
SparseMatrix schur_approx(const SparseMatrix& Jpp, const SparseMatrix& Jppi, const SparseMatrix& F);

}  // namespace bcpr
