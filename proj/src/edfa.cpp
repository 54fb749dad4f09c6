#include "bcpr/edfa.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>

#include "bcpr/linalg/dense.hpp"

namespace bcpr {

PatternSpec PatternSpec::dynamic(int n_ent, int n_add) {
  if (n_ent < 0) throw std::invalid_argument("n_ent must be >= 0");
  if (n_add < 1 || (n_ent > 0 && n_add > n_ent))
    throw std::invalid_argument("n_add must satisfy 1 <= n_add <= n_ent");
  return {Kind::Dynamic, 0, false, n_ent, n_add};
}

PatternSpec PatternSpec::parse(const std::string& text) {
  static const std::vector<std::pair<std::string, PatternSpec>> named = {
      {"Orig", fixed(0, false)}, {"A", fixed(1, false)}, {"B", fixed(1, true)},
      {"C", fixed(2, false)},    {"D", fixed(2, true)},  {"E", fixed(3, false)},
      {"F", fixed(4, false)},    {"full", full()},
  };
  for (const auto& [key, spec] : named)
    if (text == key) return spec;
  if (text.rfind("dyn:", 0) == 0) {
    const auto sep = text.find(':', 4);
    if (sep != std::string::npos) {
      try {
        std::size_t a = 0, b = 0;
        const int n_ent = std::stoi(text.substr(4, sep - 4), &a);
        const int n_add = std::stoi(text.substr(sep + 1), &b);
        if (a == sep - 4 && b == text.size() - sep - 1) return dynamic(n_ent, n_add);
      } catch (const std::logic_error&) {
      }
    }
  }
  throw std::invalid_argument("unknown pattern '" + text +
                              "' (expected Orig, A-F, full or dyn:<n_ent>:<n_add>)");
}

std::string PatternSpec::name() const {
  switch (kind) {
    case Kind::Full:
      return "full";
    case Kind::Dynamic:
      return "dyn:" + std::to_string(n_ent) + ":" + std::to_string(n_add);
    case Kind::Static:
      break;
  }
  if (level == 0) return "Orig";
  if (level <= 2) return std::string(1, static_cast<char>('A' + 2 * (level - 1) + laterals));
  if (!laterals && level <= 4) return std::string(1, static_cast<char>('E' + level - 3));
  return "L" + std::to_string(level) + (laterals ? "+lat" : "");
}

std::vector<Index> static_pattern(const HexMesh& mesh, Index cell, int level, bool laterals) {
  std::vector<Index> out(mesh.cell_faces[cell].begin(), mesh.cell_faces[cell].end());
  for (int l = 0; l < kFacesPerCell; ++l) {
    Index cur = cell;
    for (int step = 0; step < level; ++step) {
      const Index nb = mesh.neighbor(cur, l);
      if (nb == kNoCell) break;
      out.push_back(mesh.cell_faces[nb][l]);
      if (laterals)
        for (int m = 0; m < kFacesPerCell; ++m)
          if (m / 2 != l / 2) out.push_back(mesh.cell_faces[nb][m]);
      cur = nb;
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

SparseColumn column_of(const SparseMatrix& At, Index q) {
  SparseColumn c;
  for (SparseMatrix::InnerIterator it(At, q); it; ++it) {
    if (it.value() == 0.0) continue;
    c.index.push_back(static_cast<Index>(it.col()));
    c.value.push_back(it.value());
  }
  return c;
}

namespace {

std::vector<Index> with_support(std::vector<Index> pattern, const SparseColumn& j) {
  pattern.insert(pattern.end(), j.index.begin(), j.index.end());
  std::sort(pattern.begin(), pattern.end());
  pattern.erase(std::unique(pattern.begin(), pattern.end()), pattern.end());
  return pattern;
}

// Solves -J_r f = R j on a sorted pattern containing the support of j.
Vector restricted_solve(const SparseMatrix& Jpipi, const SparseColumn& j,
                        const std::vector<Index>& pattern, std::vector<int>& lookup) {
  const auto Jr = linalg::extract_dense<double>(Jpipi, pattern, pattern, lookup);
  Vector rhs = Vector::Zero(static_cast<Eigen::Index>(pattern.size()));
  for (std::size_t k = 0; k < j.index.size(); ++k) {
    const auto pos = std::lower_bound(pattern.begin(), pattern.end(), j.index[k]) - pattern.begin();
    rhs[pos] = j.value[k];
  }
  return -linalg::DenseLu<double>(Jr).solve(rhs);
}

// |r| rounded to 40 mantissa bits, so that residuals equal up to round-off
// rank as ties and the lower index decides.
double rank_key(double r) {
  int e = 0;
  const double m = std::frexp(std::abs(r), &e);
  return std::ldexp(std::round(std::ldexp(m, 40)), e - 40);
}

}  // namespace

EdfaColumn edfa_column_static(const SparseMatrix& Jpipi, const SparseColumn& j,
                              std::vector<Index> pattern) {
  EdfaColumn col;
  col.pattern = with_support(std::move(pattern), j);
  std::vector<int> lookup;
  try {
    col.values = restricted_solve(Jpipi, j, col.pattern, lookup);
    col.solves = 1;
  } catch (const linalg::SingularMatrixError&) {
    col.pattern = j.index;
    col.values = restricted_solve(Jpipi, j, col.pattern, lookup);
    col.solves = 2;
    col.fallback = true;
  }
  return col;
}

EdfaColumn edfa_column_dynamic(const SparseMatrix& Jpipi, const SparseMatrix& JpipiT,
                               const SparseColumn& j, int n_ent, int n_add) {
  if (n_ent < 0 || n_add < 1) throw std::invalid_argument("invalid dynamic pattern parameters");
  EdfaColumn col;
  col.pattern = j.index;
  std::vector<int> lookup;
  const Index nf = static_cast<Index>(Jpipi.rows());
  int added = 0;
  for (;;) {
    col.values = restricted_solve(Jpipi, j, col.pattern, lookup);
    ++col.solves;
    if (added >= n_ent) break;

    // r = j + J_pipi R^T f; positions inside the pattern vanish up to round-off.
    Vector r = Vector::Zero(nf);
    for (std::size_t k = 0; k < j.index.size(); ++k) r[j.index[k]] += j.value[k];
    for (std::size_t k = 0; k < col.pattern.size(); ++k)
      for (SparseMatrix::InnerIterator it(JpipiT, col.pattern[k]); it; ++it)
        r[it.col()] += it.value() * col.values[k];

    std::vector<char> inside(nf, 0);
    for (Index p : col.pattern) inside[p] = 1;
    std::vector<Index> cand;
    for (Index p = 0; p < nf; ++p)
      if (!inside[p] && r[p] != 0.0) cand.push_back(p);
    if (cand.empty()) {
      col.early_stop = true;
      break;
    }
    const int take = std::min({n_add, n_ent - added, static_cast<int>(cand.size())});
    for (Index p : cand) r[p] = rank_key(r[p]);
    std::partial_sort(cand.begin(), cand.begin() + take, cand.end(), [&](Index a, Index b) {
      return r[a] != r[b] ? r[a] > r[b] : a < b;
    });
    col.pattern.insert(col.pattern.end(), cand.begin(), cand.begin() + take);
    std::sort(col.pattern.begin(), col.pattern.end());
    added += take;
  }
  return col;
}

EdfaFactor build_edfa(const HexMesh& mesh, const BlockJacobian& J, const PatternSpec& spec,
                      int threads) {
  const Index nf = J.dofs.nf, ne = J.dofs.ne, np = J.dofs.n_pressure();
  const SparseMatrix JpipT = linalg::transpose(J.pip);
  std::vector<EdfaColumn> cols(ne);

  if (spec.kind == PatternSpec::Kind::Full) {
    // One factorization serves every column.
    const linalg::DenseLu<double> lu{linalg::DenseMatrix(J.pipi)};
    const linalg::DenseMatrix Fd = -lu.solve(linalg::DenseMatrix(J.pip.leftCols(ne)));
    for (Index q = 0; q < ne; ++q) {
      cols[q].pattern.resize(nf);
      for (Index f = 0; f < nf; ++f) cols[q].pattern[f] = f;
      cols[q].values = Fd.col(q);
      cols[q].solves = 1;
    }
  } else {
    const SparseMatrix JpipiT = linalg::transpose(J.pipi);
    auto work = [&](Index begin, Index end) {
      for (Index q = begin; q < end; ++q) {
        const SparseColumn j = column_of(JpipT, q);
        if (spec.kind == PatternSpec::Kind::Dynamic)
          cols[q] = edfa_column_dynamic(J.pipi, JpipiT, j, spec.n_ent, spec.n_add);
        else
          cols[q] = edfa_column_static(J.pipi, j,
                                       static_pattern(mesh, q, spec.level, spec.laterals));
      }
    };
    const int nt = std::max(1, std::min<int>(threads, ne));
    if (nt == 1) {
      work(0, ne);
    } else {
      std::vector<std::thread> pool;
      for (int t = 0; t < nt; ++t)
        pool.emplace_back(work, static_cast<Index>(static_cast<long>(ne) * t / nt),
                          static_cast<Index>(static_cast<long>(ne) * (t + 1) / nt));
      for (auto& th : pool) th.join();
    }
  }

  EdfaFactor out;
  out.column_size.resize(ne);
  std::vector<linalg::Triplet> trip;
  out.stats.min_pattern = ne > 0 ? std::numeric_limits<int>::max() : 0;
  for (Index q = 0; q < ne; ++q) {
    const auto& c = cols[q];
    const int size = static_cast<int>(c.pattern.size());
    out.column_size[q] = size;
    out.stats.pattern_entries += size;
    out.stats.min_pattern = std::min(out.stats.min_pattern, size);
    out.stats.max_pattern = std::max(out.stats.max_pattern, size);
    out.stats.restricted_solves += c.solves;
    out.stats.fallbacks += c.fallback;
    out.stats.early_stops += c.early_stop;
    for (std::size_t k = 0; k < c.pattern.size(); ++k)
      if (c.values[k] != 0.0) trip.emplace_back(c.pattern[k], q, c.values[k]);
  }
  out.F.resize(nf, np);
  out.F.setFromTriplets(trip.begin(), trip.end());
  out.F.makeCompressed();
  return out;
}

SparseMatrix schur_approx(const SparseMatrix& Jpp, const SparseMatrix& Jppi, const SparseMatrix& F) {
  if (Jppi.cols() != F.rows() || Jppi.rows() != Jpp.rows() || F.cols() != Jpp.cols())
    throw std::invalid_argument("schur_approx: dimension mismatch");
  SparseMatrix S = Jpp + SparseMatrix(Jppi * F);
  linalg::drop_small(S, 1e-300);
  S.makeCompressed();
  return S;
}

}  // namespace bcpr
