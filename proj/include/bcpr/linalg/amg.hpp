#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "bcpr/linalg/dense.hpp"
#include "bcpr/linalg/precond.hpp"
#include "bcpr/linalg/sparse.hpp"

namespace bcpr::linalg {

struct AmgOptions {
  double strength_threshold = 0.08;  // |a_ij| >= theta sqrt(|a_ii a_jj|)
  double omega = 0.7;                // damped Jacobi weight
  int coarsest_max = 200;            // stop coarsening at or below this size
  int dense_limit = 1000;            // largest coarsest level factorized densely
  int max_levels = 25;
  double stagnation_ratio = 0.9;     // coarse/fine size above this stops coarsening
};

/// Plain-aggregation algebraic multigrid: piecewise-constant prolongation,
/// Galerkin coarse operators, damped Jacobi V(1,1) cycle and a dense
/// factorization on the coarsest level.
template <typename Scalar>
class AmgHierarchy {
public:
  AmgHierarchy() = default;
  explicit AmgHierarchy(const Csr<Scalar>& A, const AmgOptions& opt = {}) { setup(A, opt); }

  void setup(const Csr<Scalar>& A, const AmgOptions& opt = {});

  /// One V(1,1) cycle for A z = r from a zero initial guess.
  Vec<Scalar> vcycle(const Vec<Scalar>& r) const {
    Vec<Scalar> z;
    cycle(0, r, z);
    return z;
  }
  Vec<Scalar> operator()(const Vec<Scalar>& r) const { return vcycle(r); }

  int num_levels() const { return static_cast<int>(levels_.size()); }
  int level_size(int l) const { return static_cast<int>(levels_[l].A.rows()); }
  const std::vector<int>& aggregates(int l) const { return levels_[l].aggregate; }
  const Csr<Scalar>& level_operator(int l) const { return levels_[l].A; }
  /// Coarsening stopped above the target size because aggregation stalled.
  bool stagnated() const { return stagnated_; }
  bool coarsest_is_direct() const { return coarse_direct_; }
  double operator_complexity() const {
    double total = 0;
    for (const auto& lv : levels_) total += static_cast<double>(lv.A.nonZeros());
    return levels_.empty() ? 0.0 : total / static_cast<double>(levels_.front().A.nonZeros());
  }

private:
  struct Level {
    Csr<Scalar> A;
    Vec<Scalar> inv_diag;
    std::vector<int> aggregate;  // fine row -> coarse row; empty on the coarsest level
    int n_coarse = 0;
  };

  void cycle(std::size_t l, const Vec<Scalar>& r, Vec<Scalar>& z) const;
  static std::vector<int> aggregate(const Csr<Scalar>& A, double theta, int& n_coarse);
  static Csr<Scalar> galerkin(const Csr<Scalar>& A, const std::vector<int>& agg, int n_coarse);

  std::vector<Level> levels_;
  DenseLu<Scalar> coarse_lu_;
  bool coarse_direct_ = false;
  bool stagnated_ = false;
  double omega_ = 0.7;
};

template <typename Scalar>
std::vector<int> AmgHierarchy<Scalar>::aggregate(const Csr<Scalar>& A, double theta,
                                                 int& n_coarse) {
  const int n = static_cast<int>(A.rows());
  const Vec<Scalar> d = A.diagonal();
  std::vector<std::vector<int>> strong(n);
  for (int i = 0; i < n; ++i) {
    for (typename Csr<Scalar>::InnerIterator it(A, i); it; ++it) {
      const int j = static_cast<int>(it.col());
      if (j == i) continue;
      if (std::abs(it.value()) >= theta * std::sqrt(std::abs(d(i) * d(j)))) {
        strong[i].push_back(j);
        strong[j].push_back(i);
      }
    }
  }
  for (auto& s : strong) {
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
  }

  std::vector<int> agg(n, -1);
  n_coarse = 0;
  // Seeds whose whole strong neighbourhood is still free.
  for (int i = 0; i < n; ++i) {
    if (agg[i] >= 0 || strong[i].empty()) continue;
    bool free = true;
    for (int j : strong[i])
      if (agg[j] >= 0) {
        free = false;
        break;
      }
    if (!free) continue;
    agg[i] = n_coarse;
    for (int j : strong[i]) agg[j] = n_coarse;
    ++n_coarse;
  }
  // Attach leftovers to the aggregate of their strongest aggregated neighbour.
  std::vector<int> pass2(n, -1);
  for (int i = 0; i < n; ++i) {
    if (agg[i] >= 0) continue;
    Scalar best = Scalar(-1);
    for (typename Csr<Scalar>::InnerIterator it(A, i); it; ++it) {
      const int j = static_cast<int>(it.col());
      if (j == i || agg[j] < 0) continue;
      if (!std::binary_search(strong[i].begin(), strong[i].end(), j)) continue;
      if (std::abs(it.value()) > best) {
        best = std::abs(it.value());
        pass2[i] = agg[j];
      }
    }
  }
  for (int i = 0; i < n; ++i)
    if (agg[i] < 0 && pass2[i] >= 0) agg[i] = pass2[i];
  // Whatever is left forms new aggregates with its free strong neighbours.
  for (int i = 0; i < n; ++i) {
    if (agg[i] >= 0) continue;
    agg[i] = n_coarse;
    for (int j : strong[i])
      if (agg[j] < 0) agg[j] = n_coarse;
    ++n_coarse;
  }
  return agg;
}

template <typename Scalar>
Csr<Scalar> AmgHierarchy<Scalar>::galerkin(const Csr<Scalar>& A, const std::vector<int>& agg,
                                           int n_coarse) {
  std::vector<Eigen::Triplet<Scalar, int>> trip;
  trip.reserve(A.nonZeros());
  for (int i = 0; i < A.rows(); ++i)
    for (typename Csr<Scalar>::InnerIterator it(A, i); it; ++it)
      trip.emplace_back(agg[i], agg[it.col()], it.value());
  Csr<Scalar> Ac(n_coarse, n_coarse);
  Ac.setFromTriplets(trip.begin(), trip.end());
  return Ac;
}

template <typename Scalar>
void AmgHierarchy<Scalar>::setup(const Csr<Scalar>& A, const AmgOptions& opt) {
  if (A.rows() != A.cols()) throw std::invalid_argument("AMG needs a square matrix");
  levels_.clear();
  stagnated_ = false;
  coarse_direct_ = false;
  omega_ = opt.omega;

  Csr<Scalar> current = A;
  current.makeCompressed();
  for (int l = 0;; ++l) {
    Level lv;
    lv.A = std::move(current);
    const Vec<Scalar> d = lv.A.diagonal();
    lv.inv_diag.resize(d.size());
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      if (!(std::abs(d(i)) >= kTinyPivot)) {
        std::ostringstream msg;
        msg << "zero diagonal on AMG level " << l << " row " << i;
        throw PreconditionerBuildError(msg.str(), static_cast<int>(i));
      }
      lv.inv_diag(i) = Scalar(1) / d(i);
    }
    const int n = static_cast<int>(lv.A.rows());
    if (n <= opt.coarsest_max || l + 1 >= opt.max_levels) {
      levels_.push_back(std::move(lv));
      break;
    }
    int nc = 0;
    std::vector<int> agg = aggregate(lv.A, opt.strength_threshold, nc);
    if (static_cast<double>(nc) > opt.stagnation_ratio * n) {
      stagnated_ = true;
      levels_.push_back(std::move(lv));
      break;
    }
    current = galerkin(lv.A, agg, nc);
    lv.aggregate = std::move(agg);
    lv.n_coarse = nc;
    levels_.push_back(std::move(lv));
  }

  const auto& last = levels_.back();
  if (last.A.rows() <= opt.dense_limit) {
    try {
      coarse_lu_.compute(Dense<Scalar>(last.A));
      coarse_direct_ = true;
    } catch (const SingularMatrixError&) {
      coarse_direct_ = false;
    }
  }
}

template <typename Scalar>
void AmgHierarchy<Scalar>::cycle(std::size_t l, const Vec<Scalar>& r, Vec<Scalar>& z) const {
  const Level& lv = levels_[l];
  if (l + 1 == levels_.size()) {
    if (coarse_direct_) {
      z = coarse_lu_.solve(r);
      return;
    }
    // Smoother only when the coarsest level could not be factorized.
    z = omega_ * lv.inv_diag.cwiseProduct(r);
    z += omega_ * lv.inv_diag.cwiseProduct(r - lv.A * z);
    return;
  }
  z = omega_ * lv.inv_diag.cwiseProduct(r);
  const Vec<Scalar> res = r - lv.A * z;
  Vec<Scalar> rc = Vec<Scalar>::Zero(lv.n_coarse);
  for (Eigen::Index i = 0; i < res.size(); ++i) rc(lv.aggregate[i]) += res(i);
  Vec<Scalar> zc;
  cycle(l + 1, rc, zc);
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) += zc(lv.aggregate[i]);
  z += omega_ * lv.inv_diag.cwiseProduct(r - lv.A * z);
}

}  // namespace bcpr::linalg
