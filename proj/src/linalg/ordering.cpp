#include <algorithm>
#include <deque>

#include "bcpr/linalg/precond.hpp"

namespace bcpr::linalg {

namespace {

std::vector<std::vector<int>> symmetric_graph(const SparseMatrix& A) {
  const int n = static_cast<int>(A.rows());
  std::vector<std::vector<int>> adj(n);
  for (int i = 0; i < n; ++i) {
    for (SparseMatrix::InnerIterator it(A, i); it; ++it) {
      const int j = static_cast<int>(it.col());
      if (j == i) continue;
      adj[i].push_back(j);
      adj[j].push_back(i);
    }
  }
  for (auto& a : adj) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
  }
  return adj;
}

// Breadth-first level structure from `root`; returns the last level.
std::vector<int> bfs_last_level(const std::vector<std::vector<int>>& adj, int root,
                                std::vector<int>& level, int& depth) {
  std::fill(level.begin(), level.end(), -1);
  std::vector<int> frontier{root};
  level[root] = 0;
  depth = 0;
  std::vector<int> last = frontier;
  while (!frontier.empty()) {
    last = frontier;
    std::vector<int> next;
    for (int v : frontier)
      for (int w : adj[v])
        if (level[w] < 0) {
          level[w] = depth + 1;
          next.push_back(w);
        }
    if (!next.empty()) ++depth;
    frontier = std::move(next);
  }
  return last;
}

int pseudo_peripheral(const std::vector<std::vector<int>>& adj, int start,
                      std::vector<int>& level) {
  int root = start;
  int depth = 0;
  auto last = bfs_last_level(adj, root, level, depth);
  for (int iter = 0; iter < 8; ++iter) {
    int best = last.front();
    for (int v : last)
      if (adj[v].size() < adj[best].size()) best = v;
    int new_depth = 0;
    auto new_last = bfs_last_level(adj, best, level, new_depth);
    if (new_depth <= depth) break;
    root = best;
    depth = new_depth;
    last = std::move(new_last);
  }
  return root;
}

}  // namespace

std::vector<int> rcm_ordering(const SparseMatrix& A) {
  const int n = static_cast<int>(A.rows());
  const auto adj = symmetric_graph(A);
  std::vector<int> order;
  order.reserve(n);
  std::vector<char> visited(n, 0);
  std::vector<int> level(n, -1);
  for (int seed = 0; seed < n; ++seed) {
    if (visited[seed]) continue;
    // Start from a low-degree node of this component.
    const int root = pseudo_peripheral(adj, seed, level);
    std::deque<int> queue{root};
    visited[root] = 1;
    while (!queue.empty()) {
      const int v = queue.front();
      queue.pop_front();
      order.push_back(v);
      std::vector<int> nbrs;
      for (int w : adj[v])
        if (!visited[w]) nbrs.push_back(w);
      std::sort(nbrs.begin(), nbrs.end(), [&](int a, int b) {
        return adj[a].size() != adj[b].size() ? adj[a].size() < adj[b].size() : a < b;
      });
      for (int w : nbrs) {
        visited[w] = 1;
        queue.push_back(w);
      }
    }
  }
  std::reverse(order.begin(), order.end());
  return order;
}

SparseMatrix permute_symmetric(const SparseMatrix& A, const std::vector<int>& perm) {
  const int n = static_cast<int>(A.rows());
  if (static_cast<int>(perm.size()) != n || A.cols() != n)
    throw std::invalid_argument("permutation size mismatch");
  std::vector<int> inv(n, -1);
  for (int i = 0; i < n; ++i) inv[perm[i]] = i;
  std::vector<Triplet> trip;
  trip.reserve(A.nonZeros());
  for (int i = 0; i < n; ++i)
    for (SparseMatrix::InnerIterator it(A, i); it; ++it)
      trip.emplace_back(inv[i], inv[it.col()], it.value());
  SparseMatrix out(n, n);
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

}  // namespace bcpr::linalg
