#pragma once

#include <algorithm>
#include <vector>

#include "specres/types.hpp"

namespace specres::detail {

// Single-linkage clustering of points in the complex plane: indices i, j
// end up in the same cluster iff a chain of pairwise steps <= gap links
// them.  Clusters come back sorted by their smallest member index, and
// member lists sorted; the whole thing is deterministic.  O(n^2), which
// is fine at the sizes this library handles.
inline std::vector<std::vector<int>> single_linkage_clusters(
    const std::vector<Complex>& pts, double gap) {
  const int n = static_cast<int>(pts.size());
  std::vector<int> parent(n);
  for (int i = 0; i < n; ++i) parent[i] = i;
  auto find = [&](int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (std::abs(pts[i] - pts[j]) <= gap) {
        int a = find(i), b = find(j);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
  std::vector<std::vector<int>> clusters;
  std::vector<int> root_slot(n, -1);
  for (int i = 0; i < n; ++i) {
    int r = find(i);
    if (root_slot[r] < 0) {
      root_slot[r] = static_cast<int>(clusters.size());
      clusters.emplace_back();
    }
    clusters[root_slot[r]].push_back(i);
  }
  return clusters;
}

// Deterministic ordering for complex values: by real part, ties by
// imaginary part.
inline bool complex_less(const Complex& a, const Complex& b) {
  if (a.real() != b.real()) return a.real() < b.real();
  return a.imag() < b.imag();
}

}  // namespace specres::detail
