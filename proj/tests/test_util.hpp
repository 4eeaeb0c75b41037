#pragma once

// Small helpers shared by the test binaries: fixture paths, file slurping,
// and greedy nearest-pair matching between two complex point lists (the
// robust way to compare spectra -- elementwise comparison after sorting can
// pair the wrong partners when real parts nearly tie).

#include <algorithm>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "specres/types.hpp"

namespace testutil {

inline std::string fixture_path(const std::string& name) {
  return std::string(SPECRES_FIXTURE_DIR) + "/" + name;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

// Max matched distance under greedy min-distance bipartite pairing.
// Returns +inf when the lists have different lengths.
inline double greedy_match(const std::vector<specres::Complex>& a,
                           const std::vector<specres::Complex>& b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  const std::size_t n = a.size();
  if (n == 0) return 0.0;
  struct Pair {
    double d;
    std::size_t i, j;
  };
  std::vector<Pair> pairs;
  pairs.reserve(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) pairs.push_back({std::abs(a[i] - b[j]), i, j});
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const Pair& x, const Pair& y) { return x.d < y.d; });
  std::vector<bool> iu(n, false), ju(n, false);
  std::size_t done = 0;
  double worst = 0.0;
  for (const Pair& p : pairs) {
    if (done == n) break;
    if (iu[p.i] || ju[p.j]) continue;
    iu[p.i] = ju[p.j] = true;
    worst = std::max(worst, p.d);
    ++done;
  }
  return worst;
}

}  // namespace testutil
