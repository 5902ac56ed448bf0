#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <numeric>
#include <vector>

#include "too/common.hpp"

namespace too::doe {

/// Latin hypercube sample on [0,1]^d: each column holds exactly one point
/// per stratum [i/n, (i+1)/n), with independent column permutations and
/// uniform jitter within strata.
inline Eigen::MatrixXd latin_hypercube(int n, int d, Rng& rng) {
  if (n < 1 || d < 1) throw std::invalid_argument("latin_hypercube: n and d must be >= 1");
  Eigen::MatrixXd pts(n, d);
  std::vector<int> perm(n);
  for (int j = 0; j < d; ++j) {
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (int i = 0; i < n; ++i)
      pts(i, j) = (static_cast<double>(perm[i]) + canonical(rng)) / static_cast<double>(n);
  }
  return pts;
}

/// Cycles seed labels {0, ..., n_seeds-1} over the design so every initial
/// seed is replicated across parameter values (which is what makes the
/// cross-seed correlation identifiable from the opening batch).
inline std::vector<int> assign_seeds(int n, int n_seeds) {
  if (n_seeds < 1 || n_seeds > n)
    throw std::invalid_argument("assign_seeds: need 1 <= n_seeds <= n");
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) labels[i] = i % n_seeds;
  return labels;
}

}  // namespace too::doe
