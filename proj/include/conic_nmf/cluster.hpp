#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "conic_nmf/matrix.hpp"
#include "conic_nmf/random.hpp"

namespace conic_nmf {

/// K disjoint index sets covering [0, N). Sets may be empty when the data
/// violates the separation condition; that is reported, not thrown.
struct Partition {
  std::vector<std::vector<Index>> sets;
  std::vector<Index> centroids;  // column index chosen as centroid k
  std::vector<int> labels;       // labels[n] = k  <=>  n in sets[k]

  std::size_t size() const { return sets.size(); }

  std::vector<std::size_t> empty_clusters() const {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < sets.size(); ++k) {
      if (sets[k].empty()) out.push_back(k);
    }
    return out;
  }
};

struct ClusterOptions {
  /// When set, the first centroid is a seeded-random column instead of column 0.
  std::optional<std::uint64_t> random_first_seed;
};

/// Greedy maximin clustering on unit-normalized columns. Centroid k+1 is the
/// column whose largest cosine similarity to the chosen centroids is smallest;
/// every column then joins its most similar centroid. Ties go to the lowest
/// index. The running maximum similarity per column is cached, so the cost is
/// O(K F N).
inline Partition greedy_cluster(const MatrixRef& v, Index k, const ClusterOptions& opts = {}) {
  if (k < 1) throw Error(Errc::invalid_argument, "K must be >= 1");
  const Index n = v.cols();
  if (k > n) {
    throw Error(Errc::k_exceeds_n, "K = " + std::to_string(k) + " exceeds N = " + std::to_string(n));
  }
  const Matrix z = normalize_columns(v).columns;

  Index first = 0;
  if (opts.random_first_seed) {
    Rng rng(*opts.random_first_seed);
    first = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
  }

  Partition out;
  out.centroids.reserve(static_cast<std::size_t>(k));
  Matrix sims(k, n);  // sims(j, m) = z_j^T z_m
  std::vector<bool> chosen(static_cast<std::size_t>(n), false);
  Vector max_sim;

  Index next = first;
  for (Index c = 0; c < k; ++c) {
    out.centroids.push_back(next);
    chosen[static_cast<std::size_t>(next)] = true;
    sims.row(c).noalias() = (z.transpose() * z.col(next)).transpose();
    if (c == 0) max_sim = sims.row(0).transpose();
    else max_sim = max_sim.cwiseMax(sims.row(c).transpose());
    if (c + 1 == k) break;

    Index best = -1;
    for (Index m = 0; m < n; ++m) {
      if (chosen[static_cast<std::size_t>(m)]) continue;
      if (best < 0 || max_sim(m) < max_sim(best)) best = m;
    }
    next = best;
  }

  out.sets.assign(static_cast<std::size_t>(k), {});
  out.labels.resize(static_cast<std::size_t>(n));
  for (Index m = 0; m < n; ++m) {
    Index best = 0;
    for (Index c = 1; c < k; ++c) {
      if (sims(c, m) > sims(best, m)) best = c;
    }
    out.sets[static_cast<std::size_t>(best)].push_back(m);
    out.labels[static_cast<std::size_t>(m)] = static_cast<int>(best);
  }
  return out;
}

}  // namespace conic_nmf
