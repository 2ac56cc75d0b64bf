#pragma once

#include <algorithm>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "conic_nmf/matrix.hpp"

namespace conic_nmf {

struct RankEstimate {
  Index k_hat = 0;
  Index k_min = 0;
  Index k_max = 0;
  std::vector<double> ratios;  // ratios[i] = sigma_k / sigma_{k+1} for k = k_min + i
  Vector singular_values;      // sigma_1 .. sigma_{k_max + 1}
};

struct RankOptions {
  /// Scale every column to unit norm first (useful when cone rates differ).
  bool normalize_columns = false;
};

/// Default candidate range: [2, min(min(F, N)/2, 100)], clipped below min(F, N).
inline std::pair<Index, Index> default_k_range(Index rows, Index cols) {
  const Index p = std::min(rows, cols);
  const Index hi = std::min<Index>({p / 2, 100, p - 1});
  return {2, hi};
}

/// k_hat = argmax_{k in [k_min, k_max]} sigma_k / sigma_{k+1}. A zero
/// sigma_{k+1} under a positive sigma_k is an infinite ratio; ties resolve to
/// the smallest k.
inline RankEstimate estimate_k(const MatrixRef& v, Index k_min, Index k_max,
                               const RankOptions& opts = {}) {
  const Index p = std::min(v.rows(), v.cols());
  if (!(k_min > 1 && k_min <= k_max && k_max < p)) {
    throw Error(Errc::range_invalid, "need 1 < k_min <= k_max < min(F, N) = " + std::to_string(p) +
                                         ", got [" + std::to_string(k_min) + ", " +
                                         std::to_string(k_max) + "]");
  }
  RankEstimate out;
  out.k_min = k_min;
  out.k_max = k_max;
  out.singular_values = opts.normalize_columns
                            ? top_singular_values(normalize_columns(v).columns, k_max + 1)
                            : top_singular_values(v, k_max + 1);
  const Vector& s = out.singular_values;
  if (s(k_min - 1) == 0.0) {
    throw Error(Errc::rank_deficient, "sigma_" + std::to_string(k_min) + " is zero");
  }
  double best = -1.0;
  for (Index k = k_min; k <= k_max; ++k) {
    const double num = s(k - 1);
    const double den = s(k);
    double r = 0.0;
    if (den > 0.0) r = num / den;
    else if (num > 0.0) r = std::numeric_limits<double>::infinity();
    out.ratios.push_back(r);
    if (r > best) {
      best = r;
      out.k_hat = k;
    }
  }
  return out;
}

}  // namespace conic_nmf
