#pragma once

// Approximation error and clustering agreement scores. Clustering metrics take
// arbitrary integer labels; only the grouping matters.

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "conic_nmf/cluster.hpp"
#include "conic_nmf/matrix.hpp"

namespace conic_nmf {

inline double relative_error(const MatrixRef& v, const MatrixRef& w, const MatrixRef& h) {
  if (w.rows() != v.rows() || h.cols() != v.cols() || w.cols() != h.rows()) {
    throw Error(Errc::shape_mismatch, "V, W, H are not conformal");
  }
  const double norm = v.norm();
  if (!(norm > 0.0)) throw Error(Errc::zero_matrix, "relative error of a zero matrix");
  return (v - w * h).norm() / norm;
}

namespace detail {

/// Dense contingency table with rows indexed by the distinct values of `a`
/// and columns by the distinct values of `b`.
struct Contingency {
  std::vector<std::vector<double>> counts;
  std::vector<double> row_sums;
  std::vector<double> col_sums;
  double total = 0.0;
};

inline std::vector<int> compact(std::span<const int> labels, std::size_t& classes) {
  std::map<int, int> ids;
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [it, inserted] = ids.try_emplace(labels[i], static_cast<int>(ids.size()));
    out[i] = it->second;
  }
  classes = ids.size();
  return out;
}

inline Contingency contingency(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw Error(Errc::shape_mismatch, "label vectors differ in length");
  if (a.empty()) throw Error(Errc::invalid_argument, "empty labelings");
  std::size_t ka = 0;
  std::size_t kb = 0;
  const auto ca = compact(a, ka);
  const auto cb = compact(b, kb);
  Contingency t;
  t.counts.assign(ka, std::vector<double>(kb, 0.0));
  t.row_sums.assign(ka, 0.0);
  t.col_sums.assign(kb, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    t.counts[static_cast<std::size_t>(ca[i])][static_cast<std::size_t>(cb[i])] += 1.0;
    t.row_sums[static_cast<std::size_t>(ca[i])] += 1.0;
    t.col_sums[static_cast<std::size_t>(cb[i])] += 1.0;
  }
  t.total = static_cast<double>(a.size());
  return t;
}

inline double entropy(const std::vector<double>& sums, double total) {
  double h = 0.0;
  for (double s : sums) {
    if (s > 0.0) h -= (s / total) * std::log(s / total);
  }
  return h;
}

inline double pairs(double n) { return n * (n - 1.0) / 2.0; }

}  // namespace detail

/// I(A;B) / sqrt(H(A) H(B)). Two single-cluster labelings score 1; a single
/// cluster against anything else scores 0.
inline double nmi(std::span<const int> a, std::span<const int> b) {
  const auto t = detail::contingency(a, b);
  const double ha = detail::entropy(t.row_sums, t.total);
  const double hb = detail::entropy(t.col_sums, t.total);
  if (ha == 0.0 || hb == 0.0) return (ha == 0.0 && hb == 0.0) ? 1.0 : 0.0;
  double mi = 0.0;
  for (std::size_t i = 0; i < t.counts.size(); ++i) {
    for (std::size_t j = 0; j < t.col_sums.size(); ++j) {
      const double nij = t.counts[i][j];
      if (nij > 0.0) mi += (nij / t.total) * std::log(nij * t.total / (t.row_sums[i] * t.col_sums[j]));
    }
  }
  return std::clamp(mi / std::sqrt(ha * hb), 0.0, 1.0);
}

/// Pair-counting Dice: 2 SS / (2 SS + SD + DS), where SS counts pairs grouped
/// together by both labelings and SD / DS pairs grouped by only one.
inline double dice(std::span<const int> a, std::span<const int> b) {
  const auto t = detail::contingency(a, b);
  double ss = 0.0;
  for (const auto& row : t.counts) {
    for (double nij : row) ss += detail::pairs(nij);
  }
  double pa = 0.0;
  double pb = 0.0;
  for (double s : t.row_sums) pa += detail::pairs(s);
  for (double s : t.col_sums) pb += detail::pairs(s);
  const double sd = pa - ss;
  const double ds = pb - ss;
  const double den = 2.0 * ss + sd + ds;
  if (den == 0.0) return 1.0;  // both all-singletons
  return 2.0 * ss / den;
}

/// sum over predicted clusters of the largest overlap with a true class, / N.
inline double purity(std::span<const int> predicted, std::span<const int> truth) {
  const auto t = detail::contingency(predicted, truth);
  double hit = 0.0;
  for (const auto& row : t.counts) hit += *std::max_element(row.begin(), row.end());
  return hit / t.total;
}

/// True when the two labelings induce the same grouping (equal up to a
/// relabeling).
inline bool partition_match(std::span<const int> predicted, std::span<const int> truth) {
  const auto t = detail::contingency(predicted, truth);
  if (t.row_sums.size() != t.col_sums.size()) return false;
  for (std::size_t i = 0; i < t.counts.size(); ++i) {
    const auto nonzero = std::count_if(t.counts[i].begin(), t.counts[i].end(),
                                       [](double c) { return c > 0.0; });
    if (nonzero != 1) return false;
  }
  for (std::size_t j = 0; j < t.col_sums.size(); ++j) {
    int nonzero = 0;
    for (const auto& row : t.counts) nonzero += row[j] > 0.0 ? 1 : 0;
    if (nonzero != 1) return false;
  }
  return true;
}

/// Partition form: an empty predicted set can never equal a true class.
inline bool partition_match(const Partition& predicted, std::span<const int> truth) {
  if (!predicted.empty_clusters().empty()) return false;
  std::size_t classes = 0;
  detail::compact(truth, classes);
  if (classes != predicted.size()) return false;
  return partition_match(std::span<const int>(predicted.labels), truth);
}

}  // namespace conic_nmf
