#pragma once

// Clustering followed by one rank-one NMF per cluster, and the closed-form
// relative-error bounds that hold for data drawn from separated cones.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "conic_nmf/cluster.hpp"
#include "conic_nmf/matrix.hpp"

namespace conic_nmf {

struct FactorPair {
  Matrix w;  // F x K
  Matrix h;  // K x N
  double relative_error = 0.0;
};

struct Cr1Options {
  PowerOptions power;
  ClusterOptions cluster;
  /// Also evaluate ||V - WH||_F / ||V||_F by the explicit product.
  bool validate = false;
};

struct Cr1Result {
  FactorPair factors;
  Partition partition;
  std::vector<double> sigmas;       // leading singular value per cluster (0 if empty)
  std::vector<std::size_t> sizes;   // cluster sizes
  std::optional<double> direct_relative_error;
};

/// Each column of H has at most one nonzero entry, in the row of its cluster.
/// Empty clusters leave a zero column in W and a zero row in H. The relative
/// error uses ||V - WH||^2 = sum_k (||V_k||^2 - sigma_1(V_k)^2).
inline Cr1Result factorize(const MatrixRef& v, Index k, const Cr1Options& opts = {}) {
  Cr1Result out;
  out.partition = greedy_cluster(v, k, opts.cluster);
  const Index f = v.rows();
  const Index n = v.cols();
  out.factors.w = Matrix::Zero(f, k);
  out.factors.h = Matrix::Zero(k, n);
  out.sigmas.assign(static_cast<std::size_t>(k), 0.0);
  out.sizes.assign(static_cast<std::size_t>(k), 0);

  double residual2 = 0.0;
  for (Index c = 0; c < k; ++c) {
    const auto& idx = out.partition.sets[static_cast<std::size_t>(c)];
    out.sizes[static_cast<std::size_t>(c)] = idx.size();
    if (idx.empty()) continue;
    Matrix block(f, static_cast<Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) block.col(static_cast<Index>(j)) = v.col(idx[j]);
    const RankOneFactor r1 = rank_one_nmf(block, opts.power);
    out.factors.w.col(c) = r1.w;
    for (std::size_t j = 0; j < idx.size(); ++j) out.factors.h(c, idx[j]) = r1.h(static_cast<Index>(j));
    out.sigmas[static_cast<std::size_t>(c)] = r1.sigma;
    residual2 += std::max(0.0, block.squaredNorm() - r1.sigma * r1.sigma);
  }
  out.factors.relative_error = std::sqrt(residual2) / v.norm();
  if (opts.validate) {
    out.direct_relative_error = (v - out.factors.w * out.factors.h).norm() / v.norm();
  }
  return out;
}

/// f(a) = 1/2 - sin(2a)/(4a), the mean of sin^2 of an angle uniform on [0, a].
inline double f_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= std::numbers::pi / 2 + 1e-15)) {
    throw Error(Errc::invalid_argument, "f_alpha needs 0 <= alpha <= pi/2");
  }
  if (alpha < 1e-4) {
    const double a2 = alpha * alpha;
    return a2 / 3.0 - 2.0 * a2 * a2 / 45.0;
  }
  return 0.5 - std::sin(2.0 * alpha) / (4.0 * alpha);
}

/// g(a) = 1 - f(a), the mean of cos^2.
inline double g_alpha(double alpha) { return 1.0 - f_alpha(alpha); }

/// max_k sin(alpha_k).
inline double deterministic_bound(std::span<const double> alphas) {
  double out = 0.0;
  for (double a : alphas) {
    if (!(a >= 0.0 && a < std::numbers::pi / 2)) {
      throw Error(Errc::invalid_argument, "size angles must lie in [0, pi/2)");
    }
    out = std::max(out, std::sin(a));
  }
  return out;
}

/// sqrt( sum_k f(alpha_k)/lambda_k / sum_k 1/lambda_k ), the large-N limit of
/// the relative error under the generative model.
inline double probabilistic_bound(std::span<const double> alphas, std::span<const double> lambdas) {
  if (alphas.size() != lambdas.size() || alphas.empty()) {
    throw Error(Errc::shape_mismatch, "need one lambda per size angle");
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k < alphas.size(); ++k) {
    if (!(lambdas[k] > 0.0)) throw Error(Errc::invalid_argument, "lambdas must be > 0");
    num += f_alpha(alphas[k]) / lambdas[k];
    den += 1.0 / lambdas[k];
  }
  return std::sqrt(num / den);
}

}  // namespace conic_nmf
