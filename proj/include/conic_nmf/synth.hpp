#pragma once

// Synthetic data from the cone generative model: pick a cone, draw a squared
// length from Exp(lambda_k), draw a unit direction at a uniform angle from the
// cone axis, optionally clamp to the nonnegative orthant, scale.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "conic_nmf/cones.hpp"
#include "conic_nmf/matrix.hpp"
#include "conic_nmf/random.hpp"

namespace conic_nmf {

/// u_k = sqrt(cos b) e_{K+1} + sqrt(1 - cos b) e_k, k = 1..K (columns of the
/// result). Every pair meets at angle exactly b; the bases have zeros off
/// their two-coordinate support.
inline Matrix equiangular_bases(Index dim, Index k, double beta) {
  if (k < 1) throw Error(Errc::invalid_argument, "K must be >= 1");
  if (dim < k + 1) {
    throw Error(Errc::dimension_too_small,
                "need F >= K + 1, got F = " + std::to_string(dim) + ", K = " + std::to_string(k));
  }
  if (!(beta > 0.0 && beta < std::numbers::pi / 2)) {
    throw Error(Errc::invalid_argument, "basis angle must lie in (0, pi/2)");
  }
  const double c = std::cos(beta);
  Matrix u = Matrix::Zero(dim, k);
  for (Index j = 0; j < k; ++j) {
    u(k, j) = std::sqrt(c);
    u(j, j) = std::sqrt(1.0 - c);
  }
  return u;
}

/// Strictly positive equiangular bases u_k = (1 + t e_k)/||1 + t e_k|| with t
/// chosen so that u_i^T u_j = cos b for i != j. Unlike equiangular_bases these
/// admit cones that sit inside the orthant when the angle is small enough.
inline Matrix positive_equiangular_bases(Index dim, Index k, double beta) {
  if (k < 1) throw Error(Errc::invalid_argument, "K must be >= 1");
  if (dim < k) throw Error(Errc::dimension_too_small, "need F >= K");
  if (!(beta > 0.0 && beta < std::numbers::pi / 2)) {
    throw Error(Errc::invalid_argument, "basis angle must lie in (0, pi/2)");
  }
  const double c = std::cos(beta);
  const double f = static_cast<double>(dim);
  // c (F + 2t + t^2) = F + 2t  =>  c t^2 - 2 (1 - c) t - (1 - c) F = 0
  const double t = ((1.0 - c) + std::sqrt((1.0 - c) * (1.0 - c) + c * (1.0 - c) * f)) / c;
  Matrix u = Matrix::Ones(dim, k);
  for (Index j = 0; j < k; ++j) {
    u(j, j) += t;
    u.col(j).normalize();
  }
  return u;
}

inline ConeSet make_cone_set(const MatrixRef& bases, std::span<const double> alphas) {
  if (static_cast<Index>(alphas.size()) != bases.cols()) {
    throw Error(Errc::shape_mismatch, "one size angle per basis column is required");
  }
  std::vector<CircularCone> cones;
  cones.reserve(alphas.size());
  for (Index k = 0; k < bases.cols(); ++k) cones.emplace_back(bases.col(k), alphas[k]);
  return ConeSet(std::move(cones));
}

inline ConeSet make_cone_set(const MatrixRef& bases, double alpha) {
  const std::vector<double> alphas(static_cast<std::size_t>(bases.cols()), alpha);
  return make_cone_set(bases, alphas);
}

/// lambda_k = 1/k, k = 1..K.
inline std::vector<double> inverse_index_rates(std::size_t k) {
  std::vector<double> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = 1.0 / static_cast<double>(i + 1);
  return out;
}

/// Unit vector at angle b ~ U[0, alpha] from the cone axis, uniform on that
/// angle's sphere slice: built around e_1 and reflected onto the axis.
inline Vector sample_unit_in_cone(const CircularCone& cone, const HouseholderReflector& to_axis,
                                  Rng& rng) {
  const Index dim = cone.dim();
  if (dim == 1) return cone.basis;
  const double b = cone.angle * rng.uniform();
  Vector y(dim);
  y(0) = 0.0;
  for (Index i = 1; i < dim; ++i) y(i) = rng.normal();
  y /= y.norm();
  y *= std::sin(b);
  y(0) = std::cos(b);
  return to_axis.apply(y);
}

inline Vector sample_unit_in_cone(const CircularCone& cone, Rng& rng) {
  return sample_unit_in_cone(cone, HouseholderReflector(cone.basis, 0), rng);
}

struct GeneratorConfig {
  Index dim = 0;      // F
  Index samples = 0;  // N
  ConeSet cones;
  std::vector<double> lambdas;  // Exp rate per cone (1 / expected squared length)
  std::vector<double> mixing;   // empty means uniform
  bool project = true;          // clamp to the orthant and renormalize
  std::uint64_t seed = 0;

  void validate() const {
    if (cones.size() == 0) throw Error(Errc::invalid_argument, "generator needs at least one cone");
    if (dim != cones.dim()) throw Error(Errc::shape_mismatch, "F does not match the cone dimension");
    if (samples < 0) throw Error(Errc::invalid_argument, "N must be >= 0");
    if (lambdas.size() != cones.size()) {
      throw Error(Errc::shape_mismatch, "one lambda per cone is required");
    }
    for (double l : lambdas) {
      if (!(l > 0.0) || !std::isfinite(l)) throw Error(Errc::invalid_argument, "lambdas must be > 0");
    }
    if (!mixing.empty()) {
      if (mixing.size() != cones.size()) {
        throw Error(Errc::shape_mismatch, "one mixing weight per cone is required");
      }
      double total = 0.0;
      for (double p : mixing) {
        if (!(p >= 0.0)) throw Error(Errc::invalid_argument, "mixing weights must be >= 0");
        total += p;
      }
      if (std::abs(total - 1.0) > 1e-12) {
        throw Error(Errc::invalid_argument, "mixing weights must sum to 1");
      }
    }
  }
};

struct LabeledDataset {
  Matrix data;              // F x N
  std::vector<int> labels;  // cone index per column, 0-based
  GeneratorConfig config;
};

/// Column n draws from its own stream Rng::stream(seed, n), so the output is
/// a pure function of the configuration regardless of evaluation order.
inline LabeledDataset generate(const GeneratorConfig& config) {
  config.validate();
  const std::size_t k = config.cones.size();
  std::vector<HouseholderReflector> reflectors;
  reflectors.reserve(k);
  for (const auto& c : config.cones.cones()) reflectors.emplace_back(c.basis, 0);

  std::vector<double> cumulative(k);
  for (std::size_t i = 0; i < k; ++i) {
    const double p = config.mixing.empty() ? 1.0 / static_cast<double>(k) : config.mixing[i];
    cumulative[i] = (i == 0 ? 0.0 : cumulative[i - 1]) + p;
  }

  LabeledDataset out{Matrix(config.dim, config.samples),
                     std::vector<int>(static_cast<std::size_t>(config.samples)), config};
  for (Index n = 0; n < config.samples; ++n) {
    Rng rng = Rng::stream(config.seed, static_cast<std::uint64_t>(n));
    std::size_t label = 0;
    if (k > 1) {
      const double r = rng.uniform() * cumulative.back();
      while (label + 1 < k && r >= cumulative[label]) ++label;
    }
    const double length2 = rng.exponential(config.lambdas[label]);
    Vector z = sample_unit_in_cone(config.cones[label], reflectors[label], rng);
    if (config.project && (z.array() < 0.0).any()) {
      z = z.cwiseMax(0.0);
      z.normalize();
    }
    out.data.col(n) = std::sqrt(length2) * z;
    out.labels[static_cast<std::size_t>(n)] = static_cast<int>(label);
  }
  return out;
}

/// [V + delta E]_+ with E i.i.d. standard normal, drawn column-major.
inline Matrix add_noise(const MatrixRef& v, double delta, Rng& rng) {
  if (!(delta >= 0.0)) throw Error(Errc::invalid_argument, "noise level must be >= 0");
  Matrix out = v;
  if (delta == 0.0) return out;
  for (Index j = 0; j < out.cols(); ++j) {
    for (Index i = 0; i < out.rows(); ++i) {
      out(i, j) = std::max(0.0, out(i, j) + delta * rng.normal());
    }
  }
  return out;
}

}  // namespace conic_nmf
