#pragma once

// Circular-cone geometry: membership, the separation condition that makes
// greedy clustering exact, orthant containment and the smallest enclosing
// cone of a set of columns.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "conic_nmf/matrix.hpp"

namespace conic_nmf {

/// C(u, alpha) = { x != 0 : x^T u / ||x|| >= cos(alpha) }.
struct CircularCone {
  Vector basis;
  double angle = 0.0;

  CircularCone() = default;
  CircularCone(Vector u, double alpha) : basis(std::move(u)), angle(alpha) { validate(); }

  void validate() const {
    if (basis.size() == 0 || std::abs(basis.norm() - 1.0) > 1e-10) {
      throw Error(Errc::invalid_argument, "cone basis must be a unit vector");
    }
    if ((basis.array() < 0.0).any()) {
      throw Error(Errc::invalid_argument, "cone basis must be entrywise nonnegative");
    }
    if (!(angle > 0.0 && angle < std::numbers::pi / 2)) {
      throw Error(Errc::invalid_argument, "cone angle must lie in (0, pi/2)");
    }
  }

  Index dim() const { return basis.size(); }
};

inline double angle_between(const VectorRef& a, const VectorRef& b) {
  const double c = a.dot(b) / (a.norm() * b.norm());
  return std::acos(std::clamp(c, -1.0, 1.0));
}

/// K cones sharing an ambient dimension, with beta(i, j) = arccos(u_i^T u_j).
class ConeSet {
 public:
  ConeSet() = default;
  explicit ConeSet(std::vector<CircularCone> cones) : cones_(std::move(cones)) {
    const Index k = static_cast<Index>(cones_.size());
    for (const auto& c : cones_) {
      if (c.dim() != cones_.front().dim()) {
        throw Error(Errc::shape_mismatch, "cones have different ambient dimensions");
      }
    }
    beta_ = Matrix::Zero(k, k);
    for (Index i = 0; i < k; ++i) {
      for (Index j = i + 1; j < k; ++j) {
        const double b = std::acos(std::clamp(cones_[i].basis.dot(cones_[j].basis), -1.0, 1.0));
        beta_(i, j) = b;
        beta_(j, i) = b;
      }
    }
  }

  std::size_t size() const { return cones_.size(); }
  Index dim() const { return cones_.empty() ? 0 : cones_.front().dim(); }
  const CircularCone& operator[](std::size_t k) const { return cones_[k]; }
  const std::vector<CircularCone>& cones() const { return cones_; }
  const Matrix& beta() const { return beta_; }

  std::vector<double> angles() const {
    std::vector<double> out;
    out.reserve(cones_.size());
    for (const auto& c : cones_) out.push_back(c.angle);
    return out;
  }

 private:
  std::vector<CircularCone> cones_;
  Matrix beta_;
};

inline bool contains(const CircularCone& cone, const VectorRef& x) {
  const double norm = x.norm();
  if (norm == 0.0) throw Error(Errc::zero_vector, "the zero vector is in no cone");
  return x.dot(cone.basis) / norm >= std::cos(cone.angle);
}

struct GeometricCheck {
  bool holds = false;
  double margin = 0.0;  // min beta - (3 a1 + a2), radians
};

/// Separation test on explicit size angles and a basis-angle matrix.
inline GeometricCheck check_geometric_assumption(std::span<const double> alphas,
                                                 const MatrixRef& beta) {
  const Index k = static_cast<Index>(alphas.size());
  if (k < 2) throw Error(Errc::single_cone, "the assumption needs at least two cones");
  if (beta.rows() != k || beta.cols() != k) {
    throw Error(Errc::shape_mismatch, "beta must be K x K");
  }
  double min_beta = std::numeric_limits<double>::infinity();
  double max_pair = -std::numeric_limits<double>::infinity();
  for (Index i = 0; i < k; ++i) {
    for (Index j = 0; j < k; ++j) {
      if (i == j) continue;
      min_beta = std::min(min_beta, beta(i, j));
      max_pair = std::max(max_pair, std::max(alphas[i] + 3.0 * alphas[j],
                                             3.0 * alphas[i] + alphas[j]));
    }
  }
  std::vector<double> sorted(alphas.begin(), alphas.end());
  std::partial_sort(sorted.begin(), sorted.begin() + 2, sorted.end(), std::greater<>());
  GeometricCheck out;
  out.holds = min_beta > max_pair;
  out.margin = min_beta - (3.0 * sorted[0] + sorted[1]);
  return out;
}

inline GeometricCheck check_geometric_assumption(const ConeSet& set) {
  const auto alphas = set.angles();
  return check_geometric_assumption(alphas, set.beta());
}

/// Sufficient condition for C(u, alpha) to lie in the nonnegative orthant:
/// alpha <= arccos(sqrt(1 - u_min^2)). Requires a strictly positive basis.
inline bool contained_in_orthant(const CircularCone& cone) {
  const double u_min = cone.basis.minCoeff();
  if (!(u_min > 0.0)) {
    throw Error(Errc::non_positive_basis, "orthant test needs a strictly positive basis");
  }
  const double threshold = std::acos(std::sqrt(1.0 - u_min * u_min));
  return cone.angle <= threshold + 1e-12;
}

struct EnclosingCone {
  Vector basis;
  double angle = 0.0;
  double qp_norm = 1.0;       // ||u_hat|| of the QP solution
  double max_violation = 0.0;  // max_m (1 - x_m^T u_hat)
  int sweeps = 0;
};

struct EnclosingOptions {
  int max_sweeps = 200000;
  double feasibility_tol = 1e-9;
};

/// Smallest circular cone containing every column of X, from
///   min 1/2 ||u||^2  s.t.  x_m^T u >= 1 (unit x_m),  u >= 0,
/// with u* = u_hat/||u_hat||, alpha* = arccos(1/||u_hat||).
///
/// The QP is solved by Hildreth's row-action method: exact coordinate ascent
/// on the dual, keeping u = X mu + nu primal-consistent. Sweeps continue until
/// a full pass no longer moves u (machine-precision fixed point). The reported
/// angle is the larger of arccos(1/||u_hat||) and the widest column angle to
/// u*, so every column is certified to lie in the returned cone.
inline EnclosingCone optimal_enclosing_cone(const MatrixRef& x_raw,
                                            const EnclosingOptions& opts = {}) {
  if (x_raw.cols() == 0) throw Error(Errc::invalid_argument, "no columns to enclose");
  const Matrix x = normalize_columns(x_raw).columns;
  const Index f = x.rows();
  const Index m = x.cols();

  EnclosingCone out;
  bool identical = true;
  for (Index j = 1; j < m && identical; ++j) identical = (x.col(j) == x.col(0));
  if (identical) {
    out.basis = x.col(0);
    out.angle = 0.0;
    return out;
  }

  Vector mu = Vector::Zero(m);
  Vector nu = Vector::Zero(f);  // multipliers of u >= 0
  Vector u = Vector::Zero(f);
  bool converged = false;
  for (int sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
    double moved = 0.0;
    for (Index j = 0; j < m; ++j) {
      const double delta = std::max(-mu(j), 1.0 - x.col(j).dot(u));
      if (delta != 0.0) {
        mu(j) += delta;
        u.noalias() += delta * x.col(j);
        moved = std::max(moved, std::abs(delta));
      }
    }
    for (Index i = 0; i < f; ++i) {
      const double delta = std::max(-nu(i), -u(i));
      if (delta != 0.0) {
        nu(i) += delta;
        u(i) += delta;
        moved = std::max(moved, std::abs(delta));
      }
    }
    out.sweeps = sweep;
    if (moved <= 1e-15 * std::max(1.0, u.norm())) {
      converged = true;
      break;
    }
  }
  out.max_violation = (1.0 - (x.transpose() * u).array()).maxCoeff();
  if (!converged && !(out.max_violation <= opts.feasibility_tol)) {
    throw Error(Errc::infeasible, "could not certify a feasible enclosing cone (violation " +
                                      std::to_string(out.max_violation) + ")");
  }

  u = u.cwiseMax(0.0);
  out.qp_norm = u.norm();
  out.basis = u / out.qp_norm;
  const double qp_angle = std::acos(std::min(1.0, 1.0 / out.qp_norm));
  const double min_cos = (x.transpose() * out.basis).minCoeff();
  out.angle = std::max(qp_angle, std::acos(std::clamp(min_cos, -1.0, 1.0)));
  return out;
}

}  // namespace conic_nmf
