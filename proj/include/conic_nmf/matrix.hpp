#pragma once

// Dense matrix kernels shared by every other module: norms, column
// normalization, power-iteration rank-one SVD, Gram-based singular values and
// Householder reflections.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "conic_nmf/error.hpp"

namespace conic_nmf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;
using MatrixRef = Eigen::Ref<const Matrix>;
using VectorRef = Eigen::Ref<const Vector>;

inline double frobenius_norm(const MatrixRef& m) { return m.norm(); }

inline bool is_nonnegative(const MatrixRef& m) {
  return m.size() == 0 || (m.array() >= 0.0).all();
}

inline void require_finite_nonnegative(const MatrixRef& m, const char* what) {
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i < m.rows(); ++i) {
      const double x = m(i, j);
      if (!std::isfinite(x) || x < 0.0) {
        throw Error(Errc::invalid_argument,
                    std::string(what) + " has a negative or non-finite entry at (" +
                        std::to_string(i) + ", " + std::to_string(j) + ")");
      }
    }
  }
}

struct NormalizedColumns {
  Matrix columns;  // unit l2 columns
  Vector norms;    // norms[n] * columns.col(n) == original column n
};

/// Scales every column to unit l2 norm. A zero column means the data cannot
/// come from the cone model, so it is reported rather than skipped.
inline NormalizedColumns normalize_columns(const MatrixRef& m) {
  NormalizedColumns out{Matrix(m.rows(), m.cols()), Vector(m.cols())};
  for (Index n = 0; n < m.cols(); ++n) {
    const double norm = m.col(n).norm();
    if (norm == 0.0) {
      throw Error(Errc::zero_column, "column " + std::to_string(n) + " is zero",
                  static_cast<std::size_t>(n));
    }
    out.norms(n) = norm;
    out.columns.col(n) = m.col(n) / norm;
  }
  return out;
}

struct PowerOptions {
  double tol = 1e-10;
  int max_iter = 1000;
};

struct RankOneTriple {
  double sigma = 0.0;
  Vector u;  // unit, length F
  Vector v;  // unit, length N
  int iterations = 0;
};

/// Leading singular triple by power iteration on the smaller Gram operator
/// (M^T M when N <= F, otherwise M M^T), applied implicitly as two products.
/// The start vector is the normalized column/row-sum vector. Iteration stops
/// when successive unit iterates differ by at most `tol` in l2 norm.
inline RankOneTriple rank_one_svd(const MatrixRef& m, const PowerOptions& opts = {}) {
  if (!(opts.tol > 0.0) || opts.max_iter < 1) {
    throw Error(Errc::invalid_argument, "rank_one_svd needs tol > 0 and max_iter >= 1");
  }
  if (m.size() == 0) throw Error(Errc::zero_matrix, "rank_one_svd on an empty matrix");

  const bool right_side = m.cols() <= m.rows();
  auto gram = [&](const Vector& x) -> Vector {
    if (right_side) return m.transpose() * (m * x);
    return m * (m.transpose() * x);
  };

  Vector x = right_side ? Vector(m.colwise().sum().transpose()) : Vector(m.rowwise().sum());
  if (x.norm() == 0.0) x = Vector::Ones(x.size());
  x.normalize();
  Vector y = gram(x);
  if (y.norm() == 0.0) {
    // Start vector is in the null space; fall back to the heaviest coordinate.
    Index best = 0;
    if (right_side) m.colwise().squaredNorm().maxCoeff(&best);
    else m.rowwise().squaredNorm().maxCoeff(&best);
    x = Vector::Unit(x.size(), best);
    y = gram(x);
    if (y.norm() == 0.0) throw Error(Errc::zero_matrix, "rank_one_svd on a zero matrix");
  }

  RankOneTriple out;
  bool converged = false;
  for (int it = 1; it <= opts.max_iter; ++it) {
    Vector next = y / y.norm();
    const double step = (next - x).norm();
    x = std::move(next);
    y = gram(x);
    out.iterations = it;
    if (step <= opts.tol) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw Error(Errc::no_convergence, "power iteration did not converge in " +
                                          std::to_string(opts.max_iter) +
                                          " sweeps (sigma1 close to sigma2?)");
  }

  if (right_side) {
    Vector mu = m * x;
    out.sigma = mu.norm();
    out.u = mu / out.sigma;
    out.v = std::move(x);
  } else {
    Vector mv = m.transpose() * x;
    out.sigma = mv.norm();
    out.v = mv / out.sigma;
    out.u = std::move(x);
  }
  return out;
}

struct RankOneFactor {
  Vector w;  // sigma * |u|
  Vector h;  // |v|
  double sigma = 0.0;
};

/// Best rank-one nonnegative approximation of a nonnegative matrix, taken from
/// the absolute values of the leading singular pair.
inline RankOneFactor rank_one_nmf(const MatrixRef& m, const PowerOptions& opts = {}) {
  RankOneTriple t = rank_one_svd(m, opts);
  return RankOneFactor{t.sigma * t.u.cwiseAbs(), t.v.cwiseAbs(), t.sigma};
}

namespace detail {

/// Smaller Gram matrix (lower triangle filled by rank update, then mirrored).
inline Matrix small_gram(const MatrixRef& m) {
  const bool right_side = m.cols() <= m.rows();
  const Index n = right_side ? m.cols() : m.rows();
  Matrix g = Matrix::Zero(n, n);
  if (right_side) g.selfadjointView<Eigen::Lower>().rankUpdate(m.transpose());
  else g.selfadjointView<Eigen::Lower>().rankUpdate(m);
  return g;
}

inline double gram_zero_threshold(const MatrixRef& m, double largest_eig) {
  return static_cast<double>(std::max(m.rows(), m.cols())) *
         std::numeric_limits<double>::epsilon() * largest_eig;
}

}  // namespace detail

/// sigma_1 >= ... >= sigma_k from the dense eigendecomposition of the smaller
/// Gram matrix. Values whose squared magnitude is at the rounding floor of the
/// Gram matrix are reported as exactly zero.
inline Vector top_singular_values(const MatrixRef& m, Index k) {
  const Index p = std::min(m.rows(), m.cols());
  if (k < 1) throw Error(Errc::invalid_argument, "k must be >= 1");
  if (k > p) {
    throw Error(Errc::k_too_large, "k = " + std::to_string(k) + " exceeds min(F, N) = " +
                                       std::to_string(p));
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(detail::small_gram(m), Eigen::EigenvaluesOnly);
  const Vector& ev = es.eigenvalues();  // ascending
  const double top = std::max(ev(ev.size() - 1), 0.0);
  const double floor = detail::gram_zero_threshold(m, top);
  Vector out(k);
  for (Index i = 0; i < k; ++i) {
    const double lam = ev(ev.size() - 1 - i);
    out(i) = lam <= floor ? 0.0 : std::sqrt(lam);
  }
  return out;
}

struct TruncatedSvd {
  Matrix u;  // F x k
  Vector s;  // k
  Matrix v;  // N x k
};

/// Leading k singular triples via the smaller Gram matrix. Pairs with a zero
/// singular value get zero vectors on the derived side.
inline TruncatedSvd truncated_svd(const MatrixRef& m, Index k) {
  const Index p = std::min(m.rows(), m.cols());
  if (k < 1) throw Error(Errc::invalid_argument, "k must be >= 1");
  if (k > p) throw Error(Errc::k_too_large, "k exceeds min(F, N)");
  const bool right_side = m.cols() <= m.rows();
  Eigen::SelfAdjointEigenSolver<Matrix> es(detail::small_gram(m));
  const Index n = es.eigenvalues().size();
  const double floor = detail::gram_zero_threshold(m, std::max(es.eigenvalues()(n - 1), 0.0));

  TruncatedSvd out{Matrix::Zero(m.rows(), k), Vector::Zero(k), Matrix::Zero(m.cols(), k)};
  for (Index i = 0; i < k; ++i) {
    const double lam = es.eigenvalues()(n - 1 - i);
    const Vector vec = es.eigenvectors().col(n - 1 - i);
    const double sigma = lam <= floor ? 0.0 : std::sqrt(lam);
    out.s(i) = sigma;
    if (right_side) {
      out.v.col(i) = vec;
      if (sigma > 0.0) out.u.col(i) = m * vec / sigma;
    } else {
      out.u.col(i) = vec;
      if (sigma > 0.0) out.v.col(i) = m.transpose() * vec / sigma;
    }
  }
  return out;
}

/// Reflection P = I - 2 z z^T with z = (e_f - u)/||e_f - u||, so that
/// P e_f = u. Identity when u == e_f. Applied in O(F) without forming P.
class HouseholderReflector {
 public:
  HouseholderReflector(const VectorRef& u, Index f) : dim_(u.size()) {
    if (f < 0 || f >= u.size()) throw Error(Errc::invalid_argument, "coordinate out of range");
    if (std::abs(u.norm() - 1.0) > 1e-10) {
      throw Error(Errc::invalid_argument, "householder target must be a unit vector");
    }
    Vector d = -u;
    d(f) += 1.0;
    const double len = d.norm();
    if (len > 0.0) z_ = d / len;
  }

  bool is_identity() const { return z_.size() == 0; }
  Index dim() const { return dim_; }

  Vector apply(const VectorRef& x) const {
    if (is_identity()) return x;
    return x - 2.0 * z_.dot(x) * z_;
  }

  Matrix matrix() const {
    Matrix p = Matrix::Identity(dim_, dim_);
    if (!is_identity()) p.noalias() -= 2.0 * z_ * z_.transpose();
    return p;
  }

 private:
  Index dim_;
  Vector z_;  // empty for the identity case
};

inline Matrix householder_to(const VectorRef& u, Index f) {
  return HouseholderReflector(u, f).matrix();
}

}  // namespace conic_nmf
