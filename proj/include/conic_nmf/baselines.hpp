#pragma once

// Classical NMF solvers (multiplicative updates, HALS) and the initializers
// they are compared under: random, spherical k-means, nndsvd and a perturbed
// cr1-nmf factorization.

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "conic_nmf/cr1nmf.hpp"
#include "conic_nmf/matrix.hpp"
#include "conic_nmf/random.hpp"

namespace conic_nmf {

/// errors[0] is the error of the starting point; errors[i] follows sweep i.
struct SolverTrace {
  std::vector<double> errors;
  std::vector<double> elapsed;    // cumulative seconds, elapsed[0] = 0
  std::vector<double> iteration;  // seconds spent in each sweep
  int iterations = 0;

  /// Wall-clock at which the error first drops to `target` or below.
  std::optional<double> time_to_reach(double target) const {
    for (std::size_t i = 0; i < errors.size(); ++i) {
      if (errors[i] <= target) return elapsed[i];
    }
    return std::nullopt;
  }

  std::optional<int> iterations_to_reach(double target) const {
    for (std::size_t i = 0; i < errors.size(); ++i) {
      if (errors[i] <= target) return static_cast<int>(i);
    }
    return std::nullopt;
  }
};

struct SolverOptions {
  int iterations = 100;
  double guard = 1e-16;  // added to every denominator
  /// Multiplicative updates only: skip the guard and leave entries whose
  /// denominator is exactly zero untouched.
  bool mask_zero_denominators = false;
  std::optional<double> target_error;  // stop once reached
  std::optional<double> time_budget;   // seconds; stop once exceeded
};

struct SolverRun {
  FactorPair factors;
  SolverTrace trace;
};

namespace detail {

inline void check_factor_shapes(const MatrixRef& v, const MatrixRef& w, const MatrixRef& h) {
  if (w.rows() != v.rows() || h.cols() != v.cols() || w.cols() != h.rows()) {
    throw Error(Errc::shape_mismatch, "initial factors are not conformal with V");
  }
  if (!is_nonnegative(w) || !is_nonnegative(h)) {
    throw Error(Errc::invalid_argument, "initial factors must be nonnegative");
  }
}

/// Drives `sweep` and records the error after each call. Only the sweeps are
/// timed; evaluating the error for the trace is excluded from `elapsed`.
template <class Sweep>
SolverRun iterate(const MatrixRef& v, Matrix w, Matrix h, const SolverOptions& opts, Sweep sweep) {
  using clock = std::chrono::steady_clock;
  const double vnorm = v.norm();
  if (!(vnorm > 0.0)) throw Error(Errc::zero_matrix, "cannot factorize a zero matrix");
  SolverRun run;
  auto& tr = run.trace;
  tr.errors.push_back((v - w * h).norm() / vnorm);
  tr.elapsed.push_back(0.0);
  for (int it = 0; it < opts.iterations; ++it) {
    if (opts.target_error && tr.errors.back() <= *opts.target_error) break;
    if (opts.time_budget && tr.elapsed.back() > *opts.time_budget) break;
    const auto t0 = clock::now();
    sweep(w, h);
    const double dt = std::chrono::duration<double>(clock::now() - t0).count();
    tr.errors.push_back((v - w * h).norm() / vnorm);
    tr.iteration.push_back(dt);
    tr.elapsed.push_back(tr.elapsed.back() + dt);
    tr.iterations = it + 1;
  }
  run.factors.w = std::move(w);
  run.factors.h = std::move(h);
  run.factors.relative_error = tr.errors.back();
  return run;
}

inline void multiplicative_step(Matrix& target, const Matrix& num, const Matrix& den,
                                const SolverOptions& opts) {
  if (opts.mask_zero_denominators) {
    for (Index j = 0; j < target.cols(); ++j) {
      for (Index i = 0; i < target.rows(); ++i) {
        if (den(i, j) > 0.0) target(i, j) *= num(i, j) / den(i, j);
      }
    }
  } else {
    target.array() *= num.array() / (den.array() + opts.guard);
  }
}

}  // namespace detail

/// Lee-Seung Frobenius updates, H first:
///   H <- H .* (W^T V) ./ (W^T W H),   W <- W .* (V H^T) ./ (W H H^T).
inline SolverRun mult_run(const MatrixRef& v, Matrix w0, Matrix h0, const SolverOptions& opts = {}) {
  detail::check_factor_shapes(v, w0, h0);
  return detail::iterate(v, std::move(w0), std::move(h0), opts, [&](Matrix& w, Matrix& h) {
    const Matrix wtv = w.transpose() * v;
    const Matrix wtw = w.transpose() * w;
    detail::multiplicative_step(h, wtv, wtw * h, opts);
    const Matrix vht = v * h.transpose();
    const Matrix hht = h * h.transpose();
    detail::multiplicative_step(w, vht, w * hht, opts);
  });
}

/// Hierarchical ALS: closed-form nonnegative update of one column of W, then
/// one row of H, cycling over components.
inline SolverRun hals_run(const MatrixRef& v, Matrix w0, Matrix h0, const SolverOptions& opts = {}) {
  detail::check_factor_shapes(v, w0, h0);
  return detail::iterate(v, std::move(w0), std::move(h0), opts, [&](Matrix& w, Matrix& h) {
    const Index k = w.cols();
    const Matrix vht = v * h.transpose();
    const Matrix hht = h * h.transpose();
    for (Index c = 0; c < k; ++c) {
      const double d = hht(c, c);
      if (d <= 0.0) continue;
      w.col(c) = (w.col(c) + (vht.col(c) - w * hht.col(c)) / (d + opts.guard)).cwiseMax(0.0);
    }
    const Matrix wtv = w.transpose() * v;
    const Matrix wtw = w.transpose() * w;
    for (Index c = 0; c < k; ++c) {
      const double d = wtw(c, c);
      if (d <= 0.0) continue;
      h.row(c) = (h.row(c) + (wtv.row(c) - wtw.row(c) * h) / (d + opts.guard)).cwiseMax(0.0);
    }
  });
}

struct InitPair {
  Matrix w;  // F x K
  Matrix h;  // K x N
};

/// Entries i.i.d. Uniform(0, 1).
inline InitPair random_init(Index rows, Index cols, Index k, Rng& rng) {
  if (rows < 1 || cols < 1 || k < 1) throw Error(Errc::invalid_argument, "dimensions must be >= 1");
  InitPair out{Matrix(rows, k), Matrix(k, cols)};
  for (Index j = 0; j < k; ++j)
    for (Index i = 0; i < rows; ++i) out.w(i, j) = rng.uniform();
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < k; ++i) out.h(i, j) = rng.uniform();
  return out;
}

struct SpkmResult {
  Matrix w;                 // unit centroids, F x K
  Matrix h;                 // [W^T V]_+, K x N
  std::vector<int> labels;  // cluster of each column
};

/// Spherical k-means on unit-normalized columns: assign by largest cosine,
/// recompute each centroid as the normalized sum of its members. Initial
/// centroids are K distinct columns picked by k-means++ seeding under the
/// cosine dissimilarity 1 - z_i^T z_j; an empty cluster keeps its previous
/// centroid.
inline SpkmResult spkm_init(const MatrixRef& v, Index k, int iters, Rng& rng) {
  const Index n = v.cols();
  if (k < 1 || k > n) throw Error(Errc::k_exceeds_n, "need 1 <= K <= N");
  const Matrix z = normalize_columns(v).columns;

  SpkmResult out;
  out.w = Matrix(v.rows(), k);
  std::vector<bool> taken(static_cast<std::size_t>(n), false);
  Vector dist = Vector::Constant(n, std::numeric_limits<double>::infinity());
  Index pick = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
  for (Index c = 0; c < k; ++c) {
    if (c > 0) {
      double total = 0.0;
      for (Index m = 0; m < n; ++m) total += taken[static_cast<std::size_t>(m)] ? 0.0 : dist(m);
      pick = -1;
      if (total > 0.0) {
        double r = rng.uniform() * total;
        for (Index m = 0; m < n; ++m) {
          if (taken[static_cast<std::size_t>(m)] || dist(m) <= 0.0) continue;
          pick = m;
          r -= dist(m);
          if (r <= 0.0) break;
        }
      }
      if (pick < 0) {  // all remaining columns coincide with a centroid
        for (Index m = 0; m < n && pick < 0; ++m) {
          if (!taken[static_cast<std::size_t>(m)]) pick = m;
        }
      }
    }
    taken[static_cast<std::size_t>(pick)] = true;
    out.w.col(c) = z.col(pick);
    dist = dist.cwiseMin((1.0 - (z.transpose() * z.col(pick)).array()).cwiseMax(0.0).matrix());
  }
  out.labels.assign(static_cast<std::size_t>(n), 0);

  auto assign = [&]() {
    const Matrix sims = out.w.transpose() * z;
    for (Index m = 0; m < n; ++m) {
      Index best = 0;
      for (Index c = 1; c < k; ++c) {
        if (sims(c, m) > sims(best, m)) best = c;
      }
      out.labels[static_cast<std::size_t>(m)] = static_cast<int>(best);
    }
  };
  for (int it = 0; it < iters; ++it) {
    assign();
    Matrix sums = Matrix::Zero(v.rows(), k);
    for (Index m = 0; m < n; ++m) sums.col(out.labels[static_cast<std::size_t>(m)]) += z.col(m);
    for (Index c = 0; c < k; ++c) {
      const double norm = sums.col(c).norm();
      if (norm > 0.0) out.w.col(c) = sums.col(c) / norm;
    }
  }
  assign();
  out.h = (out.w.transpose() * v).cwiseMax(0.0);
  return out;
}

/// Nonnegative double SVD (zero-fill variant): the leading pair uses absolute
/// values; every later pair keeps whichever of its positive or negative parts
/// carries more mass.
inline InitPair nndsvd_init(const MatrixRef& v, Index k) {
  if (k > std::min(v.rows(), v.cols())) throw Error(Errc::k_too_large, "K exceeds min(F, N)");
  const TruncatedSvd svd = truncated_svd(v, k);
  InitPair out{Matrix::Zero(v.rows(), k), Matrix::Zero(k, v.cols())};
  const double s0 = std::sqrt(svd.s(0));
  out.w.col(0) = s0 * svd.u.col(0).cwiseAbs();
  out.h.row(0) = s0 * svd.v.col(0).cwiseAbs().transpose();
  for (Index j = 1; j < k; ++j) {
    const Vector x = svd.u.col(j);
    const Vector y = svd.v.col(j);
    const Vector xp = x.cwiseMax(0.0), xn = (-x).cwiseMax(0.0);
    const Vector yp = y.cwiseMax(0.0), yn = (-y).cwiseMax(0.0);
    const double mp = xp.norm() * yp.norm();
    const double mn = xn.norm() * yn.norm();
    const bool positive = mp >= mn;
    const double mass = positive ? mp : mn;
    if (mass == 0.0) continue;
    const Vector& a = positive ? xp : xn;
    const Vector& b = positive ? yp : yn;
    const double scale = std::sqrt(svd.s(j) * mass);
    out.w.col(j) = scale * a / a.norm();
    out.h.row(j) = scale * (b / b.norm()).transpose();
  }
  return out;
}

/// W0 = W*, H0 = H* + eta * mean(H*) * U with U i.i.d. Uniform(0, 1). The
/// perturbation moves H off the multiplicative-update fixed point.
inline InitPair cr1nmf_init(const MatrixRef& v, Index k, double eta, Rng& rng,
                            const Cr1Options& opts = {}) {
  if (!(eta >= 0.0)) throw Error(Errc::invalid_argument, "eta must be >= 0");
  Cr1Result r = factorize(v, k, opts);
  InitPair out{std::move(r.factors.w), std::move(r.factors.h)};
  if (eta > 0.0) {
    const double scale = eta * out.h.mean();
    for (Index j = 0; j < out.h.cols(); ++j)
      for (Index i = 0; i < out.h.rows(); ++i) out.h(i, j) += scale * rng.uniform();
  }
  return out;
}

/// Iterative solver signature; external implementations can be registered.
using SolverFn = std::function<SolverRun(const MatrixRef&, Matrix, Matrix, const SolverOptions&)>;
/// Initializer signature: (V, K, rng) -> (W0, H0).
using InitializerFn = std::function<InitPair(const MatrixRef&, Index, Rng&)>;

struct InitializerSettings {
  int spkm_iterations = 10;
  double cr1_eta = 0.01;
};

/// String-keyed solvers ("mult", "hals") and initializers ("rand", "spkm",
/// "nndsvd", "cr1").
class AlgorithmRegistry {
 public:
  explicit AlgorithmRegistry(InitializerSettings settings = {}) {
    solvers_["mult"] = [](const MatrixRef& v, Matrix w, Matrix h, const SolverOptions& o) {
      return mult_run(v, std::move(w), std::move(h), o);
    };
    solvers_["hals"] = [](const MatrixRef& v, Matrix w, Matrix h, const SolverOptions& o) {
      return hals_run(v, std::move(w), std::move(h), o);
    };
    initializers_["rand"] = [](const MatrixRef& v, Index k, Rng& rng) {
      return random_init(v.rows(), v.cols(), k, rng);
    };
    initializers_["spkm"] = [settings](const MatrixRef& v, Index k, Rng& rng) {
      SpkmResult s = spkm_init(v, k, settings.spkm_iterations, rng);
      return InitPair{std::move(s.w), std::move(s.h)};
    };
    initializers_["nndsvd"] = [](const MatrixRef& v, Index k, Rng&) { return nndsvd_init(v, k); };
    initializers_["cr1"] = [settings](const MatrixRef& v, Index k, Rng& rng) {
      return cr1nmf_init(v, k, settings.cr1_eta, rng);
    };
  }

  void add_solver(const std::string& name, SolverFn fn) { solvers_[name] = std::move(fn); }
  void add_initializer(const std::string& name, InitializerFn fn) {
    initializers_[name] = std::move(fn);
  }

  bool has_solver(const std::string& name) const { return solvers_.count(name) != 0; }
  bool has_initializer(const std::string& name) const { return initializers_.count(name) != 0; }

  const SolverFn& solver(const std::string& name) const {
    auto it = solvers_.find(name);
    if (it == solvers_.end()) throw Error(Errc::invalid_argument, "unknown solver '" + name + "'");
    return it->second;
  }

  const InitializerFn& initializer(const std::string& name) const {
    auto it = initializers_.find(name);
    if (it == initializers_.end()) {
      throw Error(Errc::invalid_argument, "unknown initializer '" + name + "'");
    }
    return it->second;
  }

 private:
  std::map<std::string, SolverFn> solvers_;
  std::map<std::string, InitializerFn> initializers_;
};

}  // namespace conic_nmf
