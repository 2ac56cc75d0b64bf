#pragma once

#include <Eigen/SVD>

#include "conic_nmf/matrix.hpp"
#include "conic_nmf/random.hpp"

namespace testutil {

using conic_nmf::Index;
using conic_nmf::Matrix;
using conic_nmf::Vector;

inline Matrix uniform_matrix(Index rows, Index cols, conic_nmf::Rng& rng) {
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = rng.uniform();
  return m;
}

inline Matrix gaussian_matrix(Index rows, Index cols, conic_nmf::Rng& rng) {
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
  return m;
}

// Independent dense oracle: one-sided Jacobi SVD on the matrix itself, no Gram.
inline Vector oracle_singular_values(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues();
}

}  // namespace testutil
