#pragma once

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "virodyn/errors.hpp"

namespace virodyn {

using Matrix = Eigen::MatrixXd;
using Complex = std::complex<double>;

struct EigenDecomposition {
  std::vector<Complex> values;
  Eigen::MatrixXcd vectors;  // column i pairs with values[i]
};

namespace detail {

inline void require_square_finite(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw DimensionError("eigenvalues need a non-empty square matrix, got " +
                         std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
  if (!m.allFinite()) throw DomainError("eigenvalues: matrix has non-finite entries");
}

}  // namespace detail

/// Full eigen-decomposition of a real square matrix (Hessenberg + shifted QR).
inline EigenDecomposition eigen_decompose(const Matrix& m) {
  detail::require_square_finite(m);
  Eigen::EigenSolver<Matrix> solver(m, /*computeEigenvectors=*/true);
  if (solver.info() != Eigen::Success) {
    throw NumericalFailure("eigen-decomposition did not converge");
  }
  EigenDecomposition d;
  const auto& vals = solver.eigenvalues();
  d.values.assign(vals.data(), vals.data() + vals.size());
  d.vectors = solver.eigenvectors();
  return d;
}

inline std::vector<Complex> eigenvalues(const Matrix& m) {
  detail::require_square_finite(m);
  Eigen::EigenSolver<Matrix> solver(m, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw NumericalFailure("eigenvalue iteration did not converge");
  }
  const auto& vals = solver.eigenvalues();
  return {vals.data(), vals.data() + vals.size()};
}

/// Companion matrix of the monic polynomial x^n + c[0] x^{n-1} + ... + c[n-1].
inline Matrix companion(const std::vector<double>& c) {
  const auto n = static_cast<Eigen::Index>(c.size());
  Matrix m = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) m(0, j) = -c[static_cast<std::size_t>(j)];
  for (Eigen::Index i = 1; i < n; ++i) m(i, i - 1) = 1.0;
  return m;
}

}  // namespace virodyn
