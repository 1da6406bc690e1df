#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

namespace stfm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Kronecker product, small operands only (tests, dense reference path).
inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// Row-wise Kronecker (face-splitting) product: C.row(i) = A.row(i) ⊗ B.row(i).
inline Matrix row_kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.row(i).segment(j * b.cols(), b.cols()) = a(i, j) * b.row(i);
  return out;
}

// (A ⊗ B) v without materializing the product, for v indexed with the B
// dimension fastest: out[i*rB + k] = sum_{j,l} A(i,j) B(k,l) v[j*cB + l].
inline Vector kron_mul(const Matrix& a, const Matrix& b, const Vector& v) {
  Eigen::Map<const Matrix> vm(v.data(), b.cols(), a.cols());
  Matrix out = b * vm * a.transpose();  // rB x rA
  return Eigen::Map<const Vector>(out.data(), out.size());
}

}  // namespace stfm
