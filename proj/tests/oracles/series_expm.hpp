// Dense matrix exponential by scaling-and-squaring of a plain Taylor series.
// Independent of the eigendecomposition path used by the library.
#pragma once

#include <Eigen/Core>
#include <cmath>
#include <complex>

namespace oracle {

template <class Matrix>
Matrix expm_series(const Matrix& a, int terms = 40) {
  using Real = typename Eigen::NumTraits<typename Matrix::Scalar>::Real;
  const Real norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  Real scaled = norm;
  while (scaled > Real(0.25)) {
    scaled /= 2;
    ++squarings;
  }
  const Matrix x = a / std::pow(Real(2), squarings);
  Matrix result = Matrix::Identity(a.rows(), a.cols());
  Matrix term = Matrix::Identity(a.rows(), a.cols());
  for (int k = 1; k <= terms; ++k) {
    term = (term * x / Real(k)).eval();
    result += term;
  }
  for (int s = 0; s < squarings; ++s) result = (result * result).eval();
  return result;
}

}  // namespace oracle
