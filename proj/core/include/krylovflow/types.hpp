#pragma once

#include <complex>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace krylovflow {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

/// Real-valued sampled series (time series, coefficient magnitudes, ...).
using Series = std::vector<double>;

inline constexpr Complex kI{0.0, 1.0};

/// Largest entrywise modulus of M - M^dagger.
inline double hermiticity_defect(const ComplexMatrix& m) {
  if (m.rows() != m.cols()) return std::numeric_limits<double>::infinity();
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

}  // namespace krylovflow
