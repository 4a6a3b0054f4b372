#pragma once

#include <vector>

#include "krylovflow/types.hpp"

namespace krylovflow {

/// Dense sites cap for superoperator assembly (d^2 = 4096 at N = 6).
inline constexpr int kMaxDenseSites = 6;

/// Matrix acting on column-stacked operators, vec(A X B) = (B^T (x) A) vec(X).
/// Operators evolve as d/dt vec(O) = i * matrix * vec(O).
struct Superoperator {
  ComplexMatrix matrix;
  bool hermitian = false;  // true iff built without jump operators

  Eigen::Index dim() const { return matrix.rows(); }
  /// Hilbert-space dimension d (dim() == d * d).
  Eigen::Index hilbert_dim() const;
};

/// Column-major stacking of a square matrix.
ComplexVector vectorize(const ComplexMatrix& m);
ComplexMatrix devectorize(const ComplexVector& v);

/// I (x) H - H^T (x) I. Rejects non-Hermitian H.
Superoperator build_liouvillian_closed(const ComplexMatrix& hamiltonian);

/// Closed Liouvillian plus (i/2) sum_k [I (x) Lk^dag Lk + Lk^T Lk^* (x) I
/// - 2 Lk^T (x) Lk^dag].
Superoperator build_lindbladian(const ComplexMatrix& hamiltonian,
                                const std::vector<ComplexMatrix>& jumps);

/// The unit-norm vector with every entry 1/d (length d^2).
ComplexVector uniform_seed(Eigen::Index d);

}  // namespace krylovflow
