#pragma once

#include <vector>

#include "krylovflow/types.hpp"

namespace krylovflow {

enum class Pauli { kI, kX, kY, kZ, kPlus, kMinus };

/// Standard 2x2 matrix; kPlus = (X + iY)/2 and kMinus = (X - iY)/2.
ComplexMatrix pauli_matrix(Pauli kind);

/// Embeds a single-site operator into an N-site chain. Site 1 is the leftmost
/// tensor factor, so site_operator(A, 1, 2) == A (x) I.
ComplexMatrix site_operator(const ComplexMatrix& op, int site, int sites);

/// Transverse-field Ising chain with open boundaries plus its dissipative
/// channels.
///
/// Every site in boundary_sites carries the pair sqrt(alpha) sigma^+ and
/// sqrt(alpha) sigma^-; every site in bulk_sites carries sqrt(gamma) sigma^z.
/// Site indices are 1-based.
struct ModelSpec {
  int sites = 1;
  double g = 0.0;
  double h = 0.0;
  double alpha = 0.0;
  double gamma = 0.0;
  std::vector<int> boundary_sites;
  std::vector<int> bulk_sites;
  bool allow_overlap = false;

  /// sigma^+- on {1, N}, sigma^z on {2, ..., N-1}.
  static ModelSpec with_default_placement(int sites, double g, double h,
                                          double alpha, double gamma);

  /// Throws Error(kInvalidArgument) on out-of-range sites, negative or
  /// non-finite strengths, or boundary/bulk overlap without allow_overlap.
  void validate() const;

  int hilbert_dim() const { return 1 << sites; }
};

/// H = -sum_j Z_j Z_{j+1} - g sum_j X_j - h sum_j Z_j.
ComplexMatrix build_tfim(const ModelSpec& spec);

std::vector<ComplexMatrix> build_jump_operators(const ModelSpec& spec);

}  // namespace krylovflow
