#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "krylovflow/lindbladian.hpp"
#include "krylovflow/types.hpp"

namespace krylovflow {

struct BiLanczosConfig {
  /// Upper bound on the Krylov dimension; 0 means the full space (d^2).
  int max_iter = 0;
  /// Relative to the running coefficient scale.
  double breakdown_tol = 1e-10;
  int reorth_passes = 2;
  bool store_bases = true;

  void validate() const;
};

enum class Termination {
  kBreakdown,         // invariant subspace found, K is the exact Krylov dimension
  kSeriousBreakdown,  // omega_j ~ 0 while both residuals are still large
  kMaxIter,
};

const char* to_string(Termination t) noexcept;

/// Tridiagonal representation T = Q^dag L P.
///
/// Diagonal a_0..a_{K-1}; b[j-1] = b_j multiplies |p_{j-1}) in the column of
/// |p_j) (superdiagonal), c[j-1] = c_j sits on the subdiagonal.
struct TridiagonalData {
  std::vector<Complex> a;
  std::vector<Complex> b;
  std::vector<Complex> c;
  std::optional<ComplexMatrix> p_basis;  // d^2 x K
  std::optional<ComplexMatrix> q_basis;
  double residual_biortho = 0.0;  // max |Q^dag P - I|
  double residual_tridiag = 0.0;  // max |Q^dag L P - T|
  Termination termination = Termination::kMaxIter;

  int krylov_dim() const { return static_cast<int>(a.size()); }
  ComplexMatrix dense() const;
  /// Exact Krylov space: evolution on the chain is not truncated.
  bool exact() const { return termination == Termination::kBreakdown; }
};

/// Two-sided Lanczos with full re-biorthogonalization.
///
/// a_0 = <q0|L p0>; for j >= 1: omega_j = <r_{j-1}|s_{j-1}>, c_j = sqrt|omega_j|,
/// b_j = conj(omega_j)/c_j, p_j = r_{j-1}/c_j, q_j = s_{j-1}/conj(b_j), then
/// `reorth_passes` sweeps of projection against all earlier basis vectors.
/// q0 is rescaled so that <q0|p0> = 1.
TridiagonalData bilanczos(const Superoperator& op, const ComplexVector& p0,
                          ComplexVector q0, const BiLanczosConfig& cfg = {});

/// Symmetric Lanczos for Hermitian generators; b == c, both real and >= 0.
TridiagonalData hermitian_lanczos(const Superoperator& op, const ComplexVector& v0,
                                  const BiLanczosConfig& cfg = {});

struct StructureReport {
  int coefficients_checked = 0;
  double max_bc_diff = 0.0;  // max |b_n - c_n|
  double max_abs_b = 0.0;
  double max_re_a = 0.0;     // max |Re a_n|
  double max_im_a = 0.0;     // max |Im a_n|
  double min_im_a = 0.0;
  bool dissipative = false;  // b = c = |b|, a = i|a|
  bool closed = false;       // a real, b = c
  std::string label;
};

/// Tests b_n = c_n = |b_n| and a_n = i|a_n| over the first `max_coefficients`
/// entries (all when 0). Relative tolerance `tol`; Im a_n may dip to -1e-10.
StructureReport check_open_structure(const TridiagonalData& tri, double tol,
                                     int max_coefficients = 0);

/// Header `n,a_re,a_im,b_re,b_im,c_re,c_im`; b and c blank at n = 0.
void write_coefficients_csv(std::ostream& out, const TridiagonalData& tri);
/// Reads the format above. Bases and residuals are left empty.
TridiagonalData read_coefficients_csv(std::istream& in);

}  // namespace krylovflow
