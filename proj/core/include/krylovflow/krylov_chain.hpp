#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "krylovflow/bilanczos.hpp"
#include "krylovflow/lindbladian.hpp"
#include "krylovflow/types.hpp"

namespace krylovflow {

/// n_samples points t_k = k * t_max / (n_samples - 1).
Series uniform_grid(double t_max, int n_samples);

struct StepControl {
  /// Step halving stops once successive C(t_max) estimates agree to this,
  /// relative to max_t |C|, and the endpoint amplitudes agree likewise.
  double rel_tol = 1e-8;
  /// |phi_{K-1}|^2 above this marks a truncated chain as untrusted.
  double tail_cutoff = 1e-10;
  int max_halvings = 24;
};

/// Amplitudes on the Krylov chain, one column per time sample.
///
/// Operator expansions: |O(t)) = sum_n i^n phi_n |p_n),
/// (O(t)| = sum_n (-i)^n conj(psi_n) (q_n|.
struct ChainTrajectory {
  Series t;
  ComplexMatrix phi;   // K x T
  ComplexMatrix psi;   // K x T
  ComplexMatrix dphi;  // time derivatives at the samples, from the recursion
  ComplexMatrix dpsi;
  Series tail_mass;    // |phi_{K-1}(t)|^2
  int steps_per_interval = 0;
  bool exact_krylov = false;  // chain came from a breakdown-terminated run
  bool truncation_safe = true;

  int krylov_dim() const { return static_cast<int>(phi.rows()); }
};

/// Integrates
///   d/dt phi_n      = i a_n phi_n - b_{n+1} phi_{n+1} + c_n phi_{n-1}
///   d/dt conj(psi_n) = -i conj(a_n) conj(psi_n) - conj(c_{n+1}) conj(psi_{n+1})
///                      + conj(b_n) conj(psi_{n-1})
/// with classic RK4 at a fixed number of steps per sample interval, halving
/// the step until C(t_max) converges. Both recursions are integrated.
ChainTrajectory evolve_chain(const TridiagonalData& tri, const Series& t_grid,
                             const StepControl& control = {});

struct MomentSeries {
  Series t;
  Series C;       // Re sum_n n conj(psi_n) phi_n
  Series P;       // sum_n |phi_n|^2
  Series M2;      // sum_n n^2 |phi_n|^2
  Series Ctilde;  // C / P
  Series C_imag;  // Im sum_n n conj(psi_n) phi_n
  Series P_bilinear;  // Re sum_n conj(psi_n) phi_n
  /// Exact time derivatives, present when computed from a chain trajectory.
  std::optional<Series> dC;
  std::optional<Series> dP;
  std::vector<std::string> warnings;

  std::size_t size() const { return t.size(); }
  /// max_t |P_bilinear - P|
  double bilinear_gap() const;
};

MomentSeries moments(const ChainTrajectory& traj);

/// Evolves the full d^2-dimensional problem, v(t) = exp(i L t) p0 and
/// w(t) = exp(-i L^dag t) q0, then projects with phi_n = (-i)^n <q_n|v> and
/// conj(psi_n) = i^n <p_n|w>. Requires stored bases and d^2 <= 4096.
MomentSeries direct_evolution_oracle(const Superoperator& op, const ComplexVector& seed,
                                     const TridiagonalData& tri, const Series& t_grid);

/// Central differences in the interior, second-order one-sided stencils at the
/// ends. The grid must be uniform with at least 3 points.
Series finite_diff(const Series& values, const Series& t_grid);

/// Header `t,C,P,M2,Ctilde`.
void write_moments_csv(std::ostream& out, const MomentSeries& m);

}  // namespace krylovflow
