#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "krylovflow/bilanczos.hpp"
#include "krylovflow/krylov_chain.hpp"
#include "krylovflow/types.hpp"

namespace krylovflow {

enum class DerivativeSource { kChainExact, kFiniteDifference };

const char* to_string(DerivativeSource s) noexcept;

/// Dispersion bound |dP/dt C - dC/dt|^2 <= 4 |b_1|^2 (M2 - C^2), per sample.
struct BoundReport {
  Series t;
  Series lhs;
  Series rhs;
  Series margin;  // rhs - lhs
  Series tau_K;   // sqrt(M2 - C^2) / |dC/dt|, +inf where dC/dt == 0
  Series saturation_ratio;  // lhs / rhs, NaN where rhs == 0
  Series dC;
  Series dP;
  /// margin < -tol * max(rhs): counted as failures.
  std::vector<std::size_t> violations;
  /// -tol * max(rhs) <= margin < 0: finite-difference noise, reported only.
  std::vector<std::size_t> noise_violations;
  double max_rhs = 0.0;
  double max_violation = 0.0;  // max_t (lhs - rhs), may be negative
  double tol = 0.0;
  DerivativeSource derivatives = DerivativeSource::kFiniteDifference;

  bool holds() const { return violations.empty(); }
  /// Min/max of the finite saturation ratios (NaN pair if none).
  std::pair<double, double> saturation_range() const;
};

/// Uses the exact chain derivatives carried by `m` when present, otherwise
/// finite_diff on the sampled C and P (uniform grid required).
BoundReport dispersion_bound_check(const MomentSeries& m, Complex b1, double tol);

struct RenormalizedBound {
  BoundReport report;  // lhs replaced by the renormalized form
  Series lhs_plain;    // |dP/dt C - dC/dt|^2 for comparison
  double identity_residual = 0.0;  // max |lhs' - lhs| / max(max lhs, 1)
};

/// lhs' = |(1 - P) dP/dt Ctilde + P dCtilde/dt|^2 with rhs unchanged. Throws
/// Error(kInvariant) if lhs' and lhs differ by more than 1e-8 * max(lhs, 1).
RenormalizedBound renormalized_bound_check(const MomentSeries& m, Complex b1, double tol);

/// <(Delta L)^2> at t = 0, which reduces to b_1 c_1.
Complex liouvillian_variance_t0(Complex a0, Complex b1, Complex c1);

struct MandelstamTamm {
  Series tau_K;
  std::vector<bool> valid;   // |dC/dt| above the noise floor
  double min_product = 0.0;  // min over valid samples of tau_K * |b_1|
  double noise_floor = 0.0;
  bool holds = false;        // min_product >= 1/2 - tol
};

/// tau_K b_1 >= 1/2 at samples where |dC/dt| > floor_rel * max|dC/dt|.
MandelstamTamm mandelstam_tamm_tau(const BoundReport& report, Complex b1, double tol,
                                   double floor_rel = 1e-6);

/// Closed chain with a_n = 0 and b_n = c_n = sqrt(alpha0 n (n - 1) / 4 + gamma0 n / 2),
/// the growth that saturates the bound.
TridiagonalData saturating_coefficients(double alpha0, double gamma0, int krylov_dim);

/// Header `t,lhs,rhs,margin,tau_K`.
void write_bound_csv(std::ostream& out, const BoundReport& report);

}  // namespace krylovflow
