#pragma once

#include <functional>
#include <iosfwd>
#include <utility>

#include "krylovflow/types.hpp"

namespace krylovflow {

enum class ContinuumCase { kLinearA, kConstantA };

const char* to_string(ContinuumCase c) noexcept;

/// b(x) = beta x + c with a(x) = alpha x (kLinearA) or a(x) = alpha (kConstantA).
struct ContinuumSpec {
  ContinuumCase kind = ContinuumCase::kConstantA;
  double alpha = 0.0;
  double beta = 1.0;
  double c = 1.0;

  void validate() const;
  double b_of(double x) const { return beta * x + c; }
  double a_of(double x) const { return kind == ContinuumCase::kLinearA ? alpha * x : alpha; }
};

/// Closed-form (C, P) at time t for the two cases. Throws
/// Error(kNumerical) when a result overflows.
std::pair<double, double> analytic_C_P(const ContinuumSpec& spec, double t);

struct CharacteristicsResult {
  Series t;
  Series C;
  Series P;
  Series x;  // x(2t): position of the transported delta
};

/// Transported-delta solution along y = 2t: dx/dy = b(x), dA/dy = a(x) with
/// x(0) = A(0) = 0, then P = exp(-A(2t)) and C = x(2t) P. Adaptive
/// Dormand-Prince with relative tolerance `rel_tol`. Throws Error(kNumerical)
/// if b(x) <= 0 is met or the integrator fails.
CharacteristicsResult characteristics_solver(const std::function<double(double)>& b,
                                             const std::function<double(double)>& a,
                                             const Series& t_grid, double rel_tol = 1e-12);

CharacteristicsResult characteristics_solver(const ContinuumSpec& spec, const Series& t_grid,
                                             double rel_tol = 1e-12);

struct ContinuumReport {
  ContinuumSpec spec;
  Series t;
  Series C_closed;
  Series P_closed;
  Series C_char;
  Series P_char;
  Series relC;  // |C_closed - C_char| / max(|C_char|, tiny); 0 where both vanish
  Series relP;
  double max_relC = 0.0;
  double max_relP = 0.0;
};

ContinuumReport continuum_vs_closed_form_report(const ContinuumSpec& spec, const Series& t_grid,
                                          double rel_tol = 1e-12);

/// Header `t,C_closed,P_closed,C_char,P_char,relC,relP`.
void write_continuum_csv(std::ostream& out, const ContinuumReport& report);

}  // namespace krylovflow
