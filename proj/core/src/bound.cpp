#include "krylovflow/bound.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "krylovflow/csv.hpp"
#include "krylovflow/error.hpp"

namespace krylovflow {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::pair<Series, Series> derivatives_of(const MomentSeries& m, DerivativeSource& source) {
  if (m.dC && m.dP && m.dC->size() == m.size() && m.dP->size() == m.size()) {
    source = DerivativeSource::kChainExact;
    return {*m.dC, *m.dP};
  }
  source = DerivativeSource::kFiniteDifference;
  return {finite_diff(m.C, m.t), finite_diff(m.P, m.t)};
}

BoundReport evaluate(const MomentSeries& m, Complex b1, double tol, const Series& lhs,
                     Series dc, Series dp, DerivativeSource source) {
  BoundReport rep;
  const std::size_t n = m.size();
  rep.t = m.t;
  rep.lhs = lhs;
  rep.tol = tol;
  rep.derivatives = source;
  rep.rhs.resize(n);
  rep.margin.resize(n);
  rep.tau_K.resize(n);
  rep.saturation_ratio.resize(n);
  const double b1sq = std::norm(b1);
  for (std::size_t i = 0; i < n; ++i) {
    const double spread = std::max(0.0, m.M2[i] - m.C[i] * m.C[i]);
    rep.rhs[i] = 4.0 * b1sq * (m.M2[i] - m.C[i] * m.C[i]);
    rep.margin[i] = rep.rhs[i] - rep.lhs[i];
    rep.tau_K[i] = dc[i] == 0.0 ? std::numeric_limits<double>::infinity()
                                : std::sqrt(spread) / std::abs(dc[i]);
    rep.saturation_ratio[i] = rep.rhs[i] > 0.0 ? rep.lhs[i] / rep.rhs[i] : kNaN;
    rep.max_rhs = std::max(rep.max_rhs, rep.rhs[i]);
  }
  rep.max_violation = n ? -std::numeric_limits<double>::infinity() : 0.0;
  const double allowance = tol * rep.max_rhs;
  for (std::size_t i = 0; i < n; ++i) {
    rep.max_violation = std::max(rep.max_violation, -rep.margin[i]);
    if (rep.margin[i] < -allowance) {
      rep.violations.push_back(i);
    } else if (rep.margin[i] < 0.0) {
      rep.noise_violations.push_back(i);
    }
  }
  rep.dC = std::move(dc);
  rep.dP = std::move(dp);
  return rep;
}

}  // namespace

const char* to_string(DerivativeSource s) noexcept {
  return s == DerivativeSource::kChainExact ? "chain_exact" : "finite_difference";
}

std::pair<double, double> BoundReport::saturation_range() const {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double r : saturation_ratio) {
    if (std::isfinite(r)) {
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
  }
  if (lo > hi) return {kNaN, kNaN};
  return {lo, hi};
}

BoundReport dispersion_bound_check(const MomentSeries& m, Complex b1, double tol) {
  require(m.size() >= 3, "dispersion_bound_check: need at least 3 samples");
  require(tol >= 0.0, "dispersion_bound_check: tolerance must be non-negative");
  DerivativeSource source{};
  auto [dc, dp] = derivatives_of(m, source);
  Series lhs(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double x = dp[i] * m.C[i] - dc[i];
    lhs[i] = x * x;
  }
  return evaluate(m, b1, tol, lhs, std::move(dc), std::move(dp), source);
}

RenormalizedBound renormalized_bound_check(const MomentSeries& m, Complex b1, double tol) {
  require(m.size() >= 3, "renormalized_bound_check: need at least 3 samples");
  for (double p : m.P) {
    if (!(p >= 1e-300)) fail(ErrorKind::kNumerical, "renormalized_bound_check: P underflow");
  }
  DerivativeSource source{};
  auto [dc, dp] = derivatives_of(m, source);
  RenormalizedBound out;
  Series lhs(m.size());
  out.lhs_plain.resize(m.size());
  double max_plain = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double p = m.P[i];
    const double ctilde = m.C[i] / p;
    const double dctilde = (dc[i] * p - m.C[i] * dp[i]) / (p * p);
    const double x = (1.0 - p) * dp[i] * ctilde + p * dctilde;
    lhs[i] = x * x;
    const double y = dp[i] * m.C[i] - dc[i];
    out.lhs_plain[i] = y * y;
    max_plain = std::max(max_plain, out.lhs_plain[i]);
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    worst = std::max(worst, std::abs(lhs[i] - out.lhs_plain[i]));
  }
  out.identity_residual = worst / std::max(max_plain, 1.0);
  if (out.identity_residual > 1e-8) {
    fail(ErrorKind::kInvariant,
         "renormalized_bound_check: renormalized and plain forms disagree (" +
             std::to_string(out.identity_residual) + ")");
  }
  out.report = evaluate(m, b1, tol, lhs, std::move(dc), std::move(dp), source);
  return out;
}

Complex liouvillian_variance_t0(Complex /*a0*/, Complex b1, Complex c1) {
  // (a0^2 + b1 c1) - a0^2, with the a0^2 terms cancelled analytically.
  return b1 * c1;
}

MandelstamTamm mandelstam_tamm_tau(const BoundReport& report, Complex b1, double tol,
                                   double floor_rel) {
  MandelstamTamm mt;
  mt.tau_K = report.tau_K;
  double max_dc = 0.0;
  for (double d : report.dC) max_dc = std::max(max_dc, std::abs(d));
  mt.noise_floor = floor_rel * max_dc;
  mt.valid.resize(report.dC.size());
  mt.min_product = std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t i = 0; i < report.dC.size(); ++i) {
    mt.valid[i] = std::abs(report.dC[i]) > mt.noise_floor;
    if (!mt.valid[i]) continue;
    any = true;
    mt.min_product = std::min(mt.min_product, report.tau_K[i] * std::abs(b1));
  }
  if (!any) mt.min_product = kNaN;
  mt.holds = any && mt.min_product >= 0.5 - tol;
  return mt;
}

TridiagonalData saturating_coefficients(double alpha0, double gamma0, int krylov_dim) {
  require(std::isfinite(alpha0) && alpha0 >= 0.0, "saturating_coefficients: alpha0 must be >= 0");
  require(std::isfinite(gamma0) && gamma0 >= 0.0, "saturating_coefficients: gamma0 must be >= 0");
  require(krylov_dim >= 2, "saturating_coefficients: need K >= 2");
  TridiagonalData tri;
  tri.a.assign(krylov_dim, Complex(0.0, 0.0));
  for (int n = 1; n < krylov_dim; ++n) {
    const double bn = std::sqrt(0.25 * alpha0 * n * (n - 1.0) + 0.5 * gamma0 * n);
    tri.b.emplace_back(bn, 0.0);
    tri.c.emplace_back(bn, 0.0);
  }
  tri.termination = Termination::kMaxIter;
  return tri;
}

void write_bound_csv(std::ostream& out, const BoundReport& report) {
  write_csv(out, {"t", "lhs", "rhs", "margin", "tau_K"},
            {report.t, report.lhs, report.rhs, report.margin, report.tau_K});
}

}  // namespace krylovflow
