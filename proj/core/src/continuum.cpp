#include "krylovflow/continuum.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include <boost/numeric/odeint.hpp>

#include "krylovflow/csv.hpp"
#include "krylovflow/error.hpp"

namespace krylovflow {

namespace {

// log(e^u - 1) for u > 0 without overflow.
double log_expm1(double u) {
  return u > 30.0 ? u + std::log1p(-std::exp(-u)) : std::log(std::expm1(u));
}

double checked_exp(double v, const char* what) {
  const double r = std::exp(v);
  if (!std::isfinite(r)) fail(ErrorKind::kNumerical, std::string("analytic_C_P: overflow in ") + what);
  return r;
}

double rel_diff(double x, double ref) {
  const double d = std::abs(x - ref);
  if (d == 0.0) return 0.0;
  return d / std::max(std::abs(ref), std::numeric_limits<double>::min());
}

}  // namespace

const char* to_string(ContinuumCase c) noexcept {
  return c == ContinuumCase::kLinearA ? "linear_a" : "constant_a";
}

void ContinuumSpec::validate() const {
  require(std::isfinite(alpha) && alpha >= 0.0, "continuum: alpha must be finite and >= 0");
  require(std::isfinite(beta) && beta > 0.0, "continuum: beta must be finite and > 0");
  require(std::isfinite(c) && c > 0.0, "continuum: c must be finite and > 0");
}

std::pair<double, double> analytic_C_P(const ContinuumSpec& spec, double t) {
  spec.validate();
  require(std::isfinite(t) && t >= 0.0, "analytic_C_P: t must be finite and >= 0");
  if (t == 0.0) return {0.0, 1.0};
  const double a = spec.alpha;
  const double b = spec.beta;
  const double c = spec.c;
  const double u = 2.0 * b * t;
  // (c / beta)(e^{2 beta t} - 1), kept in log form.
  const double log_growth = std::log(c / b) + log_expm1(u);
  if (spec.kind == ContinuumCase::kConstantA) {
    const double P = std::exp(-2.0 * a * t);
    return {checked_exp(log_growth - 2.0 * a * t, "C"), P};
  }
  // 1 - e^{2 beta t} = -expm1(u) can be huge; its exponent is evaluated as written.
  const double c_exponent = (2.0 * a * c / b) * (-std::expm1(u) + 5.0 * t);
  const double p_exponent = (2.0 * a / b) * (-std::expm1(-u) + 5.0 * t);
  if (!std::isfinite(c_exponent)) fail(ErrorKind::kNumerical, "analytic_C_P: overflow in C exponent");
  return {checked_exp(log_growth + c_exponent, "C"), checked_exp(p_exponent, "P")};
}

CharacteristicsResult characteristics_solver(const std::function<double(double)>& b,
                                             const std::function<double(double)>& a,
                                             const Series& t_grid, double rel_tol) {
  namespace odeint = boost::numeric::odeint;
  using State = std::array<double, 2>;  // {x, A}
  require(!t_grid.empty(), "characteristics_solver: empty time grid");
  require(t_grid.front() == 0.0, "characteristics_solver: time grid must start at 0");
  require(rel_tol > 0.0 && rel_tol < 1e-3, "characteristics_solver: rel_tol out of range");
  for (std::size_t i = 1; i < t_grid.size(); ++i) {
    require(t_grid[i] > t_grid[i - 1], "characteristics_solver: time grid must increase");
  }

  auto rhs = [&](const State& s, State& ds, double /*y*/) {
    const double bx = b(s[0]);
    if (!(bx > 0.0)) {
      fail(ErrorKind::kNumerical,
           "characteristics_solver: b(x) <= 0 at x = " + format_double(s[0]));
    }
    ds[0] = bx;
    ds[1] = a(s[0]);
  };

  auto stepper = odeint::make_controlled(rel_tol * 1e-3, rel_tol, odeint::runge_kutta_dopri5<State>());
  CharacteristicsResult out;
  out.t = t_grid;
  out.C.reserve(t_grid.size());
  out.P.reserve(t_grid.size());
  out.x.reserve(t_grid.size());
  State s{0.0, 0.0};
  double y = 0.0;
  for (double t : t_grid) {
    const double y_end = 2.0 * t;
    if (y_end > y) {
      const double dy0 = std::min(1e-3, y_end - y);
      odeint::integrate_adaptive(stepper, rhs, s, y, y_end, dy0);
      y = y_end;
    }
    if (!std::isfinite(s[0]) || !std::isfinite(s[1])) {
      fail(ErrorKind::kNumerical, "characteristics_solver: non-finite state at t = " + format_double(t));
    }
    const double P = std::exp(-s[1]);
    out.x.push_back(s[0]);
    out.P.push_back(P);
    out.C.push_back(s[0] * P);
  }
  return out;
}

CharacteristicsResult characteristics_solver(const ContinuumSpec& spec, const Series& t_grid,
                                             double rel_tol) {
  spec.validate();
  return characteristics_solver([&](double x) { return spec.b_of(x); },
                                [&](double x) { return spec.a_of(x); }, t_grid, rel_tol);
}

ContinuumReport continuum_vs_closed_form_report(const ContinuumSpec& spec, const Series& t_grid,
                                          double rel_tol) {
  ContinuumReport rep;
  rep.spec = spec;
  rep.t = t_grid;
  const CharacteristicsResult ch = characteristics_solver(spec, t_grid, rel_tol);
  rep.C_char = ch.C;
  rep.P_char = ch.P;
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    const auto [C, P] = analytic_C_P(spec, t_grid[i]);
    rep.C_closed.push_back(C);
    rep.P_closed.push_back(P);
    rep.relC.push_back(rel_diff(C, ch.C[i]));
    rep.relP.push_back(rel_diff(P, ch.P[i]));
    rep.max_relC = std::max(rep.max_relC, rep.relC.back());
    rep.max_relP = std::max(rep.max_relP, rep.relP.back());
  }
  return rep;
}

void write_continuum_csv(std::ostream& out, const ContinuumReport& report) {
  write_csv(out, {"t", "C_closed", "P_closed", "C_char", "P_char", "relC", "relP"},
            {report.t, report.C_closed, report.P_closed, report.C_char, report.P_char, report.relC,
             report.relP});
}

}  // namespace krylovflow
