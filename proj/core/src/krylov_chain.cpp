#include "krylovflow/krylov_chain.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include <unsupported/Eigen/MatrixFunctions>

#include "krylovflow/csv.hpp"
#include "krylovflow/error.hpp"

namespace krylovflow {

Series uniform_grid(double t_max, int n_samples) {
  require(std::isfinite(t_max) && t_max > 0.0, "time grid: t_max must be positive");
  require(n_samples >= 3, "time grid: need at least 3 samples");
  Series t(n_samples);
  for (int k = 0; k < n_samples; ++k) t[k] = t_max * double(k) / double(n_samples - 1);
  return t;
}

namespace {

// Tridiagonal generators for phi and for chi = conj(psi).
struct ChainGenerator {
  ComplexVector diag_phi, upper_phi, lower_phi;  // i a_n, -b_{n+1}, c_n
  ComplexVector diag_chi, upper_chi, lower_chi;  // -i conj(a_n), -conj(c_{n+1}), conj(b_n)

  explicit ChainGenerator(const TridiagonalData& tri) {
    const Eigen::Index k = tri.krylov_dim();
    diag_phi.resize(k);
    diag_chi.resize(k);
    upper_phi = ComplexVector::Zero(std::max<Eigen::Index>(k - 1, 0));
    lower_phi = upper_phi;
    upper_chi = upper_phi;
    lower_chi = upper_phi;
    for (Eigen::Index n = 0; n < k; ++n) {
      diag_phi[n] = kI * tri.a[n];
      diag_chi[n] = -kI * std::conj(tri.a[n]);
    }
    for (Eigen::Index j = 0; j + 1 < k; ++j) {
      upper_phi[j] = -tri.b[j];
      lower_phi[j] = tri.c[j];
      upper_chi[j] = -std::conj(tri.c[j]);
      lower_chi[j] = std::conj(tri.b[j]);
    }
  }

  static void apply(const ComplexVector& diag, const ComplexVector& upper,
                    const ComplexVector& lower, const ComplexVector& x, ComplexVector& y) {
    const Eigen::Index k = x.size();
    y = diag.cwiseProduct(x);
    if (k > 1) {
      y.head(k - 1) += upper.cwiseProduct(x.tail(k - 1));
      y.tail(k - 1) += lower.cwiseProduct(x.head(k - 1));
    }
  }

  void phi_rhs(const ComplexVector& x, ComplexVector& y) const {
    apply(diag_phi, upper_phi, lower_phi, x, y);
  }
  void chi_rhs(const ComplexVector& x, ComplexVector& y) const {
    apply(diag_chi, upper_chi, lower_chi, x, y);
  }

  // Gershgorin bound on the spectral radius of either generator.
  double rate_bound() const {
    double best = 0.0;
    const Eigen::Index k = diag_phi.size();
    for (Eigen::Index n = 0; n < k; ++n) {
      double row = std::abs(diag_phi[n]);
      if (n + 1 < k) row += std::abs(upper_phi[n]) + std::abs(upper_chi[n]);
      if (n > 0) row += std::abs(lower_phi[n - 1]) + std::abs(lower_chi[n - 1]);
      best = std::max(best, row);
    }
    return best;
  }
};

template <typename Rhs>
void rk4_step(const Rhs& rhs, ComplexVector& x, double h, ComplexVector& k1,
              ComplexVector& k2, ComplexVector& k3, ComplexVector& k4,
              ComplexVector& tmp) {
  rhs(x, k1);
  tmp = x + (0.5 * h) * k1;
  rhs(tmp, k2);
  tmp = x + (0.5 * h) * k2;
  rhs(tmp, k3);
  tmp = x + h * k3;
  rhs(tmp, k4);
  x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

struct Integration {
  ComplexMatrix phi;
  ComplexMatrix chi;
};

Integration integrate(const ChainGenerator& gen, const Series& t_grid, int steps) {
  const Eigen::Index k = gen.diag_phi.size();
  const Eigen::Index samples = static_cast<Eigen::Index>(t_grid.size());
  Integration out{ComplexMatrix(k, samples), ComplexMatrix(k, samples)};
  ComplexVector phi = ComplexVector::Zero(k);
  ComplexVector chi = ComplexVector::Zero(k);
  phi[0] = 1.0;
  chi[0] = 1.0;
  out.phi.col(0) = phi;
  out.chi.col(0) = chi;
  ComplexVector k1, k2, k3, k4, tmp;
  auto phi_rhs = [&gen](const ComplexVector& x, ComplexVector& y) { gen.phi_rhs(x, y); };
  auto chi_rhs = [&gen](const ComplexVector& x, ComplexVector& y) { gen.chi_rhs(x, y); };
  for (Eigen::Index s = 1; s < samples; ++s) {
    const double h = (t_grid[s] - t_grid[s - 1]) / double(steps);
    for (int i = 0; i < steps; ++i) {
      rk4_step(phi_rhs, phi, h, k1, k2, k3, k4, tmp);
      rk4_step(chi_rhs, chi, h, k1, k2, k3, k4, tmp);
    }
    if (!phi.allFinite() || !chi.allFinite()) {
      fail(ErrorKind::kNumerical, "evolve_chain: non-finite amplitudes at t = " +
                                      std::to_string(t_grid[s]));
    }
    out.phi.col(s) = phi;
    out.chi.col(s) = chi;
  }
  return out;
}

void check_grid(const Series& t_grid, const char* who) {
  require(t_grid.size() >= 2, std::string(who) + ": time grid needs at least 2 points");
  require(t_grid.front() == 0.0, std::string(who) + ": time grid must start at 0");
  for (std::size_t i = 1; i < t_grid.size(); ++i) {
    require(std::isfinite(t_grid[i]) && t_grid[i] > t_grid[i - 1],
            std::string(who) + ": time grid must be strictly increasing");
  }
}

// Fills C, P, M2, ... from amplitude columns; chi holds conj(psi).
MomentSeries moments_from(const Series& t, const ComplexMatrix& phi, const ComplexMatrix& chi) {
  MomentSeries m;
  const Eigen::Index samples = static_cast<Eigen::Index>(t.size());
  const Eigen::Index k = phi.rows();
  Eigen::VectorXd n1(k), n2(k);
  for (Eigen::Index n = 0; n < k; ++n) {
    n1[n] = double(n);
    n2[n] = double(n) * double(n);
  }
  for (Eigen::Index s = 0; s < samples; ++s) {
    const Eigen::VectorXd prob = phi.col(s).cwiseAbs2();
    const double p = prob.sum();
    if (!(p >= 1e-300)) {
      m.warnings.push_back("probability underflow at t = " + std::to_string(t[s]) +
                           "; series truncated");
      break;
    }
    const Complex c = n1.cast<Complex>().dot(chi.col(s).cwiseProduct(phi.col(s)));
    const Complex pb = chi.col(s).cwiseProduct(phi.col(s)).sum();
    m.t.push_back(t[s]);
    m.C.push_back(c.real());
    m.C_imag.push_back(c.imag());
    m.P.push_back(p);
    m.P_bilinear.push_back(pb.real());
    m.M2.push_back(prob.dot(n2));
    m.Ctilde.push_back(c.real() / p);
  }
  return m;
}

}  // namespace

ChainTrajectory evolve_chain(const TridiagonalData& tri, const Series& t_grid,
                             const StepControl& control) {
  check_grid(t_grid, "evolve_chain");
  const int k = tri.krylov_dim();
  require(k >= 1, "evolve_chain: empty tridiagonal data");
  require(static_cast<int>(tri.b.size()) == k - 1 && static_cast<int>(tri.c.size()) == k - 1,
          "evolve_chain: b and c must have length K - 1");
  for (const auto* seq : {&tri.a, &tri.b, &tri.c}) {
    for (Complex z : *seq) {
      require(std::isfinite(z.real()) && std::isfinite(z.imag()),
              "evolve_chain: non-finite coefficient");
    }
  }
  require(control.rel_tol > 0.0, "evolve_chain: rel_tol must be positive");

  const ChainGenerator gen(tri);
  double max_interval = 0.0;
  for (std::size_t i = 1; i < t_grid.size(); ++i) {
    max_interval = std::max(max_interval, t_grid[i] - t_grid[i - 1]);
  }
  int steps = std::max(1, static_cast<int>(std::ceil(max_interval * gen.rate_bound() / 0.5)));

  // C over the whole run; the last entry is C(t_max).
  auto c_series = [k](const Integration& run) {
    Eigen::VectorXd c(run.phi.cols());
    for (Eigen::Index s = 0; s < run.phi.cols(); ++s) {
      Complex acc = 0.0;
      for (int n = 0; n < k; ++n) acc += double(n) * run.chi(n, s) * run.phi(n, s);
      c[s] = acc.real();
    }
    return c;
  };
  // C(t_max) may pass through zero, so its change is measured against the
  // largest |C| of the run. The endpoint amplitudes are checked as well,
  // which covers chains where C vanishes identically.
  auto agree = [&](const Integration& a, const Integration& b) {
    const Eigen::VectorXd ca = c_series(a), cb = c_series(b);
    const Eigen::Index last = ca.size() - 1;
    const double c_scale = cb.cwiseAbs().maxCoeff();
    if (std::abs(cb[last] - ca[last]) > control.rel_tol * c_scale) return false;
    const double amp_scale = std::max(b.phi.cwiseAbs().maxCoeff(), b.chi.cwiseAbs().maxCoeff());
    const double d_phi = (b.phi.col(last) - a.phi.col(last)).cwiseAbs().maxCoeff();
    const double d_chi = (b.chi.col(last) - a.chi.col(last)).cwiseAbs().maxCoeff();
    return std::max(d_phi, d_chi) <= control.rel_tol * amp_scale;
  };

  Integration coarse = integrate(gen, t_grid, steps);
  Integration fine;
  bool converged = false;
  for (int halving = 0; halving < control.max_halvings; ++halving) {
    steps *= 2;
    fine = integrate(gen, t_grid, steps);
    if (agree(coarse, fine)) {
      converged = true;
      break;
    }
    coarse = std::move(fine);
  }
  if (!converged) {
    fail(ErrorKind::kNumerical, "evolve_chain: step halving did not converge");
  }

  ChainTrajectory traj;
  traj.t = t_grid;
  traj.steps_per_interval = steps;
  traj.phi = std::move(fine.phi);
  traj.psi = fine.chi.conjugate();
  const Eigen::Index samples = traj.phi.cols();
  traj.dphi.resize(k, samples);
  traj.dpsi.resize(k, samples);
  ComplexVector buf;
  for (Eigen::Index s = 0; s < samples; ++s) {
    gen.phi_rhs(traj.phi.col(s), buf);
    traj.dphi.col(s) = buf;
    gen.chi_rhs(fine.chi.col(s), buf);
    traj.dpsi.col(s) = buf.conjugate();
  }
  traj.tail_mass.resize(samples);
  double max_tail = 0.0;
  for (Eigen::Index s = 0; s < samples; ++s) {
    traj.tail_mass[s] = std::norm(traj.phi(k - 1, s));
    max_tail = std::max(max_tail, traj.tail_mass[s]);
  }
  traj.exact_krylov = tri.exact();
  traj.truncation_safe = traj.exact_krylov || max_tail < control.tail_cutoff;
  return traj;
}

double MomentSeries::bilinear_gap() const {
  double gap = 0.0;
  for (std::size_t i = 0; i < P.size(); ++i) gap = std::max(gap, std::abs(P_bilinear[i] - P[i]));
  return gap;
}

MomentSeries moments(const ChainTrajectory& traj) {
  const ComplexMatrix chi = traj.psi.conjugate();
  MomentSeries m = moments_from(traj.t, traj.phi, chi);
  const Eigen::Index k = traj.phi.rows();
  Series dc, dp;
  for (std::size_t s = 0; s < m.size(); ++s) {
    const auto col = static_cast<Eigen::Index>(s);
    Complex dcs = 0.0;
    double dps = 0.0;
    for (Eigen::Index n = 0; n < k; ++n) {
      const Complex dchi = std::conj(traj.dpsi(n, col));
      dcs += double(n) * (dchi * traj.phi(n, col) + chi(n, col) * traj.dphi(n, col));
      dps += 2.0 * (std::conj(traj.phi(n, col)) * traj.dphi(n, col)).real();
    }
    dc.push_back(dcs.real());
    dp.push_back(dps);
  }
  m.dC = std::move(dc);
  m.dP = std::move(dp);
  if (!traj.truncation_safe) {
    m.warnings.push_back("chain truncated: tail mass exceeds cutoff");
  }
  return m;
}

MomentSeries direct_evolution_oracle(const Superoperator& op, const ComplexVector& seed,
                                     const TridiagonalData& tri, const Series& t_grid) {
  check_grid(t_grid, "direct_evolution_oracle");
  require(tri.p_basis.has_value() && tri.q_basis.has_value(),
          "direct_evolution_oracle: bases were not stored");
  require(op.dim() <= 4096, "direct_evolution_oracle: superoperator larger than 4096");
  const ComplexMatrix& pb = *tri.p_basis;
  const ComplexMatrix& qb = *tri.q_basis;
  require(pb.rows() == op.dim() && seed.size() == op.dim(),
          "direct_evolution_oracle: dimension mismatch");
  const Eigen::Index k = pb.cols();
  const Eigen::Index samples = static_cast<Eigen::Index>(t_grid.size());

  ComplexVector v = seed;
  ComplexVector w = qb.col(0);
  ComplexMatrix phi(k, samples), chi(k, samples);

  std::vector<Complex> minus_i_pow(k), i_pow(k);
  Complex acc_m = 1.0, acc_p = 1.0;
  for (Eigen::Index n = 0; n < k; ++n) {
    minus_i_pow[n] = acc_m;
    i_pow[n] = acc_p;
    acc_m *= -kI;
    acc_p *= kI;
  }
  auto project = [&](Eigen::Index s) {
    const ComplexVector qv = qb.adjoint() * v;
    const ComplexVector pw = pb.adjoint() * w;
    for (Eigen::Index n = 0; n < k; ++n) {
      phi(n, s) = minus_i_pow[n] * qv[n];
      chi(n, s) = i_pow[n] * pw[n];
    }
  };
  project(0);

  double cached_dt = -1.0;
  ComplexMatrix forward, backward;
  for (Eigen::Index s = 1; s < samples; ++s) {
    const double dt = t_grid[s] - t_grid[s - 1];
    if (std::abs(dt - cached_dt) > 1e-14 * std::max(1.0, dt)) {
      forward = (kI * dt * op.matrix).exp();
      backward = forward.adjoint();  // exp(-i dt L^dag)
      cached_dt = dt;
    }
    v = forward * v;
    w = backward * w;
    if (!v.allFinite() || !w.allFinite()) {
      fail(ErrorKind::kNumerical, "direct_evolution_oracle: non-finite state");
    }
    project(s);
  }
  return moments_from(t_grid, phi, chi);
}

Series finite_diff(const Series& values, const Series& t_grid) {
  const std::size_t n = values.size();
  require(n >= 3, "finite_diff: need at least 3 points");
  require(t_grid.size() == n, "finite_diff: series and grid lengths differ");
  const double h = (t_grid.back() - t_grid.front()) / double(n - 1);
  require(h > 0.0, "finite_diff: grid must be increasing");
  for (std::size_t i = 1; i < n; ++i) {
    require(std::abs((t_grid[i] - t_grid[i - 1]) - h) <= 1e-9 * h,
            "finite_diff: grid must be uniform");
  }
  Series d(n);
  d[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h);
  for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (values[i + 1] - values[i - 1]) / (2.0 * h);
  d[n - 1] = (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * h);
  return d;
}

void write_moments_csv(std::ostream& out, const MomentSeries& m) {
  write_csv(out, {"t", "C", "P", "M2", "Ctilde"}, {m.t, m.C, m.P, m.M2, m.Ctilde});
}

}  // namespace krylovflow
