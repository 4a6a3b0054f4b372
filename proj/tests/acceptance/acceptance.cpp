// Prints one PASS/FAIL line per acceptance criterion; exits non-zero if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <nlohmann/json.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include "krylovflow/bilanczos.hpp"
#include "krylovflow/bound.hpp"
#include "krylovflow/continuum.hpp"
#include "krylovflow/csv.hpp"
#include "krylovflow/krylov_chain.hpp"
#include "krylovflow/lindbladian.hpp"
#include "krylovflow/spin_algebra.hpp"

using namespace krylovflow;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kOut = "acceptance_out";

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int cli(const std::string& args) {
  const std::string cmd = std::string(KRYLOVFLOW_CLI) + " " + args;
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string config(const char* name) { return (fs::path(KRYLOVFLOW_CONFIG_DIR) / name).string(); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Model {
  Superoperator op;
  ComplexVector seed;
  TridiagonalData tri;
};

Model tfim(int n, double rate) {
  const auto spec = ModelSpec::with_default_placement(n, -1.05, 0.5, rate, rate);
  Model m{build_lindbladian(build_tfim(spec), build_jump_operators(spec)), uniform_seed(1 << n), {}};
  m.tri = m.op.hermitian ? hermitian_lanczos(m.op, m.seed) : bilanczos(m.op, m.seed, m.seed);
  return m;
}

Outcome ac1_closed_conservation() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto m = tfim(4, 0.0);
  const auto mom = moments(evolve_chain(m.tri, uniform_grid(10.0, 400)));
  double worst = 0.0;
  for (double p : mom.P) worst = std::max(worst, std::abs(p - 1.0));
  const double secs = seconds_since(t0);
  return {mom.size() == 400 && worst < 1e-8 && secs < 30.0,
          "N=4 closed, K=" + std::to_string(m.tri.krylov_dim()) + ", max|P-1| = " + num(worst) + " over " +
              std::to_string(mom.size()) + " samples, " + num(secs) + " s (limit 30 s)"};
}

Outcome ac2_biorthogonality() {
  const auto m = tfim(4, 0.01);
  return {m.tri.residual_biortho < 1e-10 && m.tri.residual_tridiag < 1e-8,
          "N=4 dissipative, K=" + std::to_string(m.tri.krylov_dim()) + ", max|Q^dag P - I| = " +
              num(m.tri.residual_biortho) + " (< 1e-10), max|Q^dag L P - T| = " + num(m.tri.residual_tridiag) +
              " (< 1e-8)"};
}

// Independent check: exponentiate the superoperator and project on the bases.
Outcome ac3_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto m = tfim(3, 0.01);
  const Series grid = uniform_grid(5.0, 201);
  const auto chain = moments(evolve_chain(m.tri, grid));
  const Eigen::MatrixXcd& P = *m.tri.p_basis;
  const Eigen::MatrixXcd& Q = *m.tri.q_basis;
  const Eigen::MatrixXcd iL = kI * m.op.matrix;
  const Eigen::MatrixXcd iLdag = -kI * m.op.matrix.adjoint();
  double worstC = 0.0, worstP = 0.0;
  for (std::size_t s = 0; s < grid.size(); ++s) {
    const Eigen::VectorXcd v = (iL * grid[s]).exp() * m.seed;
    const Eigen::VectorXcd w = (iLdag * grid[s]).exp() * m.seed;
    double C = 0.0, Pr = 0.0;
    Complex phase(1.0);
    for (int n = 0; n < m.tri.krylov_dim(); ++n) {
      const Complex phi = std::conj(phase) * Q.col(n).dot(v);
      const Complex psibar = phase * P.col(n).dot(w);
      C += n * (psibar * phi).real();
      Pr += std::norm(phi);
      phase *= kI;
    }
    worstC = std::max(worstC, std::abs(chain.C[s] - C) / std::max(std::abs(C), 1e-12));
    worstP = std::max(worstP, std::abs(chain.P[s] - Pr) / std::max(std::abs(Pr), 1e-12));
  }
  const double secs = seconds_since(t0);
  return {worstC < 1e-6 && worstP < 1e-6 && secs < 60.0,
          "N=3 dissipative, t <= 5: max rel dev C " + num(worstC) + ", P " + num(worstP) + " (< 1e-6), " +
              num(secs) + " s (limit 60 s)"};
}

struct N5Run {
  bool ok = false;
  std::string error;
  double lanczos_seconds = 0.0;
  json structure, bound, moments;
};

N5Run run_n5() {
  N5Run r;
  const fs::path dir = kOut / "dissipative_n5";
  fs::remove_all(dir);
  const std::string base = " --config " + config("dissipative_n5.json") + " --out " + dir.string() + " --quiet";
  const auto t0 = std::chrono::steady_clock::now();
  const int rc1 = cli("lanczos" + base);
  r.lanczos_seconds = seconds_since(t0);
  const int rc2 = rc1 == 0 ? cli("bound" + base) : -1;
  if (rc1 != 0 || rc2 != 0) {
    r.error = "CLI exit codes " + std::to_string(rc1) + ", " + std::to_string(rc2);
    return r;
  }
  r.structure = json::parse(slurp(dir / "structure.json"));
  r.bound = json::parse(slurp(dir / "bound.json"));
  r.moments = json::parse(slurp(dir / "moments.json"));
  r.ok = true;
  return r;
}

Outcome ac4_structure(const N5Run& r) {
  if (!r.ok) return {false, r.error};
  const auto& s = r.structure;
  const double bc = s["max_abs_b_minus_c"], b = s["max_abs_b"], rea = s["max_abs_re_a"], ima = s["max_abs_im_a"],
               min_im = s["min_im_a"];
  const bool c1 = bc < 1e-6 * b, c2 = rea < 1e-6 * ima, c3 = min_im >= -1e-10;
  return {c1 && c2 && c3, "N=5, first " + std::to_string(s["coefficients_checked"].get<int>()) +
                              ": max|b-c|/max|b| = " + num(bc / b) + (c1 ? " ok" : " FAIL") +
                              ", max|Re a|/max|Im a| = " + num(rea / ima) + (c2 ? " ok" : " FAIL") +
                              ", min Im a = " + num(min_im) + (c3 ? " ok" : " FAIL (needs >= -1e-10)")};
}

Outcome ac5_bound(const N5Run& r) {
  if (!r.ok) return {false, r.error};
  const auto& b = r.bound;
  const auto& m = r.moments;
  const bool holds = b["verdict"] == "holds";
  const double decay = m["decay_from_peak"];
  const double t_peak = m["t_peak"];
  const bool rises = t_peak > 0.0 && t_peak < 10.0;
  return {holds && rises && decay >= 0.5,
          "N=5: bound " + b["verdict"].get<std::string>() + " (" + std::to_string(b["violations"].get<int>()) +
              " samples beyond 1e-6*max(rhs), max(lhs-rhs)/max(rhs) = " +
              num(b["max_violation_over_max_rhs"].get<double>()) + "); C peak " +
              num(m["C_peak"].get<double>()) + " at t = " + num(t_peak) + ", decay by t=10: " +
              num(100 * decay) + "% (>= 50%)"};
}

Outcome ac6_saturation() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto tri = saturating_coefficients(1.0, 1.0, 400);
  const auto traj = evolve_chain(tri, uniform_grid(10.0, 400));
  const auto rep = dispersion_bound_check(moments(traj), tri.b[0], 1e-6);
  double lo = INFINITY, hi = -INFINITY;
  int used = 0;
  for (std::size_t i = 0; i < rep.t.size(); ++i) {
    if (traj.tail_mass[i] >= 1e-10) break;
    if (!(rep.rhs[i] > 0.0)) continue;
    lo = std::min(lo, rep.saturation_ratio[i]);
    hi = std::max(hi, rep.saturation_ratio[i]);
    ++used;
  }
  const double secs = seconds_since(t0);
  // 1.0 is attained exactly in exact arithmetic; allow rounding above it.
  const bool pass = used > 0 && lo >= 0.9999 && hi <= 1.0 + 1e-12 && secs < 10.0;
  char buf[160];
  std::snprintf(buf, sizeof buf, "K=400, %d samples with tail < 1e-10: lhs/rhs in [%.12f, 1 %+.2e], %.2f s",
                used, lo, hi - 1.0, secs);
  return {pass, buf};
}

Outcome ac7_mandelstam_tamm() {
  const auto m = tfim(3, 0.0);
  const double b1 = m.tri.b[0].real();
  const auto rep = dispersion_bound_check(moments(evolve_chain(m.tri, uniform_grid(10.0, 400))), b1, 1e-6);
  const auto mt = mandelstam_tamm_tau(rep, b1, 1e-4, 1e-6);
  int valid = 0;
  for (bool v : mt.valid) valid += v;
  return {mt.min_product >= 0.4999, "N=3 closed: min tau_K*b1 = " + num(mt.min_product) + " over " +
                                        std::to_string(valid) + " samples (>= 0.4999)"};
}

ContinuumSpec spec(ContinuumCase kind, double alpha, double beta) {
  ContinuumSpec s;
  s.kind = kind;
  s.alpha = alpha;
  s.beta = beta;
  return s;
}

Outcome ac8_case_ii() {
  const Series grid = uniform_grid(3.0, 301);
  bool pass = true;
  std::string detail;
  for (double alpha : {0.01, 3.0}) {
    const auto rep = continuum_vs_closed_form_report(spec(ContinuumCase::kConstantA, alpha, 2.0), grid);
    double p_exact = 0.0, p_char = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double e = std::exp(-2.0 * alpha * grid[i]);
      p_exact = std::max(p_exact, std::abs(rep.P_closed[i] - e) / e);
      p_char = std::max(p_char, std::abs(rep.P_char[i] - e) / e);
    }
    // Machine precision applies to the closed-form P; the solver's P is held to
    // the 1e-10 agreement like everything else it produces.
    pass = pass && rep.max_relC < 1e-10 && rep.max_relP < 1e-10 && p_exact <= 1e-15;
    detail += "(" + num(alpha) + ",2): relC " + num(rep.max_relC) + ", relP " + num(rep.max_relP) +
              ", P vs exp(-2at) closed form " + num(p_exact) + " solver " + num(p_char) + "; ";
  }
  detail.resize(detail.size() - 2);
  return {pass, detail};
}

Outcome ac9_case_i() {
  const Series grid = uniform_grid(3.0, 301);
  const auto res = characteristics_solver(spec(ContinuumCase::kLinearA, 0.0, 2.0), grid);
  double worst = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double C = std::expm1(4.0 * grid[i]) / 2.0;
    worst = std::max(worst, std::abs(res.C[i] - C) / std::max(C, 1e-300));
    worst = std::max(worst, std::abs(res.P[i] - 1.0));
  }
  std::string archived;
  for (double alpha : {0.01, 3.0}) {
    const auto rep = continuum_vs_closed_form_report(spec(ContinuumCase::kLinearA, alpha, 2.0), grid);
    const fs::path file = kOut / ("case_I_alpha_" + num(alpha) + "_beta_2.csv");
    std::ofstream out(file, std::ios::binary);
    write_continuum_csv(out, rep);
    archived += " " + file.string() + " (max relC " + num(rep.max_relC) + ", relP " + num(rep.max_relP) + ")";
  }
  return {worst < 1e-10, "alpha=0 limit max rel dev " + num(worst) + " (< 1e-10); discrepancy tables:" + archived};
}

Outcome ac10_determinism() {
  const fs::path a = kOut / "determinism_a", b = kOut / "determinism_b";
  fs::remove_all(a);
  fs::remove_all(b);
  const std::string cfg = " --config " + config("dissipative_n3.json") + " --quiet --out ";
  const int ra = cli("full" + cfg + a.string());
  const int rb = cli("full" + cfg + b.string());
  if (ra != 0 || rb != 0) return {false, "CLI exit codes " + std::to_string(ra) + ", " + std::to_string(rb)};
  std::set<std::string> names_a, names_b;
  for (const auto& e : fs::directory_iterator(a))
    if (e.path().extension() == ".csv") names_a.insert(e.path().filename().string());
  for (const auto& e : fs::directory_iterator(b))
    if (e.path().extension() == ".csv") names_b.insert(e.path().filename().string());
  if (names_a != names_b) return {false, "CSV file sets differ"};
  std::size_t bytes = 0;
  for (const auto& n : names_a) {
    const std::string x = slurp(a / n), y = slurp(b / n);
    if (x != y) return {false, n + " differs"};
    bytes += x.size();
  }
  return {!names_a.empty(), "N=3 full twice: " + std::to_string(names_a.size()) + " CSVs, " +
                                std::to_string(bytes) + " bytes, identical"};
}

Outcome ac11_scale(const N5Run& r) {
  if (!r.ok) return {false, r.error};
  return {r.lanczos_seconds < 300.0, "N=5 lanczos (d^2 = 1024) K=" + std::to_string(r.structure["krylov_dim"].get<int>()) +
                                         " in " + num(r.lanczos_seconds) + " s (limit 300 s)"};
}

}  // namespace

int main() {
  fs::create_directories(kOut);
  int failures = 0;
  auto report = [&](const char* id, const char* name, const std::function<Outcome()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%-5s %s  %s: %s [%.1f s]\n", id, o.pass ? "PASS" : "FAIL", name, o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  };

  report("AC1", "closed-system conservation", ac1_closed_conservation);
  report("AC2", "bi-orthogonality and tridiagonality", ac2_biorthogonality);
  report("AC3", "oracle equivalence", ac3_oracle);
  N5Run n5;
  try {
    n5 = run_n5();
  } catch (const std::exception& e) {
    n5.error = e.what();
  }
  report("AC4", "dissipative coefficient structure", [&] { return ac4_structure(n5); });
  report("AC5", "dispersion bound and complexity decay", [&] { return ac5_bound(n5); });
  report("AC6", "saturation of the bound", ac6_saturation);
  report("AC7", "Mandelstam-Tamm analogue", ac7_mandelstam_tamm);
  report("AC8", "continuum constant dissipation", ac8_case_ii);
  report("AC9", "continuum linear dissipation", ac9_case_i);
  report("AC10", "determinism", ac10_determinism);
  report("AC11", "scale ceiling", [&] { return ac11_scale(n5); });

  std::printf("%d of 11 criteria failed\n", failures);
  return failures ? 1 : 0;
}
