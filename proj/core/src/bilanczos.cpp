#include "krylovflow/bilanczos.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "krylovflow/csv.hpp"
#include "krylovflow/error.hpp"

namespace krylovflow {

namespace {

void check_finite(const ComplexVector& v, const char* what, int step) {
  if (!v.allFinite()) {
    fail(ErrorKind::kNumerical, std::string("bilanczos: non-finite ") + what +
                                    " at iteration " + std::to_string(step));
  }
}

void check_finite(Complex z, const char* what, int step) {
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
    fail(ErrorKind::kNumerical, std::string("bilanczos: non-finite ") + what +
                                    " at iteration " + std::to_string(step));
  }
}

// Biorthogonal projection of v against the first `count` columns:
// v -= basis * (dual^dag v).
void project_out(ComplexVector& v, const ComplexMatrix& basis, const ComplexMatrix& dual,
                 Eigen::Index count) {
  if (count == 0) return;
  const ComplexVector overlaps = dual.leftCols(count).adjoint() * v;
  v.noalias() -= basis.leftCols(count) * overlaps;
}

void finalize(TridiagonalData& tri, const Superoperator& op, ComplexMatrix& p,
              ComplexMatrix& q, bool store) {
  const Eigen::Index k = tri.krylov_dim();
  const ComplexMatrix pk = p.leftCols(k);
  const ComplexMatrix qk = q.leftCols(k);
  const ComplexMatrix gram = qk.adjoint() * pk;
  tri.residual_biortho =
      (gram - ComplexMatrix::Identity(k, k)).cwiseAbs().maxCoeff();
  const ComplexMatrix projected = qk.adjoint() * (op.matrix * pk);
  tri.residual_tridiag = (projected - tri.dense()).cwiseAbs().maxCoeff();
  if (store) {
    tri.p_basis = pk;
    tri.q_basis = qk;
  }
}

int resolve_max_iter(const BiLanczosConfig& cfg, Eigen::Index dim) {
  const int full = static_cast<int>(dim);
  return cfg.max_iter <= 0 ? full : std::min(cfg.max_iter, full);
}

}  // namespace

void BiLanczosConfig::validate() const {
  require(max_iter >= 0, "bilanczos: max_iter must be non-negative");
  require(std::isfinite(breakdown_tol) && breakdown_tol >= 1e-15,
          "bilanczos: breakdown_tol must be >= 1e-15");
  require(reorth_passes >= 0 && reorth_passes <= 8,
          "bilanczos: reorth_passes must be in 0..8");
}

const char* to_string(Termination t) noexcept {
  switch (t) {
    case Termination::kBreakdown: return "breakdown";
    case Termination::kSeriousBreakdown: return "serious_breakdown";
    case Termination::kMaxIter: return "max_iter";
  }
  return "unknown";
}

ComplexMatrix TridiagonalData::dense() const {
  const Eigen::Index k = krylov_dim();
  ComplexMatrix t = ComplexMatrix::Zero(k, k);
  for (Eigen::Index n = 0; n < k; ++n) t(n, n) = a[n];
  for (Eigen::Index j = 1; j < k; ++j) {
    t(j - 1, j) = b[j - 1];
    t(j, j - 1) = c[j - 1];
  }
  return t;
}

TridiagonalData bilanczos(const Superoperator& op, const ComplexVector& p0,
                          ComplexVector q0, const BiLanczosConfig& cfg) {
  cfg.validate();
  const Eigen::Index dim = op.dim();
  require(dim > 0 && op.matrix.cols() == dim, "bilanczos: operator must be square");
  require(p0.size() == dim && q0.size() == dim,
          "bilanczos: seed length does not match the operator dimension");
  require(p0.allFinite() && q0.allFinite(), "bilanczos: seeds must be finite");

  const Complex overlap = q0.dot(p0);  // <q0|p0>
  require(std::abs(overlap) > 1e-14 * std::max(1.0, p0.norm() * q0.norm()),
          "bilanczos: <q0|p0> vanishes, cannot normalize");
  q0 /= std::conj(overlap);

  const int max_iter = resolve_max_iter(cfg, dim);
  const ComplexMatrix& lmat = op.matrix;

  ComplexMatrix p(dim, max_iter);
  ComplexMatrix q(dim, max_iter);
  p.col(0) = p0;
  q.col(0) = q0;

  TridiagonalData tri;
  ComplexVector r = lmat * p0;
  ComplexVector s = lmat.adjoint() * q0;
  const double op_scale = std::max(r.norm(), s.norm());
  Complex a = q0.dot(r);
  check_finite(a, "a_0", 0);
  tri.a.push_back(a);
  r -= a * p0;
  s -= std::conj(a) * q0;

  double scale = std::max(op_scale, std::abs(a));
  tri.termination = Termination::kMaxIter;
  for (int j = 1; j < max_iter; ++j) {
    check_finite(r, "residual r", j);
    check_finite(s, "residual s", j);
    const Complex omega = r.dot(s);  // <r|s>
    const double cj = std::sqrt(std::abs(omega));
    const double threshold = cfg.breakdown_tol * scale;
    if (cj < threshold || cj == 0.0) {
      const bool benign = r.norm() < threshold || s.norm() < threshold;
      tri.termination = benign ? Termination::kBreakdown : Termination::kSeriousBreakdown;
      break;
    }
    const Complex bj = std::conj(omega) / cj;
    tri.b.push_back(bj);
    tri.c.push_back(Complex(cj, 0.0));
    scale = std::max(scale, cj);

    ComplexVector pj = r / cj;
    ComplexVector qj = s / std::conj(bj);
    for (int pass = 0; pass < cfg.reorth_passes; ++pass) {
      project_out(pj, p, q, j);
      project_out(qj, q, p, j);
    }
    p.col(j) = pj;
    q.col(j) = qj;

    r = lmat * pj;
    s = lmat.adjoint() * qj;
    a = qj.dot(r);
    check_finite(a, "a_j", j);
    tri.a.push_back(a);
    scale = std::max(scale, std::abs(a));
    r -= a * pj + bj * p.col(j - 1);
    s -= std::conj(a) * qj + Complex(cj, 0.0) * q.col(j - 1);
  }
  if (tri.krylov_dim() == max_iter && max_iter == dim) {
    tri.termination = Termination::kBreakdown;
  }

  finalize(tri, op, p, q, cfg.store_bases);
  return tri;
}

TridiagonalData hermitian_lanczos(const Superoperator& op, const ComplexVector& v0,
                                  const BiLanczosConfig& cfg) {
  cfg.validate();
  const Eigen::Index dim = op.dim();
  require(dim > 0 && op.matrix.cols() == dim, "hermitian_lanczos: operator must be square");
  require(v0.size() == dim, "hermitian_lanczos: seed length mismatch");
  require(std::abs(v0.norm() - 1.0) < 1e-12, "hermitian_lanczos: seed must have unit norm");
  const ComplexMatrix& lmat = op.matrix;
  require(hermiticity_defect(lmat) <= 1e-12 * std::max(1.0, lmat.cwiseAbs().maxCoeff()),
          "hermitian_lanczos: generator is not Hermitian");

  const int max_iter = resolve_max_iter(cfg, dim);
  ComplexMatrix v(dim, max_iter);
  v.col(0) = v0;

  TridiagonalData tri;
  ComplexVector r = lmat * v0;
  const double op_scale = r.norm();
  Complex a = v0.dot(r);
  check_finite(a, "a_0", 0);
  tri.a.push_back(a);
  r -= a * v0;

  double scale = std::max(op_scale, std::abs(a));
  tri.termination = Termination::kMaxIter;
  for (int j = 1; j < max_iter; ++j) {
    check_finite(r, "residual", j);
    const double bj = r.norm();
    if (bj < cfg.breakdown_tol * scale || bj == 0.0) {
      tri.termination = Termination::kBreakdown;
      break;
    }
    tri.b.push_back(Complex(bj, 0.0));
    tri.c.push_back(Complex(bj, 0.0));
    scale = std::max(scale, bj);

    ComplexVector vj = r / bj;
    for (int pass = 0; pass < cfg.reorth_passes; ++pass) project_out(vj, v, v, j);
    v.col(j) = vj;

    r = lmat * vj;
    a = vj.dot(r);
    check_finite(a, "a_j", j);
    tri.a.push_back(a);
    scale = std::max(scale, std::abs(a));
    r -= a * vj + bj * v.col(j - 1);
  }
  if (tri.krylov_dim() == max_iter && max_iter == dim) {
    tri.termination = Termination::kBreakdown;
  }

  finalize(tri, op, v, v, cfg.store_bases);
  if (tri.p_basis) tri.q_basis = tri.p_basis;
  return tri;
}

StructureReport check_open_structure(const TridiagonalData& tri, double tol,
                                     int max_coefficients) {
  StructureReport rep;
  const int k = tri.krylov_dim();
  const int n_a = max_coefficients > 0 ? std::min(max_coefficients, k) : k;
  const int n_bc = std::max(0, n_a - 1);
  rep.coefficients_checked = n_a;
  rep.min_im_a = n_a > 0 ? std::numeric_limits<double>::infinity() : 0.0;
  for (int n = 0; n < n_a; ++n) {
    rep.max_re_a = std::max(rep.max_re_a, std::abs(tri.a[n].real()));
    rep.max_im_a = std::max(rep.max_im_a, std::abs(tri.a[n].imag()));
    rep.min_im_a = std::min(rep.min_im_a, tri.a[n].imag());
  }
  for (int j = 0; j < n_bc; ++j) {
    rep.max_bc_diff = std::max(rep.max_bc_diff, std::abs(tri.b[j] - tri.c[j]));
    rep.max_abs_b = std::max(rep.max_abs_b, std::abs(tri.b[j]));
  }

  const bool b_equals_c = rep.max_bc_diff <= tol * rep.max_abs_b;
  rep.dissipative = b_equals_c && rep.max_im_a > 0.0 &&
                    rep.max_re_a <= tol * rep.max_im_a && rep.min_im_a >= -1e-10;
  rep.closed = b_equals_c &&
                rep.max_im_a <= tol * std::max({rep.max_re_a, rep.max_abs_b, 1e-300});
  if (rep.dissipative) {
    rep.label = "dissipative structure";
  } else if (rep.closed) {
    rep.label = "closed structure";
  } else {
    rep.label = "generic";
  }
  return rep;
}

void write_coefficients_csv(std::ostream& out, const TridiagonalData& tri) {
  out << "n,a_re,a_im,b_re,b_im,c_re,c_im\n";
  for (int n = 0; n < tri.krylov_dim(); ++n) {
    out << n << ',' << format_double(tri.a[n].real()) << ','
        << format_double(tri.a[n].imag()) << ',';
    if (n == 0) {
      out << ",,,";
    } else {
      out << format_double(tri.b[n - 1].real()) << ','
          << format_double(tri.b[n - 1].imag()) << ','
          << format_double(tri.c[n - 1].real()) << ','
          << format_double(tri.c[n - 1].imag());
    }
    out << '\n';
  }
}

TridiagonalData read_coefficients_csv(std::istream& in) {
  const CsvTable table = read_csv(in);
  const std::vector<std::string> expected = {"n", "a_re", "a_im", "b_re",
                                             "b_im", "c_re", "c_im"};
  if (table.header != expected) {
    fail(ErrorKind::kInvalidArgument, "coefficients CSV: unexpected header");
  }
  TridiagonalData tri;
  for (std::size_t row = 0; row < table.rows.size(); ++row) {
    const auto& cells = table.rows[row];
    if (parse_double(cells[0]) != double(row)) {
      fail(ErrorKind::kInvalidArgument, "coefficients CSV: rows must be n = 0, 1, ...");
    }
    tri.a.emplace_back(parse_double(cells[1]), parse_double(cells[2]));
    if (row > 0) {
      tri.b.emplace_back(parse_double(cells[3]), parse_double(cells[4]));
      tri.c.emplace_back(parse_double(cells[5]), parse_double(cells[6]));
    }
  }
  if (tri.a.empty()) fail(ErrorKind::kInvalidArgument, "coefficients CSV: no rows");
  return tri;
}

}  // namespace krylovflow
