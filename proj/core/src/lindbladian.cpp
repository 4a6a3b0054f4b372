#include "krylovflow/lindbladian.hpp"

#include <cmath>
#include <string>

#include <unsupported/Eigen/KroneckerProduct>

#include "krylovflow/error.hpp"

namespace krylovflow {

namespace {

void check_square_operator(const ComplexMatrix& m, const char* what) {
  require(m.rows() == m.cols() && m.rows() > 0,
          std::string(what) + " must be a non-empty square matrix");
  const Eigen::Index max_dim = Eigen::Index{1} << kMaxDenseSites;
  require(m.rows() <= max_dim,
          std::string(what) + ": dimension exceeds the dense cap of " +
              std::to_string(max_dim) + " (N <= " + std::to_string(kMaxDenseSites) +
              ")");
  require(m.allFinite(), std::string(what) + " has non-finite entries");
}

double tolerance_for(const ComplexMatrix& m) {
  return 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff());
}

}  // namespace

Eigen::Index Superoperator::hilbert_dim() const {
  const auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(double(dim()))));
  return d;
}

ComplexVector vectorize(const ComplexMatrix& m) {
  require(m.rows() == m.cols(), "vectorize: matrix must be square");
  // Eigen storage is column-major, so the reshaped view is exactly vec(M).
  return m.reshaped();
}

ComplexMatrix devectorize(const ComplexVector& v) {
  const auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(double(v.size()))));
  require(d * d == v.size(), "devectorize: length is not a perfect square");
  return v.reshaped(d, d);
}

Superoperator build_liouvillian_closed(const ComplexMatrix& hamiltonian) {
  check_square_operator(hamiltonian, "Hamiltonian");
  require(hermiticity_defect(hamiltonian) <= tolerance_for(hamiltonian),
          "build_liouvillian_closed: Hamiltonian is not Hermitian");
  const Eigen::Index d = hamiltonian.rows();
  const ComplexMatrix id = ComplexMatrix::Identity(d, d);
  Superoperator out;
  out.matrix = Eigen::kroneckerProduct(id, hamiltonian).eval();
  out.matrix -= Eigen::kroneckerProduct(hamiltonian.transpose().eval(), id).eval();
  out.hermitian = true;
  return out;
}

Superoperator build_lindbladian(const ComplexMatrix& hamiltonian,
                                const std::vector<ComplexMatrix>& jumps) {
  Superoperator out = build_liouvillian_closed(hamiltonian);
  if (jumps.empty()) return out;

  const Eigen::Index d = hamiltonian.rows();
  const ComplexMatrix id = ComplexMatrix::Identity(d, d);
  ComplexMatrix dissipator = ComplexMatrix::Zero(d * d, d * d);
  for (std::size_t k = 0; k < jumps.size(); ++k) {
    const ComplexMatrix& jump = jumps[k];
    require(jump.rows() == d && jump.cols() == d,
            "build_lindbladian: jump operator " + std::to_string(k) +
                " has dimension " + std::to_string(jump.rows()) + "x" +
                std::to_string(jump.cols()) + ", expected " + std::to_string(d));
    require(jump.allFinite(), "build_lindbladian: jump operator has non-finite entries");
    const ComplexMatrix ldl = jump.adjoint() * jump;
    const ComplexMatrix lt = jump.transpose();
    dissipator += Eigen::kroneckerProduct(id, ldl).eval();
    dissipator += Eigen::kroneckerProduct((lt * jump.conjugate()).eval(), id).eval();
    dissipator -= 2.0 * Eigen::kroneckerProduct(lt, jump.adjoint().eval()).eval();
  }
  out.matrix += (0.5 * kI) * dissipator;
  out.hermitian = false;
  return out;
}

ComplexVector uniform_seed(Eigen::Index d) {
  require(d >= 2, "uniform_seed: dimension must be at least 2");
  return ComplexVector::Constant(d * d, Complex(1.0 / double(d), 0.0));
}

}  // namespace krylovflow
