#include "krylovflow/spin_algebra.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <unsupported/Eigen/KroneckerProduct>

#include "krylovflow/error.hpp"

namespace krylovflow {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid_argument";
    case ErrorKind::kNumerical: return "numerical_failure";
    case ErrorKind::kInvariant: return "invariant_violation";
    case ErrorKind::kIo: return "io_error";
  }
  return "unknown";
}

ComplexMatrix pauli_matrix(Pauli kind) {
  ComplexMatrix m = ComplexMatrix::Zero(2, 2);
  switch (kind) {
    case Pauli::kI:
      m(0, 0) = 1.0;
      m(1, 1) = 1.0;
      break;
    case Pauli::kX:
      m(0, 1) = 1.0;
      m(1, 0) = 1.0;
      break;
    case Pauli::kY:
      m(0, 1) = -kI;
      m(1, 0) = kI;
      break;
    case Pauli::kZ:
      m(0, 0) = 1.0;
      m(1, 1) = -1.0;
      break;
    case Pauli::kPlus:
      m(0, 1) = 1.0;
      break;
    case Pauli::kMinus:
      m(1, 0) = 1.0;
      break;
  }
  return m;
}

ComplexMatrix site_operator(const ComplexMatrix& op, int site, int sites) {
  require(op.rows() == 2 && op.cols() == 2, "site_operator: operator must be 2x2");
  require(sites >= 1 && sites <= 30, "site_operator: site count out of range");
  require(site >= 1 && site <= sites,
          "site_operator: site " + std::to_string(site) + " outside 1.." +
              std::to_string(sites));
  // I_left (x) op (x) I_right
  const Eigen::Index left = Eigen::Index{1} << (site - 1);
  const Eigen::Index right = Eigen::Index{1} << (sites - site);
  const ComplexMatrix inner = Eigen::kroneckerProduct(
      ComplexMatrix::Identity(left, left), op);
  return Eigen::kroneckerProduct(inner, ComplexMatrix::Identity(right, right));
}

ModelSpec ModelSpec::with_default_placement(int sites, double g, double h,
                                            double alpha, double gamma) {
  ModelSpec spec;
  spec.sites = sites;
  spec.g = g;
  spec.h = h;
  spec.alpha = alpha;
  spec.gamma = gamma;
  spec.boundary_sites = {1};
  if (sites > 1) spec.boundary_sites.push_back(sites);
  for (int k = 2; k < sites; ++k) spec.bulk_sites.push_back(k);
  return spec;
}

void ModelSpec::validate() const {
  require(sites >= 1 && sites <= 12, "model: site count must be in 1..12");
  require(std::isfinite(g) && std::isfinite(h), "model: couplings must be finite");
  require(std::isfinite(alpha) && alpha >= 0.0,
          "model: alpha must be finite and non-negative");
  require(std::isfinite(gamma) && gamma >= 0.0,
          "model: gamma must be finite and non-negative");
  auto check_sites = [&](const std::vector<int>& list, const char* name) {
    for (int k : list) {
      require(k >= 1 && k <= sites, std::string("model: ") + name + " site " +
                                        std::to_string(k) + " outside 1.." +
                                        std::to_string(sites));
    }
    std::vector<int> sorted = list;
    std::sort(sorted.begin(), sorted.end());
    require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(),
            std::string("model: duplicate ") + name + " site");
  };
  check_sites(boundary_sites, "boundary");
  check_sites(bulk_sites, "bulk");
  if (!allow_overlap) {
    for (int k : boundary_sites) {
      require(std::find(bulk_sites.begin(), bulk_sites.end(), k) == bulk_sites.end(),
              "model: site " + std::to_string(k) +
                  " is both boundary and bulk (set allow_overlap to permit)");
    }
  }
}

ComplexMatrix build_tfim(const ModelSpec& spec) {
  spec.validate();
  const int n = spec.sites;
  const Eigen::Index dim = spec.hilbert_dim();
  const ComplexMatrix x = pauli_matrix(Pauli::kX);
  const ComplexMatrix z = pauli_matrix(Pauli::kZ);

  std::vector<ComplexMatrix> zs;
  zs.reserve(n);
  for (int j = 1; j <= n; ++j) zs.push_back(site_operator(z, j, n));

  ComplexMatrix hamiltonian = ComplexMatrix::Zero(dim, dim);
  for (int j = 1; j < n; ++j) hamiltonian -= zs[j - 1] * zs[j];
  for (int j = 1; j <= n; ++j) {
    hamiltonian -= spec.g * site_operator(x, j, n);
    hamiltonian -= spec.h * zs[j - 1];
  }
  return hamiltonian;
}

std::vector<ComplexMatrix> build_jump_operators(const ModelSpec& spec) {
  spec.validate();
  std::vector<ComplexMatrix> jumps;
  if (spec.alpha > 0.0) {
    const double amp = std::sqrt(spec.alpha);
    for (int k : spec.boundary_sites) {
      jumps.push_back(amp * site_operator(pauli_matrix(Pauli::kPlus), k, spec.sites));
      jumps.push_back(amp * site_operator(pauli_matrix(Pauli::kMinus), k, spec.sites));
    }
  }
  if (spec.gamma > 0.0) {
    const double amp = std::sqrt(spec.gamma);
    for (int k : spec.bulk_sites) {
      jumps.push_back(amp * site_operator(pauli_matrix(Pauli::kZ), k, spec.sites));
    }
  }
  return jumps;
}

}  // namespace krylovflow
