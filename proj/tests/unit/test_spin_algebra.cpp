#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "../support/oracles.hpp"
#include "krylovflow/error.hpp"
#include "krylovflow/spin_algebra.hpp"

using namespace krylovflow;

TEST_CASE("pauli matrices") {
  CHECK(oracle::max_abs(pauli_matrix(Pauli::kX) - oracle::X()) == 0.0);
  CHECK(oracle::max_abs(pauli_matrix(Pauli::kY) - oracle::Y()) == 0.0);
  CHECK(oracle::max_abs(pauli_matrix(Pauli::kZ) - oracle::Z()) == 0.0);
  CHECK(oracle::max_abs(pauli_matrix(Pauli::kI) - oracle::identity(2)) == 0.0);
  CHECK(oracle::max_abs(pauli_matrix(Pauli::kPlus) - oracle::raise()) == 0.0);
  CHECK(oracle::max_abs(pauli_matrix(Pauli::kMinus) - oracle::lower()) == 0.0);

  const ComplexMatrix z = pauli_matrix(Pauli::kZ);
  CHECK(oracle::max_abs(z * z - oracle::identity(2)) == 0.0);
  // (X +- iY)/2
  const ComplexMatrix x = pauli_matrix(Pauli::kX), y = pauli_matrix(Pauli::kY);
  CHECK(oracle::max_abs(pauli_matrix(Pauli::kPlus) - 0.5 * (x + kI * y)) == 0.0);
  CHECK(oracle::max_abs(pauli_matrix(Pauli::kMinus) - 0.5 * (x - kI * y)) == 0.0);
}

TEST_CASE("site_operator embeds on the requested tensor factor") {
  CHECK(oracle::max_abs(site_operator(oracle::X(), 1, 1) - oracle::X()) == 0.0);
  CHECK(oracle::max_abs(site_operator(oracle::Z(), 2, 2) - oracle::kron(oracle::identity(2), oracle::Z())) ==
        0.0);
  const auto expect = oracle::kron(oracle::kron(oracle::X(), oracle::identity(2)), oracle::identity(2));
  CHECK(oracle::max_abs(site_operator(oracle::X(), 1, 3) - expect) == 0.0);
  const auto middle = oracle::kron(oracle::kron(oracle::identity(2), oracle::Y()), oracle::identity(2));
  CHECK(oracle::max_abs(site_operator(oracle::Y(), 2, 3) - middle) == 0.0);

  CHECK_THROWS_AS(site_operator(oracle::X(), 0, 3), Error);
  CHECK_THROWS_AS(site_operator(oracle::X(), 4, 3), Error);
}

TEST_CASE("raising and lowering anticommute to identity on every site") {
  for (int n = 1; n <= 4; ++n) {
    for (int k = 1; k <= n; ++k) {
      const auto p = site_operator(pauli_matrix(Pauli::kPlus), k, n);
      const auto m = site_operator(pauli_matrix(Pauli::kMinus), k, n);
      CHECK(oracle::max_abs(p * m + m * p - oracle::identity(1 << n)) == 0.0);
    }
  }
}

TEST_CASE("tfim matches an element-by-element construction") {
  for (int n = 1; n <= 5; ++n) {
    const auto spec = ModelSpec::with_default_placement(n, -1.05, 0.5, 0, 0);
    CHECK(oracle::max_abs(build_tfim(spec) - oracle::tfim_by_elements(n, -1.05, 0.5)) < 1e-14);
  }
}

TEST_CASE("tfim small cases") {
  SUBCASE("single site has no bond term") {
    const auto H = build_tfim(ModelSpec::with_default_placement(1, 0.7, -0.3, 0, 0));
    CHECK(oracle::max_abs(H - (-0.7 * oracle::X() + 0.3 * oracle::Z())) < 1e-15);
  }
  SUBCASE("two sites, direct expansion") {
    const double g = 0.4, h = 1.3;
    const auto I = oracle::identity(2);
    const Eigen::MatrixXcd expect = -oracle::kron(oracle::Z(), oracle::Z()) -
                        g * (oracle::kron(oracle::X(), I) + oracle::kron(I, oracle::X())) -
                        h * (oracle::kron(oracle::Z(), I) + oracle::kron(I, oracle::Z()));
    CHECK(oracle::max_abs(build_tfim(ModelSpec::with_default_placement(2, g, h, 0, 0)) - expect) < 1e-15);
  }
  SUBCASE("two-site spectrum against brute-force diagonalization") {
    const auto H = build_tfim(ModelSpec::with_default_placement(2, -1.05, 0.5, 0, 0));
    const auto ref = oracle::tfim_by_elements(2, -1.05, 0.5);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> a(H), b(ref);
    CHECK((a.eigenvalues() - b.eigenvalues()).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("open boundary: no bond between the last and first site") {
    const auto H = build_tfim(ModelSpec::with_default_placement(3, 0.0, 0.0, 0, 0));
    // |000> has two satisfied bonds only.
    CHECK(H(0, 0).real() == doctest::Approx(-2.0));
  }
}

TEST_CASE("tfim is hermitian up to seven sites") {
  for (int n = 1; n <= 7; ++n) {
    const auto H = build_tfim(ModelSpec::with_default_placement(n, -1.05, 0.5, 0, 0));
    CHECK(oracle::max_abs(H - H.adjoint()) < 1e-14);
  }
}

TEST_CASE("adjacent pair of a three-site chain reproduces the two-site block") {
  // Contract site 3 with <0|.|0>: Z_3 -> +1, X_3 -> 0.
  const double g = -1.05, h = 0.5;
  const auto H3 = build_tfim(ModelSpec::with_default_placement(3, g, h, 0, 0));
  Eigen::MatrixXcd block(4, 4);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) block(r, c) = H3(2 * r, 2 * c);
  const auto I = oracle::identity(2);
  // Remaining: H2 - Z_2 (bond to site 3) - h (field on site 3).
  const Eigen::MatrixXcd expect = build_tfim(ModelSpec::with_default_placement(2, g, h, 0, 0)) -
                      oracle::kron(I, oracle::Z()) - h * oracle::identity(4);
  CHECK(oracle::max_abs(block - expect) < 1e-14);
}

TEST_CASE("jump operators") {
  SUBCASE("closed system") {
    CHECK(build_jump_operators(ModelSpec::with_default_placement(4, 1, 0, 0, 0)).empty());
  }
  SUBCASE("single boundary site") {
    ModelSpec s = ModelSpec::with_default_placement(2, 1, 0, 0.04, 0);
    s.boundary_sites = {1};
    s.bulk_sites = {};
    const auto jumps = build_jump_operators(s);
    REQUIRE(jumps.size() == 2);
    const auto I = oracle::identity(2);
    CHECK(oracle::max_abs(jumps[0] - 0.2 * oracle::kron(oracle::raise(), I)) < 1e-15);
    CHECK(oracle::max_abs(jumps[1] - 0.2 * oracle::kron(oracle::lower(), I)) < 1e-15);
  }
  SUBCASE("default placement on six sites") {
    const auto spec = ModelSpec::with_default_placement(6, -1.05, 0.5, 0.01, 0.01);
    CHECK(spec.boundary_sites == std::vector<int>{1, 6});
    CHECK(spec.bulk_sites == std::vector<int>{2, 3, 4, 5});
    const auto jumps = build_jump_operators(spec);
    REQUIRE(jumps.size() == 8);
    // Frobenius norms: sqrt(alpha) sigma+- has 32 unit entries, sqrt(gamma) sigma^z has 64.
    for (int k = 0; k < 4; ++k) CHECK(jumps[k].norm() == doctest::Approx(0.1 * std::sqrt(32.0)).epsilon(1e-14));
    for (int k = 4; k < 8; ++k) CHECK(jumps[k].norm() == doctest::Approx(0.1 * std::sqrt(64.0)).epsilon(1e-14));
    CHECK(oracle::max_abs(jumps[4] - 0.1 * site_operator(oracle::Z(), 2, 6)) < 1e-15);
  }
  SUBCASE("validation") {
    CHECK_THROWS_AS(build_jump_operators(ModelSpec::with_default_placement(3, 1, 0, -0.1, 0)), Error);
    CHECK_THROWS_AS(build_jump_operators(ModelSpec::with_default_placement(3, 1, 0, 0, -0.1)), Error);
    ModelSpec s = ModelSpec::with_default_placement(3, 1, 0, 0.1, 0.1);
    s.bulk_sites = {1, 2};
    CHECK_THROWS_AS(s.validate(), Error);
    s.allow_overlap = true;
    CHECK_NOTHROW(s.validate());
    CHECK(build_jump_operators(s).size() == 6);
    s.boundary_sites = {4};
    CHECK_THROWS_AS(s.validate(), Error);
  }
}
