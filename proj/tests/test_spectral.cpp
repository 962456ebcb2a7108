// Copyright 2026 qpreduce contributors
// SPDX-License-Identifier: Apache-2.0
#include <algorithm>

#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "qpr/spectral.hpp"
#include "support.hpp"

using namespace qpr;
using namespace qpr::testing;

namespace {

// Greedy matching distance between two spectra of equal size.
double spectrum_distance(std::vector<cplx> a, std::vector<cplx> b) {
  double worst = 0.0;
  for (const cplx& x : a) {
    auto it = std::min_element(b.begin(), b.end(),
                               [&](cplx u, cplx v) { return std::abs(u - x) < std::abs(v - x); });
    worst = std::max(worst, std::abs(*it - x));
    b.erase(it);
  }
  return worst;
}

}  // namespace

TEST_CASE("diagonal matrix decomposes trivially") {
  CMat d = CMat::Zero(2, 2);
  d(0, 0) = 1.0;
  d(1, 1) = 2.0;
  const auto e = eigen_decompose(d);
  CHECK(e.values[0] == cplx(1.0));
  CHECK(e.values[1] == cplx(2.0));
  CHECK((e.basis.cwiseAbs() - CMat::Identity(2, 2).cwiseAbs()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("linearized Hill matrix has eigenvalues +-i sqrt(c)") {
  for (double c : {1e-3, 0.01, 2.0}) {
    CMat m(2, 2);
    m << 0, 1, -c, 0;
    const auto e = eigen_decompose(m);
    std::vector<cplx> expect{cplx(0, std::sqrt(c)), cplx(0, -std::sqrt(c))};
    CHECK(spectrum_distance(e.values, expect) < 1e-15);
  }
}

TEST_CASE("random Hamiltonian spectra match an independent eigensolver") {
  Rng g(31);
  for (int trial = 0; trial < 20; ++trial) {
    const CMat m = random_real_hamiltonian(4, g);
    const auto e = eigen_decompose(m);
    Eigen::ComplexEigenSolver<CMat> ref(m);
    std::vector<cplx> rv(ref.eigenvalues().data(), ref.eigenvalues().data() + 4);
    CHECK(spectrum_distance(e.values, rv) < 1e-9);
    CHECK(pm_pair_defect(e.values) < 1e-9);

    CMat d = CMat::Zero(4, 4);
    for (int i = 0; i < 4; ++i) d(i, i) = e.values[static_cast<std::size_t>(i)];
    CHECK(op_norm(e.basis * d * e.basis_inverse - m) <= 1e-9 * op_norm(m) * e.condition());
  }
}

TEST_CASE("larger matrices use the iterative path") {
  Rng g(32);
  const CMat m = random_real_hamiltonian(6, g);
  const auto e = eigen_decompose(m);
  CHECK(e.values.size() == 6);
  CHECK(pm_pair_defect(e.values) < 1e-9);
  CHECK((e.basis * e.basis_inverse - CMat::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("characteristic polynomial roots") {
  CMat m(2, 2);
  m << 0, 1, -4, 0;
  const auto c = characteristic_polynomial(m);
  REQUIRE(c.size() == 3);
  CHECK(std::abs(c[0] - cplx(4.0)) < 1e-15);
  CHECK(std::abs(c[1]) < 1e-15);
  CHECK(c[2] == cplx(1.0));
  const std::vector<cplx> cubic{cplx(-6), cplx(11), cplx(-6), cplx(1)};
  CHECK(spectrum_distance(polynomial_roots(cubic), {1.0, 2.0, 3.0}) < 1e-12);
}

TEST_CASE("defective matrix is rejected with its separation") {
  CMat jordan(2, 2);
  jordan << 0, 1, 0, 0;
  try {
    (void)eigen_decompose(jordan);
    FAIL("expected a defective-matrix error");
  } catch (const DefectiveMatrixError& e) {
    CHECK(e.kind() == ErrorKind::defective_matrix);
    CHECK(e.min_separation() < 1e-6);
  }
}

TEST_CASE("perturbation gate examples") {
  CMat d = CMat::Zero(2, 2);
  d(0, 0) = 1.0;
  d(1, 1) = 2.0;
  const auto e = eigen_decompose(d);
  REQUIRE(e.beta == doctest::Approx(1.0));
  const SeparationGate gate(1.0, 0.5, 2);
  CHECK(perturbation_gate(e, 0.0, gate).passed);
  CHECK(perturbation_gate(e, 0.19, gate).passed);
  CHECK_FALSE(perturbation_gate(e, 0.21, gate).passed);
  CHECK(perturbation_gate(e, 0.19, gate).threshold == doctest::Approx(0.2));
}

TEST_CASE("perturbation gate is monotone in the perturbation size") {
  Rng g(33);
  for (int trial = 0; trial < 10; ++trial) {
    const auto e = eigen_decompose(random_real_hamiltonian(2 + 2 * (trial % 2), g));
    const SeparationGate gate(uniform(g, 0.01, 1.0), 0.5, static_cast<int>(e.values.size()));
    bool failed = false;
    for (int i = 0; i <= 60; ++i) {
      const bool pass = perturbation_gate(e, 1e-6 * std::pow(1.3, i), gate).passed;
      if (failed) CHECK_FALSE(pass);
      failed = failed || !pass;
    }
  }
}

TEST_CASE("pairwise separation examples") {
  const std::vector<cplx> unit{cplx(0, 1), cplx(0, -1)};
  auto s = pairwise_separation(unit);
  CHECK(s.min_abs == 1.0);
  CHECK(s.min_gap == 2.0);

  const double r = std::sqrt(1.0 * 0.01);
  s = pairwise_separation(std::vector<cplx>{cplx(0, r), cplx(0, -r)});
  CHECK(s.min_abs == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(s.min_gap == doctest::Approx(0.2).epsilon(1e-15));

  Rng g(34);
  std::vector<cplx> v;
  for (int i = 0; i < 10; ++i) v.emplace_back(uniform(g), uniform(g));
  double abs_ref = 1e300, gap_ref = 1e300;
  for (std::size_t i = 0; i < v.size(); ++i) {
    abs_ref = std::min(abs_ref, std::abs(v[i]));
    for (std::size_t j = 0; j < v.size(); ++j)
      if (i != j) gap_ref = std::min(gap_ref, std::abs(v[i] - v[j]));
  }
  s = pairwise_separation(v);
  CHECK(s.min_abs == abs_ref);
  CHECK(s.min_gap == gap_ref);
}
