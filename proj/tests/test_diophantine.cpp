// Copyright 2026 qpreduce contributors
// SPDX-License-Identifier: Apache-2.0
#include <sstream>

#include "doctest.h"
#include "qpr/diophantine.hpp"
#include "support.hpp"

using namespace qpr;
using namespace qpr::testing;

namespace {

const double kPhi = std::numbers::phi;

DiophantineSpec spec(double alpha, double tau, int K, ExponentMode mode = ExponentMode::base_tau) {
  DiophantineSpec s;
  s.alpha = alpha;
  s.tau = tau;
  s.K_check = K;
  s.exponent_mode = mode;
  return s;
}

double witness_ratio(const DiophantineCheck& c) { return c.worst.modulus / c.worst.threshold; }

}  // namespace

TEST_CASE("integer frequency with zero spectrum passes") {
  const std::vector<cplx> zero{0.0, 0.0};
  const auto c = check_assumption_A(FrequencyVector({1.0}), zero, spec(0.5, 1.01, 10));
  CHECK(c.pass);
  CHECK(c.min_ratio == doctest::Approx(2.0));
  CHECK(c.worst.modulus == 1.0);
}

TEST_CASE("golden frequencies agree with exhaustive enumeration") {
  const std::vector<cplx> zero{0.0, 0.0};
  const std::vector<double> om{1.0, kPhi};
  const auto c = check_assumption_A(FrequencyVector(om), zero, spec(0.1, 1.2, 50));
  const auto ref = brute_force_divisors(om, zero, 0.1, 1.2, 50);
  CHECK(c.entries == static_cast<std::size_t>(ref.entries));
  CHECK(c.min_ratio == doctest::Approx(ref.ratio).epsilon(1e-12));
  CHECK(c.worst.modulus == doctest::Approx(ref.modulus).epsilon(1e-12));
  CHECK(c.pass == (ref.ratio >= 1.0));

  const auto c3 = check_assumption_A(FrequencyVector(om), zero, spec(0.1, 1.2, 20, ExponentMode::triple_tau));
  const auto ref3 = brute_force_divisors(om, zero, 0.1, 3.6, 20);
  CHECK(c3.min_ratio == doctest::Approx(ref3.ratio).epsilon(1e-12));
}

TEST_CASE("random instances agree with exhaustive enumeration") {
  Rng g(61);
  for (int trial = 0; trial < 30; ++trial) {
    const int r = 1 + trial % 3;
    std::vector<double> om{1.0};
    for (int j = 1; j < r; ++j) om.push_back(uniform(g, 0.5, 3.0));
    const double v = uniform(g, 0.0, 2.0);
    const std::vector<cplx> vals{cplx(0, v), cplx(0, -v)};
    const int K = r == 3 ? 8 : 15;
    const double alpha = uniform(g, 0.01, 0.5);
    const auto c = check_assumption_A(FrequencyVector(om), vals, spec(alpha, 2.5, K));
    const auto ref = brute_force_divisors(om, vals, alpha, 2.5, K);
    CHECK(c.entries == static_cast<std::size_t>(ref.entries));
    CHECK(c.min_ratio == doctest::Approx(ref.ratio).epsilon(1e-12));
    CHECK(c.pass == (ref.ratio >= 1.0));
  }
}

TEST_CASE("Hill assumption reduces to the frequency condition") {
  const std::vector<double> om{1.0, kPhi};
  const auto c = check_assumption_A(FrequencyVector(om), std::vector<cplx>{0.0, 0.0}, spec(0.2, 1.1, 12));
  double best = 1e300;
  for (int k1 = -12; k1 <= 12; ++k1)
    for (int k2 = -12; k2 <= 12; ++k2) {
      const int order = std::abs(k1) + std::abs(k2);
      if (order == 0 || order > 12) continue;
      best = std::min(best, std::abs(k1 + k2 * kPhi) * std::pow(order, 1.1) / 0.2);
    }
  CHECK(c.min_ratio == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("larger alpha never rescues a failing check") {
  Rng g(62);
  const std::vector<double> om{1.0, std::sqrt(2.0)};
  for (int trial = 0; trial < 20; ++trial) {
    const double v = uniform(g, 0.0, 1.0);
    const std::vector<cplx> vals{cplx(0, v), cplx(0, -v)};
    const double alpha = uniform(g, 0.01, 0.3);
    const auto lo = check_assumption_A(FrequencyVector(om), vals, spec(alpha, 1.2, 10));
    const auto hi = check_assumption_A(FrequencyVector(om), vals, spec(2 * alpha, 1.2, 10));
    if (!lo.pass) CHECK_FALSE(hi.pass);
    CHECK(hi.min_ratio == doctest::Approx(lo.min_ratio / 2).epsilon(1e-12));
  }
}

TEST_CASE("reported witness attains the minimum") {
  const std::vector<double> om{1.0, kPhi};
  const std::vector<cplx> vals{cplx(0, 0.3), cplx(0, -0.3)};
  const auto c = check_assumption_A(FrequencyVector(om), vals, spec(0.05, 1.1, 15));
  CHECK(witness_ratio(c) == doctest::Approx(c.min_ratio).epsilon(1e-14));
  double w = 0.0;
  int order = 0;
  for (std::size_t j = 0; j < om.size(); ++j) {
    w += c.worst.k[j] * om[j];
    order += std::abs(c.worst.k[j]);
  }
  const cplx d = cplx(0.0, w) - vals[static_cast<std::size_t>(c.worst.i)] +
                 vals[static_cast<std::size_t>(c.worst.j)];
  CHECK(std::abs(d) == doctest::Approx(c.worst.modulus).epsilon(1e-12));
  CHECK(c.worst.threshold == doctest::Approx(0.05 / std::pow(order, 1.1)).epsilon(1e-14));
}

TEST_CASE("extended frequencies detect an exact resonance") {
  const auto c = check_extended_frequencies(FrequencyVector({1.0}), 4.0, spec(0.5, 1.1, 6));
  CHECK_FALSE(c.pass);
  CHECK(c.worst.modulus == 0.0);
  REQUIRE(c.worst.k.size() == 2);
  CHECK(c.worst.k[0] == -2 * c.worst.k[1]);
  CHECK(std::abs(c.worst.k[1]) == 1);
}

TEST_CASE("extended check agrees with exhaustive enumeration") {
  const std::vector<double> om{1.0, kPhi};
  const double b = 1.0001733e-3;
  const DiophantineSpec s = spec(0.5, 1.1, 10);
  const auto c = check_extended_frequencies(FrequencyVector(om), b, s);
  const std::vector<double> ext{1.0, kPhi, std::sqrt(b)};
  const auto ref = brute_force_divisors(ext, std::vector<cplx>{0.0}, s.alpha / 2, 5 * s.tau + 4, 10);
  CHECK(c.min_ratio == doctest::Approx(ref.ratio).epsilon(1e-12));
  CHECK(c.pass == (ref.ratio >= 1.0));
  // Small b: k = (0, 0, 1) alone has modulus sqrt(b) and fails the threshold.
  CHECK_FALSE(c.pass);

  const auto mixed = check_extended_frequencies(FrequencyVector(om), b, s, true);
  CHECK(mixed.min_ratio >= c.min_ratio);
  bool mixed_seen = false;
  for (std::size_t j = 0; j < om.size(); ++j) mixed_seen = mixed_seen || mixed.worst.k[j] != 0;
  CHECK(mixed_seen);
}

TEST_CASE("extended indices without the new component reduce to the frequency check") {
  const std::vector<double> om{1.0, kPhi};
  const DiophantineSpec s = spec(0.5, 1.1, 8);
  // A huge sqrt(b) makes every index with a nonzero last component harmless.
  const auto c = check_extended_frequencies(FrequencyVector(om), 1e8, s);
  const auto ref = brute_force_divisors(om, std::vector<cplx>{0.0}, s.alpha / 2, 5 * s.tau + 4, 8);
  CHECK(c.min_ratio == doctest::Approx(ref.ratio).epsilon(1e-12));
  CHECK(c.worst.k[2] == 0);
}

TEST_CASE("sweep grid uses interval midpoints") {
  const auto grid = sweep_grid(1e-3, 10);
  REQUIRE(grid.size() == 10);
  for (int j = 0; j < 10; ++j) CHECK(grid[static_cast<std::size_t>(j)] == doctest::Approx(1e-3 * (j + 0.5) / 10));
  CHECK(grid.front() > 0.0);
  CHECK(grid.back() < 1e-3);
  CHECK_THROWS_AS((void)sweep_grid(1e-3, 9), Error);
}

TEST_CASE("sweep without perturbation reduces everywhere") {
  CMat a(2, 2);
  a << 0, 1, -1, 0;
  const QPMatrix q(FrequencyVector({1.0, kPhi}), 2, 1.0, 3);
  const auto rep = sweep(a, q, 1e-3, 20, KamSchedule{}, 2);
  CHECK(rep.success_fraction == 1.0);
  CHECK(rep.clusters.empty());
  REQUIRE(rep.outcomes.size() == 20);
  for (std::size_t i = 1; i < rep.outcomes.size(); ++i) CHECK(rep.outcomes[i - 1].eps < rep.outcomes[i].eps);
  for (const auto& o : rep.outcomes) {
    REQUIRE(o.b.has_value());
    CHECK(*o.b == doctest::Approx(1.0));
  }
}

TEST_CASE("sweep over a tuned resonance reports a failure cluster") {
  const double mu = 0.8;
  CMat a(2, 2);
  a << 0, mu, -mu, 0;
  QPMatrix q(FrequencyVector({2 * mu}), 2, 1.0, 1);
  CMat half = CMat::Zero(2, 2);
  half(0, 0) = 0.5;
  half(1, 1) = -0.5;
  q.set_coeff({1}, half);
  q.set_coeff({-1}, half);
  q.set_real_flag(true);
  KamSchedule s;
  s.delta = 0.1;
  const auto rep = sweep(a, q, 1e-3, 10, s, 1);
  CHECK(rep.success_fraction == 0.0);
  REQUIRE(rep.clusters.size() == 1);
  CHECK(rep.clusters[0].grid_points == 10);
  CHECK(rep.clusters[0].failure == StepStatus::small_divisor);
  REQUIRE(rep.clusters[0].k.size() == 1);
  CHECK(std::abs(rep.clusters[0].k[0]) == 1);

  std::ostringstream os;
  write_sweep_csv(os, rep);
  CHECK(os.str().rfind("eps,", 0) == 0);
}

TEST_CASE("imaginary pair extraction") {
  CMat b(2, 2);
  b << 0, 1, -0.04, 0;
  const auto v = imaginary_pair_b(b);
  REQUIRE(v.has_value());
  CHECK(*v == doctest::Approx(0.04).epsilon(1e-14));

  CMat hyperbolic(2, 2);
  hyperbolic << 0, 1, 0.04, 0;
  CHECK_FALSE(imaginary_pair_b(hyperbolic).has_value());
}
