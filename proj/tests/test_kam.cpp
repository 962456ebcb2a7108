// Copyright 2026 qpreduce contributors
// SPDX-License-Identifier: Apache-2.0
#include <algorithm>

#include <unsupported/Eigen/MatrixFunctions>

#include "doctest.h"
#include "qpr/hill.hpp"
#include "qpr/kam.hpp"
#include "support.hpp"

using namespace qpr;
using namespace qpr::testing;

namespace {

const FrequencyVector kGolden({1.0, std::numbers::phi});

HillSystem golden_hill() {
  const std::vector<HillProblem::Term> terms{{{1, 0}, 0.5, 0.0}, {{0, 1}, 0.5, 0.0}};
  return build_system(HillProblem::from_terms(kGolden, 1.0, terms, 1.0));
}

KamSchedule hill_schedule() {
  KamSchedule s;
  s.delta = 0.5;
  return s;
}

CMat oscillator(double a, double b) {
  CMat m = CMat::Zero(4, 4);
  m(0, 2) = a;
  m(1, 3) = b;
  m(2, 0) = -a;
  m(3, 1) = -b;
  return m;
}

double symplecticity_gap(const CMat& m) {
  const CMat J = unit_J(static_cast<int>(m.rows()));
  return (m.transpose() * J * m - J).cwiseAbs().maxCoeff();
}

std::vector<double> random_angles(Rng& g, int r) {
  std::vector<double> th(static_cast<std::size_t>(r));
  for (auto& x : th) x = uniform(g, 0.0, 2 * std::numbers::pi);
  return th;
}

StepRecord synthetic(int m, double residual) {
  StepRecord r;
  r.m = m;
  r.residual_norm = residual;
  r.F = residual;
  return r;
}

struct StepInputs {
  CMat A_next;
  QPMatrix Q_tilde;
  QPMatrix P;
};

// One consistent step: P solves the homological equation for A_next and Q_tilde.
StepInputs random_step(Rng& g) {
  StepInputs s{oscillator(0.77, 1.31), random_hamiltonian_series(kGolden, 4, 3, 1.0, g, 1.0, false),
               QPMatrix(kGolden, 4, 1.0, 3)};
  s.P = solve(s.A_next, s.Q_tilde, 1e-3, 1.0, 0.25).P;
  return s;
}

}  // namespace

TEST_CASE("zero perturbation reduces immediately") {
  const CMat A = oscillator(0.77, 1.31);
  const QPMatrix Q(kGolden, 4, 1.0, 4);
  const auto res = reduce(A, Q, 1e-3, KamSchedule{});
  CHECK(res.reduced);
  CHECK(res.B == A);
  CHECK(res.factors.empty());
  REQUIRE(res.trace.size() == 1);
  CHECK(res.trace[0].m == 0);
}

TEST_CASE("Hill system reduces to a purely imaginary pair") {
  const auto sys = golden_hill();
  const double eps = 1e-3;
  const auto res = reduce(sys.A, sys.Q, eps, hill_schedule());
  REQUIRE(res.reduced);
  CHECK(is_hamiltonian(res.B, 1e-10));
  const auto e = eigen_decompose(res.B);
  REQUIRE(e.values.size() == 2);
  const double b = std::abs(e.values[0].imag() * e.values[1].imag());
  for (const cplx& v : e.values) CHECK(std::abs(v.real()) <= 1e-12 * std::abs(v));
  CHECK(std::abs(b - eps) <= 1.0 * eps * eps);

  const auto conv = convergence_report(res.trace);
  REQUIRE(conv.conclusive);
  CHECK(conv.slope >= 1.7);
  CHECK(conv.slope <= 2.3);
}

TEST_CASE("tuned resonance fails with a small divisor at the first step") {
  const double mu = 0.8;
  CMat A(2, 2);
  A << 0, mu, -mu, 0;
  const FrequencyVector w({2 * mu});
  QPMatrix Q(w, 2, 1.0, 1);
  CMat half = CMat::Zero(2, 2);
  half(0, 0) = 0.5;
  half(1, 1) = -0.5;
  Q.set_coeff({1}, half);
  Q.set_coeff({-1}, half);
  Q.set_real_flag(true);
  REQUIRE(is_hamiltonian(Q, 1e-14));

  KamSchedule s;
  s.delta = 0.1;
  const auto res = reduce(A, Q, 1e-3, s);
  CHECK_FALSE(res.reduced);
  CHECK(res.failure == StepStatus::small_divisor);
  CHECK(res.failed_step == 0);
  REQUIRE(!res.trace.empty());
  const auto& last = res.trace.back();
  CHECK(last.status == StepStatus::small_divisor);
  REQUIRE(last.worst_k.size() == 1);
  CHECK(std::abs(last.worst_k[0]) == 1);
}

TEST_CASE("invalid reduction input throws") {
  const auto sys = golden_hill();
  CHECK_THROWS_AS((void)reduce(sys.A, sys.Q, 0.0, hill_schedule()), Error);
  CMat bad = sys.A;
  bad(0, 0) = 1.0;
  CHECK_THROWS_AS((void)reduce(bad, sys.Q, 1e-3, hill_schedule()), Error);
}

TEST_CASE("exponential of zero and of a nilpotent matrix") {
  const QPMatrix zero(kGolden, 2, 1.0, 3);
  const auto ez = qp_exponential(zero, 0.1, 1e-16);
  const CMat I = CMat::Identity(2, 2);
  CHECK(ez.remainder_bound == 0.0);
  CHECK(ez.E.coeff_at(0) == I);
  CHECK(ez.Einv.coeff_at(0) == I);
  CHECK(weighted_norm(ez.E - QPMatrix::constant(kGolden, I, 1.0, 3), 1.0) == 0.0);

  CMat n(2, 2);
  n << 0, 1, 0, 0;
  const double c = 0.3;
  const auto en = qp_exponential(QPMatrix::constant(kGolden, n, 1.0, 2), c, 1e-16);
  CHECK(en.E.coeff_at(0) == I + c * n);
  CHECK(en.Einv.coeff_at(0) == I - c * n);
}

TEST_CASE("exponential of a constant matches a dense exponential") {
  Rng g(51);
  for (int trial = 0; trial < 5; ++trial) {
    CMat m = random_real_hamiltonian(4, g);
    m /= op_norm(m);
    const double c = 0.2;
    const auto ex = qp_exponential(QPMatrix::constant(kGolden, m, 1.0, 1), c, 1e-16);
    const CMat ref = (c * m).exp();
    CHECK((ex.E.coeff_at(0) - ref).cwiseAbs().maxCoeff() <= 1e-14);
    CHECK((ex.Einv.coeff_at(0) - (-c * m).exp()).cwiseAbs().maxCoeff() <= 1e-14);
  }
}

TEST_CASE("exponential of a quasi-periodic generator is inverse-consistent and symplectic") {
  Rng g(52);
  for (int trial = 0; trial < 5; ++trial) {
    const QPMatrix p = random_hamiltonian_series(kGolden, 4, 2, 1.0, g, 1.0, false);
    const double c = 0.1 / weighted_norm(p, 1.0);
    const auto ex = qp_exponential(p, c, 1e-16);
    CHECK(ex.remainder_bound <= 1e-16);
    const QPMatrix id = qp_product(ex.E, ex.Einv, {-1, 0.0});
    const QPMatrix I = QPMatrix::constant(kGolden, CMat::Identity(4, 4), 1.0, id.order());
    CHECK(weighted_norm(id - I, 0.5) <= 1e-14);
    for (int s = 0; s < 20; ++s) {
      const CMat e = evaluate_angles(ex.E, random_angles(g, 2));
      CHECK(symplecticity_gap(e) <= 1e-9);
    }
    // B_hat and B_tilde_hat against their definitions.
    const QPMatrix p1 = p.with_order(ex.E.order());
    const QPMatrix I1 = QPMatrix::constant(kGolden, CMat::Identity(4, 4), 1.0, ex.E.order());
    CHECK(weighted_norm(cplx(c * c) * ex.B_hat - (ex.E - I1 - cplx(c) * p1), 0.5) <= 1e-15);
    CHECK(weighted_norm(cplx(c * c) * ex.B_tilde_hat - (ex.Einv - I1 + cplx(c) * p1), 0.5) <= 1e-15);
  }
}

TEST_CASE("exponential rejects a generator that is too large") {
  Rng g(53);
  const QPMatrix p = random_hamiltonian_series(kGolden, 2, 2, 1.0, g);
  const double c = 0.6 / weighted_norm(p, 1.0);
  try {
    (void)qp_exponential(p, c, 1e-16);
    FAIL("expected a smallness error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::smallness);
  }
}

TEST_CASE("assembly with a zero generator gives zero") {
  const QPMatrix zero(kGolden, 4, 1.0, 3);
  const auto ex = qp_exponential(zero, 1e-2, 1e-16);
  const CMat A = oscillator(0.77, 1.31);
  for (auto form : {AssemblyForm::exact, AssemblyForm::paper_five_term})
    CHECK(assemble_next_Q(A, zero, ex, 1e-2, form).is_zero());
}

TEST_CASE("closed-form assembly agrees with the Lie series") {
  Rng g(54);
  for (int trial = 0; trial < 5; ++trial) {
    const auto s = random_step(g);
    const double h = 0.05 / weighted_norm(s.P, s.P.rho());
    const auto ex = qp_exponential(s.P, h, 1e-16);
    const QPMatrix closed = assemble_next_Q(s.A_next, s.P, ex, h, AssemblyForm::exact);
    const QPMatrix lie = lie_series_next_Q(s.P, s.Q_tilde, h);
    const int K = std::max(closed.order(), lie.order());
    const double scale = weighted_norm(lie, 0.5);
    CHECK(weighted_norm(closed.with_order(K) - lie.with_order(K), 0.5) <= 1e-10 * scale);
    CHECK(is_hamiltonian(closed, 1e-10));
  }
}

TEST_CASE("assembled perturbation conjugates the system at sampled times") {
  Rng g(55);
  const auto s = random_step(g);
  const double h = 0.05 / weighted_norm(s.P, s.P.rho());
  const auto ex = qp_exponential(s.P, h, 1e-16);
  const QPMatrix next = assemble_next_Q(s.A_next, s.P, ex, h, AssemblyForm::exact);
  const double tol = 1e-8 * (1.0 + op_norm(s.A_next));
  CHECK(conjugation_defect(s.A_next, s.Q_tilde, ex, h, next, 10, 7) <= tol);

  // Independent check with a finite-difference derivative of E in time.
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    const double t = uniform(g, -20.0, 20.0);
    const CMat E = direct_eval(ex.E, t);
    const CMat Einv = direct_eval(ex.Einv, t);
    const CMat dE = central_difference([&](double u) { return direct_eval(ex.E, u); }, t, 1e-3);
    const CMat lhs = Einv * (s.A_next + h * direct_eval(s.Q_tilde, t)) * E - Einv * dE;
    const CMat rhs = s.A_next + h * h * direct_eval(next, t);
    worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff());
  }
  CHECK(worst <= 1e-9);

  // The five-term closed form without the transport correction misses at order h^2.
  const QPMatrix five = assemble_next_Q(s.A_next, s.P, ex, h, AssemblyForm::paper_five_term);
  CHECK(conjugation_defect(s.A_next, s.Q_tilde, ex, h, five, 10, 7) > 100 * tol);
}

TEST_CASE("composition of transformation factors") {
  const CMat I = CMat::Identity(2, 2);
  const QPMatrix psi0 = compose_transformation({}, 6, kGolden, 2, 1.0);
  CHECK(psi0.coeff_at(0) == I);
  CHECK(weighted_norm(psi0 - QPMatrix::constant(kGolden, I, 1.0, psi0.order()), 1.0) == 0.0);

  const auto sys = golden_hill();
  const auto res = reduce(sys.A, sys.Q, 1e-3, hill_schedule());
  REQUIRE(res.reduced);
  REQUIRE(!res.factors.empty());
  const Factor& f = res.factors.front();
  const QPMatrix single = compose_transformation({f}, f.E.order(), kGolden, 2, f.E.rho());
  CHECK(weighted_norm(single - f.E, 0.0) <= 1e-15);

  const QPMatrix psi = compose_transformation(res.factors, res.psi_truncation, kGolden, 2, 0.25);
  Rng g(56);
  double worst = 0.0;
  for (int s = 0; s < 100; ++s)
    worst = std::max(worst, symplecticity_gap(evaluate_angles(psi, random_angles(g, 2))));
  CHECK(worst <= 1e-8);
}

TEST_CASE("convergence report on synthetic traces") {
  std::vector<StepRecord> geometric, squared, short_trace;
  double r = 1e-2;
  for (int m = 0; m < 5; ++m, r *= 0.1) geometric.push_back(synthetic(m, r));
  r = 1e-1;
  for (int m = 0; m < 4; ++m, r *= r) squared.push_back(synthetic(m, r));
  short_trace = {synthetic(0, 1e-2), synthetic(1, 1e-4)};

  const auto cg = convergence_report(geometric);
  REQUIRE(cg.conclusive);
  CHECK(cg.slope == doctest::Approx(1.0).epsilon(1e-12));
  const auto cs = convergence_report(squared);
  REQUIRE(cs.conclusive);
  CHECK(cs.slope == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(cs.cF1 == doctest::Approx(squared[2].F / squared[1].F));
  CHECK_FALSE(convergence_report(short_trace).conclusive);

  // Records after a failure are ignored.
  auto broken = squared;
  broken[2].status = StepStatus::diverged;
  CHECK_FALSE(convergence_report(broken).conclusive);
}

TEST_CASE("schedule identities") {
  KamSchedule s;
  s.rho = 1.3;
  s.alpha = 0.4;
  CHECK(s.alpha_at(0) == s.alpha / 2);
  CHECK(s.s_at(0) == s.rho / 2);
  CHECK(s.rho_at(0) == s.rho);
  CHECK(s.rho_at(1) == s.rho / 2);
  double sum = 0.0;
  for (int m = 1; m < 40; ++m) {
    CHECK(s.alpha_at(m) == doctest::Approx(s.alpha / ((m + 1.0) * (m + 1.0))));
    CHECK(s.s_at(m) == doctest::Approx(s.rho / std::pow(2.0, m + 2)));
    CHECK(s.rho_at(m + 1) == doctest::Approx(s.rho_at(m) - s.s_at(m)));
    CHECK(s.rho_at(m) - s.s_at(m) > s.rho / 4);
    sum += s.s_at(m);
  }
  CHECK(sum < s.rho / 2 - s.rho / 4);
  CHECK(s.floor_at(0, 1e-3) == doctest::Approx(2 * s.delta * 1e-3));
  CHECK(s.floor_at(3, 1e-3) == doctest::Approx(s.delta * 1e-3));
}

TEST_CASE("per-step invariants along a Hill reduction") {
  const auto sys = golden_hill();
  for (double eps : {5e-4, 1e-3, 2e-3}) {
    const auto res = reduce(sys.A, sys.Q, eps, hill_schedule());
    REQUIRE(res.reduced);
    for (const auto& rec : res.trace) {
      CHECK(is_hamiltonian(rec.A, 1e-10));
      if (rec.A_next.size() == 0) continue;
      CHECK(is_hamiltonian(rec.A_next, 1e-10));
      CHECK(rec.min_abs >= rec.floor);
      CHECK(rec.min_gap >= rec.floor);
      CHECK(rec.floor >= hill_schedule().delta * eps * (1 - 1e-15));
      CHECK(op_norm(rec.A_next - rec.A) <= rec.residual_norm * (1 + 1e-12));
    }
    Rng g(57);
    for (const auto& f : res.factors) {
      CHECK(is_hamiltonian(f.P, 1e-10));
      for (int s = 0; s < 10; ++s)
        CHECK(symplecticity_gap(evaluate_angles(f.E, random_angles(g, 2))) <= 1e-9);
    }
  }
}

TEST_CASE("quadratic smallness of one full step") {
  const auto sys = golden_hill();
  const auto sched = hill_schedule();
  const auto res = reduce(sys.A, sys.Q, 1e-2, sched);
  REQUIRE(res.trace.size() >= 3);
  REQUIRE(res.trace[1].status == StepStatus::ok);
  // ||Q_2|| / ||Q_1||^2 against the scale 1 / (alpha_1^2 s_1^{2 nu}).
  const double q1 = res.trace[1].residual_norm / res.trace[1].h;
  const double q2 = res.trace[2].residual_norm / res.trace[2].h;
  const double nu = sched.nu(2);
  const double scale = 1.0 / (sched.alpha_at(1) * sched.alpha_at(1) * std::pow(sched.s_at(1), 2 * nu));
  const double c = q2 / (q1 * q1) / scale;
  CHECK(c > 0.0);
  CHECK(c <= 1.0);
}

TEST_CASE("final matrix stays within eps^2 of the averaged system") {
  const auto sys = golden_hill();
  std::vector<double> ratios;
  for (double eps : {2.5e-4, 5e-4, 1e-3, 2e-3, 4e-3}) {
    const auto res = reduce(sys.A, sys.Q, eps, hill_schedule());
    REQUIRE(res.reduced);
    const CMat a1 = sys.A + eps * average(sys.Q);
    ratios.push_back(op_norm(res.B - a1) / (eps * eps));
  }
  const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
  CHECK(*hi <= 1.0);
  CHECK(*hi <= 1.5 * *lo);
}
