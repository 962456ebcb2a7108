// Copyright 2026 qpreduce contributors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "qpr/commands.hpp"
#include "qpr/io.hpp"

namespace qpr {

namespace {

using Rng = std::mt19937_64;

double uniform(Rng& g, double lo = -1.0, double hi = 1.0) {
  return std::uniform_real_distribution<double>(lo, hi)(g);
}

std::string sci(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

CMat random_hamiltonian(int n, Rng& g) {
  RMat s(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) s(i, j) = s(j, i) = uniform(g);
  return symplectic_unit(n) * s.cast<cplx>();
}

// Real-valued Hamiltonian series with decaying modes.
QPMatrix random_hamiltonian_qp(const FrequencyVector& omega, int n, int K, double rho, Rng& g) {
  QPMatrix q(omega, n, rho, K);
  const CMat J = symplectic_unit(n);
  const auto& ball = q.ball();
  for (std::size_t p = 1; p < ball.size(); ++p) {
    const std::size_t neg = ball.negated(p);
    if (neg < p) continue;
    CMat s(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) s(i, j) = s(j, i) = cplx(uniform(g), uniform(g));
    const CMat c = std::exp(-1.5 * ball.order(p)) * (J * s);
    q.set_coeff_at(p, c);
    q.set_coeff_at(neg, c.conjugate());
  }
  q.set_real_flag(true);
  return q;
}

FrequencyVector random_omega(int r, Rng& g) {
  std::vector<double> w{1.0};
  for (int j = 1; j < r; ++j) w.push_back(uniform(g, 0.5, 2.0) + std::sqrt(2.0 + j));
  return FrequencyVector(std::move(w));
}

// Hamiltonian 2x2 with eigenvalues +-i mu in the eigen-coordinates of a random
// symplectic change of basis.
CMat elliptic_lambda(double mu, Rng& g) {
  CMat m(2, 2);
  const double a = uniform(g, 0.5, 1.5), c = uniform(g, -0.5, 0.5);
  // [[c, a], [-(mu^2 + c^2)/a, -c]] has trace 0 and determinant mu^2.
  m << c, a, -(mu * mu + c * c) / a, -c;
  return m;
}

struct Suite {
  std::vector<InvariantResult> results;

  void add(std::string name, bool passed, std::string detail) {
    results.push_back({std::move(name), passed, false, std::move(detail)});
  }
  void skip(std::string name, std::string why) {
    results.push_back({std::move(name), false, true, std::move(why)});
  }
  // Runs a check; exceptions count as failures.
  void check(const std::string& name, const std::function<std::pair<bool, std::string>()>& f) {
    try {
      auto [ok, detail] = f();
      add(name, ok, std::move(detail));
    } catch (const std::exception& e) {
      add(name, false, std::string("exception: ") + e.what());
    }
  }
};

// Independent enumeration over the box [-K, K]^r.
double box_min_ratio(const FrequencyVector& omega, std::span<const cplx> lambda, double alpha,
                     double e, int K) {
  const int r = omega.size();
  std::vector<int> k(static_cast<std::size_t>(r), -K);
  double best = std::numeric_limits<double>::infinity();
  while (true) {
    int order = 0;
    for (int v : k) order += std::abs(v);
    if (order > 0 && order <= K) {
      double w = 0.0;
      for (int j = 0; j < r; ++j) w += k[static_cast<std::size_t>(j)] * omega[j];
      const double thr = alpha / std::pow(static_cast<double>(order), e);
      for (const cplx& li : lambda)
        for (const cplx& lj : lambda) best = std::min(best, std::abs(cplx(0.0, w) - li + lj) / thr);
    }
    int j = 0;
    while (j < r && k[static_cast<std::size_t>(j)] == K) k[static_cast<std::size_t>(j++)] = -K;
    if (j == r) break;
    ++k[static_cast<std::size_t>(j)];
  }
  return best;
}

void qpalg_checks(Suite& s, Rng& g) {
  const FrequencyVector omega({1.0, std::numbers::phi});
  std::vector<std::pair<QPMatrix, QPMatrix>> pairs;
  for (int i = 0; i < 10; ++i)
    pairs.emplace_back(random_hamiltonian_qp(omega, 2, 3, 1.0, g),
                       random_hamiltonian_qp(omega, 2, 3, 1.0, g));

  s.check("qpalg.norm_submultiplicative", [&] {
    double worst = 0.0;
    for (const auto& [a, b] : pairs) {
      const double lhs = weighted_norm(qp_product(a, b, {-1, 0.0}), 1.0);
      worst = std::max(worst, lhs / (weighted_norm(a, 1.0) * weighted_norm(b, 1.0)));
    }
    return std::pair{worst <= 1.0 + 1e-12, "max ratio " + sci(worst)};
  });
  s.check("qpalg.product_evaluation", [&] {
    double worst = 0.0;
    for (const auto& [a, b] : pairs) {
      const QPMatrix ab = qp_product(a, b, {-1, 0.0});
      for (int t = 0; t < 5; ++t) {
        const double time = uniform(g, -50.0, 50.0);
        worst = std::max(worst, (evaluate(ab, time) - evaluate(a, time) * evaluate(b, time))
                                    .cwiseAbs().maxCoeff());
      }
    }
    return std::pair{worst <= 1e-10, "max deviation " + sci(worst)};
  });
  s.check("qpalg.average_is_zero_mode", [&] {
    bool ok = true;
    for (const auto& [a, b] : pairs) {
      ok = ok && average(a) == a.coeff_at(0);
      ok = ok && derivative(b).mode_is_zero(0);
    }
    return std::pair{ok, std::string(ok ? "exact" : "mismatch")};
  });
  s.check("qpalg.hamiltonian_closure", [&] {
    bool ok = true;
    for (const auto& [a, b] : pairs) ok = ok && is_hamiltonian(a + cplx(2.5) * b, 1e-12);
    return std::pair{ok, std::string("linear combinations")};
  });
}

void spectral_checks(Suite& s, Rng& g) {
  std::vector<CMat> mats;
  for (int i = 0; i < 10; ++i) mats.push_back(random_hamiltonian(i % 2 ? 4 : 2, g));
  s.check("spectral.reconstruction", [&] {
    double worst = 0.0;
    for (const auto& m : mats) {
      const auto e = eigen_decompose(m);
      CMat d = CMat::Zero(m.rows(), m.cols());
      for (Eigen::Index i = 0; i < m.rows(); ++i) d(i, i) = e.values[static_cast<std::size_t>(i)];
      const double err = op_norm(e.basis * d * e.basis_inverse - m);
      worst = std::max(worst, err / (1e-9 * op_norm(m) * e.condition()));
    }
    return std::pair{worst <= 1.0, "max error / bound " + sci(worst)};
  });
  s.check("spectral.plus_minus_pairs", [&] {
    double worst = 0.0;
    for (const auto& m : mats) {
      const auto e = eigen_decompose(m);
      worst = std::max(worst, pm_pair_defect(e.values) / std::max(1.0, op_norm(m)));
    }
    return std::pair{worst <= 1e-9, "max defect " + sci(worst)};
  });
  s.check("spectral.gate_monotone", [&] {
    bool ok = true;
    for (const auto& m : mats) {
      const auto e = eigen_decompose(m);
      const SeparationGate gate(0.1, 0.5, static_cast<int>(m.rows()));
      bool seen_fail = false;
      for (int i = 40; i >= 0; --i) {
        const bool pass = perturbation_gate(e, std::pow(10.0, -i / 4.0), gate).passed;
        if (!pass) seen_fail = true;
        if (seen_fail && pass) ok = false;
      }
    }
    return std::pair{ok, std::string("40 thresholds per matrix")};
  });
}

void homological_checks(Suite& s, Rng& g) {
  const FrequencyVector omega({1.0, std::numbers::phi});
  const double alpha = 0.05, tau = 1.1, sdist = 0.25;
  int used = 0;
  double identity = 0.0, ham = 0.0, lin = 0.0;
  bool zero_avg = true;
  for (int trial = 0; trial < 30 && used < 15; ++trial) {
    const CMat lambda = elliptic_lambda(uniform(g, 0.2, 0.6), g);
    QPMatrix r1 = without_average(random_hamiltonian_qp(omega, 2, 8, 1.0, g));
    QPMatrix r2 = without_average(random_hamiltonian_qp(omega, 2, 8, 1.0, g));
    try {
      const auto p1 = solve(lambda, r1, alpha, tau, sdist);
      const auto p2 = solve(lambda, r2, alpha, tau, sdist);
      const cplx a(0.7), b(-1.3);
      const auto p12 = solve(lambda, a * r1 + b * r2, alpha, tau, sdist);
      identity = std::max(identity, mode_identity_residual(lambda, p1.P, r1) / weighted_norm(r1, 0.0));
      ham = std::max(ham, hamiltonian_defect(p1.P));
      zero_avg = zero_avg && p1.P.mode_is_zero(0);
      const QPMatrix diff = p12.P - (a * p1.P + b * p2.P);
      lin = std::max(lin, diff.max_abs() / std::max(1.0, p12.P.max_abs()));
      ++used;
    } catch (const SmallDivisorError&) {
    }
  }
  const std::string n = std::to_string(used) + " instances";
  s.add("homological.mode_identity", used > 0 && identity <= 1e-12, n + ", max " + sci(identity));
  s.add("homological.hamiltonian_closure", used > 0 && ham <= 1e-10, n + ", max " + sci(ham));
  s.add("homological.zero_average", used > 0 && zero_avg, n);
  s.add("homological.linearity", used > 0 && lin <= 1e-12, n + ", max " + sci(lin));
}

void diophantine_checks(Suite& s, Rng& g) {
  int agree = 0, total = 0;
  bool mono = true, witness = true;
  for (int i = 0; i < 20; ++i) {
    const FrequencyVector omega = random_omega(2, g);
    const double mu = uniform(g, 0.01, 0.5);
    const std::vector<cplx> lambda{cplx(0, mu), cplx(0, -mu)};
    DiophantineSpec spec{uniform(g, 0.01, 0.5), 1.1, i % 2 ? ExponentMode::triple_tau : ExponentMode::base_tau,
                         1 + static_cast<int>(uniform(g, 0.0, 19.99))};
    const auto c = check_assumption_A(omega, lambda, spec);
    const double e = spec.exponent_mode == ExponentMode::triple_tau ? 3.0 * spec.tau : spec.tau;
    const double ref = box_min_ratio(omega, lambda, spec.alpha, e, spec.K_check);
    ++total;
    if (c.pass == (ref >= 1.0) && std::abs(c.min_ratio - ref) <= 1e-12 * ref) ++agree;
    DiophantineSpec doubled = spec;
    doubled.alpha *= 2.0;
    const auto c2 = check_assumption_A(omega, lambda, doubled);
    if (!c.pass && c2.pass) mono = false;
    if (c2.min_ratio > c.min_ratio) mono = false;
    const auto& w = c.worst;
    const double d = std::abs(cplx(0.0, omega.dot(w.k)) - lambda[static_cast<std::size_t>(w.i)] +
                              lambda[static_cast<std::size_t>(w.j)]);
    if (std::abs(w.modulus - d) > 1e-15 * std::max(1.0, d) || w.modulus / w.threshold != c.min_ratio)
      witness = false;
  }
  s.add("diophantine.brute_force", agree == total,
        std::to_string(agree) + "/" + std::to_string(total) + " agree");
  s.add("diophantine.alpha_monotone", mono, "doubling alpha never passes a failing entry");
  s.add("diophantine.witness_valid", witness, "worst entry attains the minimum");
}

void oracle_checks(Suite& s, const ProblemConfig& cfg, double eps, bool hamiltonian) {
  s.check("oracle.refinement_order", [&] {
    CMat rot(2, 2);
    rot << 0, 1, -1, 0;
    const QPMatrix zero(FrequencyVector({1.0}), 2, 1.0, 0);
    RMat exact(2, 2);
    const double T = 2.0 * std::numbers::pi;
    exact << std::cos(T), std::sin(T), -std::sin(T), std::cos(T);
    const double e1 = (propagate_fixed(rot, zero, 0.0, T, 8) - exact).cwiseAbs().maxCoeff();
    const double e2 = (propagate_fixed(rot, zero, 0.0, T, 16) - exact).cwiseAbs().maxCoeff();
    const double order = std::log2(e1 / e2);
    return std::pair{order >= 6.5, "observed order " + std::to_string(order)};
  });
  if (!cfg.Q.real_flag()) {
    s.skip("oracle.symplectic_flow", "complex system");
    s.skip("oracle.time_reversal", "complex system");
    return;
  }
  if (!hamiltonian) {
    s.skip("oracle.symplectic_flow", "fixture is not Hamiltonian");
  } else {
    s.check("oracle.symplectic_flow", [&] {
      IntegratorConfig oc = cfg.oracle;
      const auto sol = integrate_fundamental(cfg.A, cfg.Q, eps, oc);
      return std::pair{sol.symplectic_defect <= 1e-8, "max defect " + sci(sol.symplectic_defect)};
    });
  }
  s.check("oracle.time_reversal", [&] {
    const int n = cfg.n;
    const double T = std::min(cfg.oracle.horizon, 100.0);
    const RMat fwd = propagate(cfg.A, cfg.Q, eps, 0.0, T, RMat::Identity(n, n), cfg.oracle);
    const RMat back = propagate(cfg.A, cfg.Q, eps, T, 0.0, fwd, cfg.oracle);
    const double err = (back - RMat::Identity(n, n)).cwiseAbs().maxCoeff();
    return std::pair{err <= 1e-8, "error " + sci(err)};
  });
}

void kam_checks(Suite& s, const ProblemConfig& cfg, double eps, bool hamiltonian, Rng& g) {
  const KamSchedule& sched = cfg.schedule;
  s.check("kam.schedule_identities", [&] {
    double sum = 0.0;
    bool ok = true;
    for (int m = 1; m <= sched.max_steps; ++m) {
      sum += sched.s_at(m);
      ok = ok && sched.rho_at(m) - sched.s_at(m) > sched.rho / 4;
    }
    ok = ok && sum < sched.rho / 2 - sched.rho / 4;
    return std::pair{ok, "sum s_m = " + sci(sum) + " < rho/4"};
  });
  if (!hamiltonian) {
    for (const char* n : {"kam.reduced", "kam.hamiltonian_preservation", "kam.eigenvalue_floors",
                          "kam.drift_bound", "kam.final_closeness", "oracle.conjugacy",
                          "cli.determinism"})
      s.skip(n, "fixture is not Hamiltonian");
    return;
  }
  ReductionResult res;
  try {
    res = reduce(cfg.A, cfg.Q, eps, sched);
  } catch (const std::exception& e) {
    s.add("kam.reduced", false, std::string("exception: ") + e.what());
    return;
  }
  s.add("kam.reduced", res.reduced,
        res.reduced ? std::to_string(res.trace.size()) + " records" : res.reason);
  if (!res.reduced) return;

  s.check("kam.hamiltonian_preservation", [&] {
    bool ok = is_hamiltonian(res.B, sched.tol.sym);
    for (const auto& r : res.trace) {
      ok = ok && is_hamiltonian(r.A, sched.tol.sym);
      if (r.A_next.size() > 0) ok = ok && is_hamiltonian(r.A_next, sched.tol.sym);
    }
    double sym = 0.0;
    for (const auto& f : res.factors) {
      ok = ok && is_hamiltonian(f.P, sched.tol.sym);
      for (int i = 0; i < 20; ++i) {
        std::vector<double> theta;
        for (int j = 0; j < cfg.omega.size(); ++j) theta.push_back(uniform(g, 0.0, 2.0 * std::numbers::pi));
        sym = std::max(sym, symplectic_defect(evaluate_angles(f.E, theta)));
      }
    }
    return std::pair{ok && sym <= 1e-9, "max E symplectic defect " + sci(sym)};
  });
  s.check("kam.eigenvalue_floors", [&] {
    const double floor = sched.delta * eps;
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& r : res.trace) {
      if (r.status != StepStatus::ok || r.A_next.size() == 0) continue;
      worst = std::min({worst, r.min_gap / floor, r.min_abs / floor});
    }
    return std::pair{worst >= 1.0, "min separation / (delta eps) " + sci(worst)};
  });
  s.check("kam.drift_bound", [&] {
    double worst = 0.0;
    for (const auto& r : res.trace)
      if (r.A_next.size() > 0) worst = std::max(worst, r.drift / r.residual_norm);
    return std::pair{worst <= 1.0 + 1e-12, "max drift / residual " + sci(worst)};
  });
  s.check("kam.final_closeness", [&] {
    std::vector<double> c;
    for (double e : {eps, eps / 2, eps / 4}) {
      const ReductionResult r = e == eps ? res : reduce(cfg.A, cfg.Q, e, sched);
      if (!r.reduced) return std::pair{false, "reduction failed at eps " + sci(e)};
      const CMat first = cfg.A + cplx(e) * average(cfg.Q);
      c.push_back(op_norm(r.B - first) / (e * e));
    }
    const bool ok = c[2] <= 2.0 * c[0] + 1e-6;
    return std::pair{ok, "||B - (A + eps mean Q)|| / eps^2 = " + sci(c[0]) + ", " + sci(c[1]) +
                             ", " + sci(c[2])};
  });
  if (cfg.Q.real_flag()) {
    s.check("oracle.conjugacy", [&] {
      IntegratorConfig oc = cfg.oracle;
      const auto sol = integrate_fundamental(cfg.A, cfg.Q, eps, oc);
      const QPMatrix psi = reduction_transformation(res, cfg.omega, cfg.n, sched.rho);
      const double err = compare_with_reduction(sol, res, psi);
      return std::pair{err <= 1e-6, "max error " + sci(err) + " over [0, " + sci(oc.horizon) + "]"};
    });
  } else {
    s.skip("oracle.conjugacy", "complex system");
  }
  s.check("cli.determinism", [&] {
    ProblemConfig c = cfg;
    c.eps = eps;
    c.oracle.samples = 11;
    const auto a = cmd_reduce(c, {});
    const auto b = cmd_reduce(c, {});
    bool same = a.artifacts.size() == b.artifacts.size();
    for (std::size_t i = 0; same && i < a.artifacts.size(); ++i)
      same = a.artifacts[i].content == b.artifacts[i].content;
    return std::pair{same, std::to_string(a.artifacts.size()) + " artifacts compared"};
  });
}

void hill_checks(Suite& s, const ProblemConfig& cfg, double eps) {
  const HillProblem& p = *cfg.hill;
  std::vector<HillVerdict> vs;
  try {
    HillOptions ho;
    ho.oracle = cfg.oracle;
    for (double e : {eps, eps / 2, eps / 4}) vs.push_back(run(p, e, cfg.schedule, ho));
  } catch (const std::exception& e) {
    s.add("hill.verdicts", false, std::string("exception: ") + e.what());
    return;
  }
  bool pair = true, positive = true, trend = true;
  double det = 0.0;
  for (std::size_t i = 0; i < vs.size(); ++i) {
    const auto& v = vs[i];
    det = std::max(det, v.det_drift);
    if (!v.stable) continue;
    pair = pair && imaginary_pair_b(v.reduction.B, 1e-10).has_value();
    positive = positive && v.b && *v.b > 0.0;
    if (i > 0 && vs[i - 1].b && v.b) trend = trend && *v.b < *vs[i - 1].b;
  }
  int stable = 0;
  for (const auto& v : vs) stable += v.stable ? 1 : 0;
  const std::string n = std::to_string(stable) + "/3 stable";
  s.add("hill.imaginary_pair", stable > 0 && pair, n);
  s.add("hill.b_positive", stable > 0 && positive, n);
  s.add("hill.b_trend", stable > 1 && trend, "b decreases with eps");
  s.add("hill.det_drift", det <= 1e-9, "max drift " + sci(det));
  if (!vs.front().stable) {
    s.skip("hill.orbit_bounded", "first verdict not stable");
    return;
  }
  s.check("hill.orbit_bounded", [&] {
    FrequencyOptions fo = cfg.frequency;
    fo.integrator = cfg.oracle;
    const auto fr = frequency_analysis(p, vs.front(), fo);
    return std::pair{fr.orbit_ratio <= 3.0,
                     "sup ratio " + sci(fr.orbit_ratio) + " over [0, " + sci(fo.horizon) + "]"};
  });
}

void io_checks(Suite& s, Rng& g) {
  s.check("cli.qp_roundtrip", [&] {
    const FrequencyVector omega = random_omega(3, g);
    QPMatrix q = random_hamiltonian_qp(omega, 4, 4, 0.75, g);
    q.set_tail(uniform(g, 0.0, 1e-12));
    const std::string text = io::dump(io::to_json(q));
    const QPMatrix back = io::qp_from_json(io::json::parse(text), "roundtrip");
    bool same = back.order() == q.order() && back.rho() == q.rho() &&
                back.tail_allowance() == q.tail_allowance() && back.omega() == q.omega();
    for (std::size_t p = 0; same && p < q.mode_count(); ++p) same = back.coeff_at(p) == q.coeff_at(p);
    return std::pair{same, std::string(same ? "bit-identical" : "mismatch")};
  });
}

}  // namespace

std::vector<InvariantResult> verify_suite(const ProblemConfig& cfg, std::uint64_t seed) {
  Suite s;
  Rng g(seed);
  qpalg_checks(s, g);
  spectral_checks(s, g);
  homological_checks(s, g);
  diophantine_checks(s, g);
  io_checks(s, g);

  const double eps = cfg.eps.value_or(1e-3);
  const bool hamiltonian = is_hamiltonian(cfg.A, cfg.schedule.tol.sym) &&
                           is_hamiltonian(cfg.Q, cfg.schedule.tol.sym);
  s.add("kam.input_hamiltonian", hamiltonian,
        hamiltonian ? "A and Q Hamiltonian"
                    : "J^-1 A defect " + sci((symplectic_unit(cfg.n).inverse() * cfg.A -
                                              (symplectic_unit(cfg.n).inverse() * cfg.A).transpose())
                                                 .cwiseAbs()
                                                 .maxCoeff()) +
                          ", Q defect " + sci(hamiltonian_defect(cfg.Q)));
  kam_checks(s, cfg, eps, hamiltonian, g);
  oracle_checks(s, cfg, eps, hamiltonian);
  if (cfg.hill && hamiltonian) hill_checks(s, cfg, eps);
  return s.results;
}

}  // namespace qpr
