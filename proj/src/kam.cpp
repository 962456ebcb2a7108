// Copyright 2026 qpreduce contributors
// SPDX-License-Identifier: Apache-2.0
#include "qpr/kam.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace qpr {

int KGrowth::next(int k) const { return std::min(k + increment, cap); }

const char* to_string(AssemblyForm f) {
  switch (f) {
    case AssemblyForm::paper_five_term: return "paper_five_term";
    case AssemblyForm::exact: return "exact";
  }
  return "unknown";
}

const char* to_string(StepStatus s) {
  switch (s) {
    case StepStatus::ok: return "ok";
    case StepStatus::small_divisor: return "small_divisor";
    case StepStatus::separation_lost: return "separation_lost";
    case StepStatus::diverged: return "diverged";
    case StepStatus::truncation: return "truncation";
  }
  return "unknown";
}

double KamSchedule::alpha_at(int m) const {
  if (m == 0) return 0.5 * alpha;
  const double d = m + 1.0;
  return alpha / (d * d);
}

double KamSchedule::s_at(int m) const {
  if (m == 0) return 0.5 * rho;
  return rho / std::ldexp(1.0, m + 2);
}

double KamSchedule::rho_at(int m) const {
  if (m == 0) return rho;
  double r = 0.5 * rho;
  for (int j = 1; j < m; ++j) r -= s_at(j);
  return r;
}

double KamSchedule::floor_at(int m, double eps) const {
  return (m == 0 ? 2.0 : 1.0) * delta * eps;
}

namespace {

double factorial(int j) { return std::tgamma(j + 1.0); }

QPMatrix identity_like(const QPMatrix& p) {
  QPMatrix id = QPMatrix::constant(p.omega(), CMat::Identity(p.dim(), p.dim()), p.rho(),
                                   p.order());
  id.set_real_flag(true);
  return id;
}

QPMatrix zero_like(const QPMatrix& p) {
  QPMatrix z(p.omega(), p.dim(), p.rho(), p.order());
  z.set_real_flag(p.real_flag());
  return z;
}

// Sum of c_i h^(i-1) ad_P^i(X) for i >= 1 with c_i = (-1)^i i/(i+1)!.
QPMatrix transport_series(const QPMatrix& P, const QPMatrix& X, double h,
                          const ProductOptions& opt) {
  const double p2 = 2.0 * weighted_norm(P, P.rho());
  QPMatrix sum = zero_like(P);
  QPMatrix ad = X;
  double hp = 1.0;
  for (int i = 1; i <= 40; ++i) {
    ad = commutator(P, ad, opt);
    if (ad.is_zero()) break;
    const double c = (i % 2 ? -1.0 : 1.0) * i / factorial(i + 1);
    QPMatrix term = ad;
    term *= cplx(c * hp, 0.0);
    sum += term;
    const double next_bound = (i + 1) / factorial(i + 2) * hp * h * p2 *
                              weighted_norm(ad, std::min(ad.rho(), P.rho()));
    const double scale = weighted_norm(sum, sum.rho());
    if (next_bound <= 1e-18 * scale) break;
    hp *= h;
  }
  return sum;
}

}  // namespace

ExponentialSeries qp_exponential(const QPMatrix& P, double c, double tol_exp,
                                 const ProductOptions& opt) {
  const double pn = weighted_norm(P, P.rho());
  const double x = std::abs(c) * pn;
  if (!(x <= 0.5))
    throw Error(ErrorKind::smallness,
                "exponential needs |c| ||P|| <= 1/2, got " + std::to_string(x));
  // J >= 2 so the quadratic remainders are never empty, then enough terms
  // for both the absolute tail of E and the relative tail of B_hat.
  int J = 2;
  const double ex = std::exp(x);
  auto tail_abs = [&](int j) { return std::pow(x, j + 1) / factorial(j + 1) * ex * pn; };
  auto tail_rel = [&](int j) { return 2.0 * std::pow(x, j - 1) / factorial(j + 1) * ex; };
  while (J < 40 && (tail_abs(J) > tol_exp || tail_rel(J) > 1e-17)) ++J;

  ExponentialSeries out;
  out.terms = J;
  out.remainder_bound = x > 0.0 ? tail_abs(J) : 0.0;
  out.B_hat = zero_like(P);
  out.B_tilde_hat = zero_like(P);
  if (pn > 0.0) {
    QPMatrix pw = P;
    double cp = 1.0;  // c^(j-2)
    for (int j = 2; j <= J; ++j) {
      pw = qp_product(pw, P, opt);
      if (pw.is_zero()) break;
      QPMatrix t = pw;
      t *= cplx(cp / factorial(j), 0.0);
      out.B_hat += t;
      if (j % 2) t *= cplx(-1.0, 0.0);
      out.B_tilde_hat += t;
      cp *= c;
    }
  }
  const QPMatrix id = identity_like(P);
  QPMatrix cP = P;
  cP *= cplx(c, 0.0);
  QPMatrix b = out.B_hat;
  b *= cplx(c * c, 0.0);
  QPMatrix bt = out.B_tilde_hat;
  bt *= cplx(c * c, 0.0);
  out.E = id + cP + b;
  out.Einv = id - cP + bt;
  out.E.set_real_flag(P.real_flag());
  out.Einv.set_real_flag(P.real_flag());
  return out;
}

QPMatrix assemble_next_Q(const CMat& A_next, const QPMatrix& P,
                         const ExponentialSeries& ex, double h, AssemblyForm form,
                         const ProductOptions& opt) {
  if (P.is_zero()) return zero_like(P);
  // C = P A - A P, X = A + h C.
  const QPMatrix C = -commutator(A_next, P);
  QPMatrix hC = C;
  hC *= cplx(h, 0.0);
  const QPMatrix X = add_constant(hC, A_next);

  // P(AP - PA) + (PA - AP)P = C P - P C.
  QPMatrix q = commutator(C, P, opt);
  // -P X P
  q -= qp_product(qp_product(P, X, opt), P, opt);
  // (I - hP) X B_hat
  const QPMatrix XB = qp_product(X, ex.B_hat, opt);
  QPMatrix hPXB = qp_product(P, XB, opt);
  hPXB *= cplx(h, 0.0);
  q += XB;
  q -= hPXB;
  // B_tilde_hat X E
  q += qp_product(qp_product(ex.B_tilde_hat, X, opt), ex.E, opt);

  if (form == AssemblyForm::exact) q += transport_series(P, derivative(P), h, opt);
  q.set_real_flag(P.real_flag() && A_next.imag().cwiseAbs().maxCoeff() == 0.0);
  if (q.real_flag()) q.enforce_real();
  q.prune(opt.drop_tol);
  return q;
}

QPMatrix lie_series_next_Q(const QPMatrix& P, const QPMatrix& Q_tilde, double h,
                           const ProductOptions& opt) {
  QPMatrix q = transport_series(P, Q_tilde, h, opt);
  q.set_real_flag(P.real_flag() && Q_tilde.real_flag());
  if (q.real_flag()) q.enforce_real();
  return q;
}

double conjugation_defect(const CMat& A_next, const QPMatrix& Q_tilde,
                          const ExponentialSeries& ex, double h,
                          const QPMatrix& Q_next, int samples, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  const QPMatrix dE = derivative(ex.E);
  std::vector<double> theta(static_cast<std::size_t>(Q_tilde.rank()));
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    for (double& t : theta) t = angle(rng);
    const CMat e = evaluate_angles(ex.E, theta);
    const CMat einv = evaluate_angles(ex.Einv, theta);
    const CMat lhs = einv * (A_next + h * evaluate_angles(Q_tilde, theta)) * e -
                     einv * evaluate_angles(dE, theta);
    const CMat rhs = A_next + (h * h) * evaluate_angles(Q_next, theta);
    worst = std::max(worst, op_norm(lhs - rhs));
  }
  return worst;
}

QPMatrix compose_transformation(const std::vector<Factor>& factors, int K_out,
                                const FrequencyVector& omega, int n, double rho) {
  QPMatrix psi = QPMatrix::constant(omega, CMat::Identity(n, n), rho, 0);
  psi.set_real_flag(true);
  if (factors.empty()) return psi;
  psi = factors.front().E;
  ProductOptions opt;
  opt.k_cap = K_out;
  for (std::size_t i = 1; i < factors.size(); ++i) psi = qp_product(psi, factors[i].E, opt);
  if (psi.order() > K_out) psi = psi.with_order(K_out);
  return psi;
}

ConvergenceReport convergence_report(const std::vector<StepRecord>& trace) {
  ConvergenceReport rep;
  std::vector<double> logs;
  for (const auto& r : trace) {
    if (r.status != StepStatus::ok) break;
    if (!(r.residual_norm > 0.0)) break;
    logs.push_back(std::log(r.residual_norm));
  }
  rep.points = static_cast<int>(logs.size());
  if (logs.size() < 3) return rep;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double np = static_cast<double>(logs.size() - 1);
  for (std::size_t i = 0; i + 1 < logs.size(); ++i) {
    sx += logs[i];
    sy += logs[i + 1];
    sxx += logs[i] * logs[i];
    sxy += logs[i] * logs[i + 1];
  }
  const double den = np * sxx - sx * sx;
  if (den == 0.0) return rep;
  rep.slope = (np * sxy - sx * sy) / den;
  rep.conclusive = true;
  if (trace.size() > 2 && trace[1].status == StepStatus::ok &&
      trace[2].status == StepStatus::ok && trace[1].F > 0.0)
    rep.cF1 = trace[2].F / trace[1].F;
  return rep;
}

namespace {

void fail(ReductionResult& res, StepRecord rec, StepStatus st, const std::string& why) {
  rec.status = st;
  rec.message = why;
  res.reduced = false;
  res.failure = st;
  res.failed_step = rec.m;
  res.reason = why;
  res.trace.push_back(std::move(rec));
}

}  // namespace

ReductionResult reduce(const CMat& A, const QPMatrix& Q, double eps,
                       const KamSchedule& sched) {
  const int n = static_cast<int>(A.rows());
  if (A.rows() != A.cols() || n != Q.dim())
    throw Error(ErrorKind::structural, "reduce: A and Q dimensions differ");
  if (n % 2)
    throw Error(ErrorKind::structural, "reduce: Hamiltonian systems need even dimension");
  if (!(eps > 0.0)) throw Error(ErrorKind::domain, "reduce: eps must be positive");
  if (!(sched.rho > 0.0) || Q.rho() < sched.rho)
    throw Error(ErrorKind::domain, "reduce: schedule rho must lie in (0, rho(Q)]");
  if (!is_hamiltonian(A, sched.tol.sym))
    throw Error(ErrorKind::precondition, "reduce: A is not Hamiltonian");
  if (!is_hamiltonian(Q, sched.tol.sym))
    throw Error(ErrorKind::precondition, "reduce: Q is not Hamiltonian");

  ReductionResult res;
  res.eps = eps;
  res.psi_truncation = sched.k_growth.cap;
  const double an = op_norm(A);
  res.target_residual =
      sched.target_residual > 0.0 ? sched.target_residual : 1e-14 * (an > 0.0 ? an : 1.0);
  const bool real = Q.real_flag() && A.imag().cwiseAbs().maxCoeff() == 0.0;

  CMat a_cur = A;
  QPMatrix q_cur = Q.with_rho(sched.rho);
  double h = eps;
  int K = Q.order();
  double lost = 0.0;  // sum of h_m * (tail newly dropped into Q_m)
  double prev_residual = std::numeric_limits<double>::infinity();
  std::optional<EigenDecomposition> prev_eig;
  const double nu = sched.nu(Q.rank());

  for (int m = 0;; ++m) {
    StepRecord rec;
    rec.m = m;
    rec.h = h;
    rec.K = q_cur.order();
    rec.rho = sched.rho_at(m);
    rec.s = sched.s_at(m);
    rec.alpha = sched.alpha_at(m);
    rec.A = a_cur;
    lost += h * q_cur.tail_allowance();
    const double qn = weighted_norm(q_cur, rec.rho);
    rec.truncation_loss = lost;
    rec.residual_norm = h * qn;
    rec.F = h * qn / (rec.alpha * rec.alpha * std::pow(rec.s, 2.0 * nu));
    rec.floor = sched.floor_at(m, eps);

    if (!std::isfinite(rec.residual_norm) || (m >= 2 && rec.residual_norm > prev_residual)) {
      fail(res, std::move(rec), StepStatus::diverged, "residual stopped decreasing");
      return res;
    }
    if (lost > res.target_residual) {
      fail(res, std::move(rec), StepStatus::truncation,
           "truncation loss " + std::to_string(lost) + " exceeds the target residual");
      return res;
    }
    if (rec.residual_norm + lost <= res.target_residual) {
      try {
        rec.eigenvalues = eigen_decompose(a_cur, sched.tol.diag).values;
      } catch (const DefectiveMatrixError&) {
      }
      res.trace.push_back(std::move(rec));
      res.B = a_cur;
      res.reduced = true;
      return res;
    }
    if (m >= sched.max_steps) {
      fail(res, std::move(rec), StepStatus::diverged, "step limit reached");
      return res;
    }
    prev_residual = rec.residual_norm;

    CMat a_next = a_cur + h * average(q_cur);
    if (real) a_next = a_next.real().cast<cplx>();
    const QPMatrix q_tilde = without_average(q_cur);
    rec.A_next = a_next;
    rec.drift = op_norm(a_next - a_cur);

    EigenDecomposition eig;
    try {
      eig = eigen_decompose(a_next, sched.tol.diag);
    } catch (const DefectiveMatrixError& e) {
      rec.min_gap = e.min_separation();
      fail(res, std::move(rec), StepStatus::separation_lost, e.what());
      return res;
    }
    rec.eigenvalues = eig.values;
    rec.beta = eig.beta;
    const Separation sep = pairwise_separation(eig.values);
    rec.min_abs = sep.min_abs;
    rec.min_gap = sep.min_gap;
    if (prev_eig) {
      const GateResult g =
          perturbation_gate(*prev_eig, rec.drift, SeparationGate(rec.floor, sched.delta, n));
      rec.gate_evaluated = true;
      rec.gate_passed = g.passed;
      rec.gate_threshold = g.threshold;
    }
    if (sep.min_abs < rec.floor || sep.min_gap < rec.floor) {
      fail(res, std::move(rec), StepStatus::separation_lost,
           "eigenvalue separation " + std::to_string(std::min(sep.min_abs, sep.min_gap)) +
               " below floor " + std::to_string(rec.floor));
      return res;
    }

    const int K_next = sched.k_growth.next(K);
    ProductOptions opt;
    opt.k_cap = K_next;
    opt.drop_tol = sched.drop_tol;
    QPMatrix q_next;
    if (q_tilde.is_zero()) {
      q_next = QPMatrix(q_cur.omega(), n, rec.rho - rec.s, K_next);
      q_next.set_real_flag(real);
    } else {
      HomologicalSolution sol;
      try {
        sol = solve(eig, a_next, q_tilde, rec.alpha, sched.tau, rec.s);
      } catch (const SmallDivisorError& e) {
        rec.worst_k = e.k();
        rec.divisor_min = e.modulus();
        fail(res, std::move(rec), StepStatus::small_divisor, e.what());
        return res;
      }
      rec.divisor_min = sol.divisors.min_modulus;
      rec.P_norm = weighted_norm(sol.P, sol.P.rho());
      rec.measured_constant =
          norm_bound_check(sol, weighted_norm(q_tilde, rec.rho), rec.rho, rec.s)
              .measured_constant;
      rec.P_hamiltonian_defect = hamiltonian_defect(sol.P);

      ExponentialSeries ex;
      try {
        ex = qp_exponential(sol.P, h, sched.tol.exp, opt);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::smallness) throw;
        fail(res, std::move(rec), StepStatus::diverged, e.what());
        return res;
      }
      rec.exp_terms = ex.terms;
      q_next = assemble_next_Q(a_next, sol.P, ex, h, sched.form, opt);
      if (real) q_next.enforce_real();
      res.factors.push_back(Factor{h, std::move(sol.P), std::move(ex.E)});
    }
    res.trace.push_back(std::move(rec));
    prev_eig = std::move(eig);
    a_cur = a_next;
    q_cur = std::move(q_next);
    h *= h;
    K = K_next;
  }
}

}  // namespace qpr
