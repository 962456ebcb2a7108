// Copyright 2026 qpreduce contributors
// SPDX-License-Identifier: Apache-2.0
#include "qpr/homological.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace qpr {

std::size_t DivisorTable::flagged_count() const {
  std::size_t c = 0;
  for (const auto& e : entries) c += e.flagged ? 1 : 0;
  return c;
}

DivisorTable divisor_scan(std::span<const cplx> values, const FrequencyVector& omega,
                          int K, double alpha, double tau) {
  if (K < 1) throw Error(ErrorKind::domain, "divisor_scan needs K >= 1");
  const auto ball = IndexBall::get(omega.size(), K);
  DivisorTable t;
  t.min_modulus = std::numeric_limits<double>::infinity();
  const int n = static_cast<int>(values.size());
  for (std::size_t p = 1; p < ball->size(); ++p) {
    const auto k = ball->index(p);
    const double w = omega.dot(k);
    const double thr = alpha / std::pow(static_cast<double>(ball->order(p)), 3.0 * tau);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        DivisorEntry e;
        e.k.assign(k.begin(), k.end());
        e.i = i;
        e.j = j;
        e.d = cplx(0.0, w) - values[static_cast<std::size_t>(i)] +
              values[static_cast<std::size_t>(j)];
        e.threshold = thr;
        e.flagged = std::abs(e.d) < thr;
        if (std::abs(e.d) < t.min_modulus) {
          t.min_modulus = std::abs(e.d);
          t.worst_index = t.entries.size();
        }
        t.entries.push_back(std::move(e));
      }
  }
  return t;
}

namespace {

// Entries of S^{-1} R S below this fraction of the largest are treated as absent.
constexpr double kSupportTol = 1e-14;

CMat to_eigenbasis(const EigenDecomposition& eig, const CMat& rk) {
  return eig.basis_inverse * rk * eig.basis;
}

bool on_support(const CMat& y, Eigen::Index i, Eigen::Index j) {
  return std::abs(y(i, j)) > kSupportTol * y.cwiseAbs().maxCoeff();
}

// X = S [ (S^{-1} R S)_ij / d_ij ] S^{-1} for one mode, restricted to the
// entries where `support` is nonzero.
CMat solve_mode(const EigenDecomposition& eig, const CMat& rk, double w, const CMat& support) {
  const Eigen::Index n = rk.rows();
  CMat y = to_eigenbasis(eig, rk);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!on_support(support, i, j)) {
        y(i, j) = 0.0;
        continue;
      }
      y(i, j) /= cplx(0.0, w) - eig.values[static_cast<std::size_t>(i)] +
                 eig.values[static_cast<std::size_t>(j)];
    }
  return eig.basis * y * eig.basis_inverse;
}

std::string format_k(const std::vector<int>& k) {
  std::ostringstream os;
  os << "(";
  for (std::size_t j = 0; j < k.size(); ++j) os << (j ? "," : "") << k[j];
  os << ")";
  return os.str();
}

}  // namespace

double mode_identity_residual(const CMat& lambda, const QPMatrix& p, const QPMatrix& r) {
  double worst = 0.0;
  const QPMatrix pk = p.order() == r.order() ? p : p.with_order(r.order());
  for (std::size_t q = 0; q < r.mode_count(); ++q) {
    const double w = r.omega().dot(r.ball().index(q));
    const CMat x = pk.coeff_at(q);
    const CMat res = cplx(0.0, w) * x - (lambda * x - x * lambda) - r.coeff_at(q);
    worst = std::max(worst, res.cwiseAbs().maxCoeff());
  }
  return worst;
}

HomologicalSolution solve(const CMat& lambda, const QPMatrix& r, double alpha,
                          double tau, double s, double tol_diag) {
  return solve(eigen_decompose(lambda, tol_diag), lambda, r, alpha, tau, s);
}

HomologicalSolution solve(const EigenDecomposition& eig, const CMat& lambda,
                          const QPMatrix& r, double alpha, double tau, double s) {
  if (lambda.rows() != r.dim() || lambda.cols() != r.dim())
    throw Error(ErrorKind::structural, "homological solve: dimension mismatch");
  if (!r.mode_is_zero(0))
    throw Error(ErrorKind::precondition,
                "homological solve needs a zero-average right-hand side");
  if (!(s > 0.0 && s < r.rho()))
    throw Error(ErrorKind::domain, "homological solve needs 0 < s < rho");

  HomologicalSolution sol;
  sol.alpha = alpha;
  sol.tau = tau;
  sol.s = s;
  sol.condition = eig.condition();
  sol.divisors = r.order() >= 1
                     ? divisor_scan(eig.values, r.omega(), r.order(), alpha, tau)
                     : DivisorTable{};

  // Only divisors on the support of R (in the eigenbasis) matter.
  const DivisorEntry* bad = nullptr;
  const int n = r.dim();
  for (const auto& e : sol.divisors.entries) {
    if (!e.flagged) continue;
    const long p = r.ball().find(e.k);
    if (p < 0 || r.mode_is_zero(static_cast<std::size_t>(p))) continue;
    const CMat y = to_eigenbasis(eig, r.coeff_at(static_cast<std::size_t>(p)));
    if (!on_support(y, e.i, e.j)) continue;
    if (!bad || std::abs(e.d) < std::abs(bad->d)) bad = &e;
  }
  if (bad)
    throw SmallDivisorError("small divisor at k=" + format_k(bad->k) + " (i,j)=(" +
                                std::to_string(bad->i) + "," + std::to_string(bad->j) +
                                "): |d|=" + std::to_string(std::abs(bad->d)) +
                                " < " + std::to_string(bad->threshold),
                            bad->k, bad->i, bad->j, std::abs(bad->d), bad->threshold);

  QPMatrix p(r.omega(), n, r.rho() - s, r.order());
  for (std::size_t q = 1; q < r.mode_count(); ++q) {
    if (r.mode_is_zero(q)) continue;
    const double w = r.omega().dot(r.ball().index(q));
    const CMat rk = r.coeff_at(q);
    const CMat support = to_eigenbasis(eig, rk);
    CMat x = solve_mode(eig, rk, w, support);
    // One step of residual correction.
    const CMat res = cplx(0.0, w) * x - (lambda * x - x * lambda) - rk;
    x -= solve_mode(eig, res, w, support);
    p.mode(q) = x;
  }
  const bool real_input =
      r.real_flag() && lambda.imag().cwiseAbs().maxCoeff() == 0.0;
  if (real_input) p.enforce_real();
  p.set_real_flag(real_input);
  p.set_tail(r.tail_allowance());

  double sum = 0.0;
  const auto& ball = r.ball();
  for (std::size_t q = 1; q < ball.size(); ++q) {
    const double l = ball.order(q);
    sum += std::pow(l, 3.0 * tau) * std::exp(-s * l);
  }
  sol.bound_witness = sum / alpha;

  double rmax = 0.0;
  for (std::size_t q = 0; q < r.mode_count(); ++q)
    rmax = std::max(rmax, r.coeff_at(q).cwiseAbs().maxCoeff());
  const double resid = mode_identity_residual(lambda, p, r);
  sol.identity_residual = rmax > 0.0 ? resid / rmax : resid;
  sol.P = std::move(p);
  return sol;
}

NormBound norm_bound_check(const HomologicalSolution& sol, double r_norm, double rho,
                           double s) {
  if (!(s < rho)) throw Error(ErrorKind::domain, "norm_bound_check needs s < rho");
  NormBound b;
  b.lhs = weighted_norm(sol.P, rho - s);
  b.rhs_witness = sol.bound_witness * sol.condition * sol.condition * r_norm;
  const double nu = 3.0 * sol.tau + sol.P.rank();
  const double scale = r_norm / (sol.alpha * std::pow(s, nu));
  b.measured_constant = scale > 0.0 ? b.lhs / scale : 0.0;
  return b;
}

}  // namespace qpr
