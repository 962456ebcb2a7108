// Copyright 2026 qpreduce contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Quadratic reduction of x' = (A + eps Q(t)) x to constant coefficients.
//
// Step m works on x' = (A_m + h_m Q_m(t)) x with h_m = eps^(2^m) (A_0 = A,
// Q_0 = Q). It moves the average into the constant part, solves
// P' = A_{m+1} P - P A_{m+1} + (Q_m - mean Q_m), and changes variables by
// x = exp(h_m P) y, which leaves x' = (A_{m+1} + h_m^2 Q_{m+1}) y.
// Q_m is stored unscaled; h_m travels alongside.

#include <optional>
#include <string>
#include <vector>

#include "qpr/homological.hpp"
#include "qpr/qpalg.hpp"
#include "qpr/spectral.hpp"

namespace qpr {

struct KGrowth {
  int increment = 12;  // K_{m+1} = min(K_m + increment, cap)
  int cap = 12;

  int next(int k) const;
};

struct Tolerances {
  double sym = 1e-10;   // Hamiltonian checks
  double diag = 1e-9;   // eigenbasis certification
  double exp = 1e-16;   // exponential series remainder
};

enum class AssemblyForm {
  paper_five_term,  // the five-term closed form, transport term taken as h P'
  exact,            // five-term form plus the transport correction
};

const char* to_string(AssemblyForm f);

struct KamSchedule {
  double alpha = 0.5;
  double tau = 1.1;
  double rho = 1.0;
  double delta = 0.5;
  int max_steps = 12;
  double target_residual = 0.0;  // <= 0: 1e-14 * ||A||
  KGrowth k_growth;
  Tolerances tol;
  double drop_tol = 1e-16;
  AssemblyForm form = AssemblyForm::exact;

  double alpha_at(int m) const;  // alpha/2, then alpha/(m+1)^2
  double s_at(int m) const;      // rho/2, then rho/2^(m+2)
  double rho_at(int m) const;    // rho, rho/2, then rho_m - s_m
  double nu(int r) const { return 3.0 * tau + r; }
  /// Operative eigenvalue floor: 2 delta eps at the first step, delta eps after.
  double floor_at(int m, double eps) const;
};

enum class StepStatus { ok, small_divisor, separation_lost, diverged, truncation };
const char* to_string(StepStatus s);

struct StepRecord {
  int m = 0;
  double h = 0.0;              // eps^(2^m)
  int K = 0;                   // truncation order of Q_m
  double rho = 0.0;            // rho_m
  double s = 0.0;
  double alpha = 0.0;
  CMat A;                      // A_m
  CMat A_next;                 // A_{m+1} (empty on the terminal record)
  std::vector<cplx> eigenvalues;  // of A_{m+1}, or of A_m on the terminal record
  double residual_norm = 0.0;    // h ||Q_m||_{rho_m}
  double truncation_loss = 0.0;  // accumulated h_j * (mass dropped into Q_j), j <= m
  double F = 0.0;
  double P_norm = 0.0;
  double beta = 0.0;
  double divisor_min = 0.0;
  double min_abs = 0.0;
  double min_gap = 0.0;
  double floor = 0.0;
  double drift = 0.0;          // ||A_{m+1} - A_m||
  bool gate_evaluated = false;
  bool gate_passed = false;
  double gate_threshold = 0.0;
  double measured_constant = 0.0;  // norm-bound ratio of the homological solve
  double P_hamiltonian_defect = 0.0;
  int exp_terms = 0;
  StepStatus status = StepStatus::ok;
  std::string message;
  std::vector<int> worst_k;    // offending mode on small_divisor
};

struct Factor {
  double h = 0.0;
  QPMatrix P;
  QPMatrix E;  // exp(h P)
};

struct ReductionResult {
  bool reduced = false;
  StepStatus failure = StepStatus::ok;
  int failed_step = -1;
  std::string reason;
  double eps = 0.0;
  double target_residual = 0.0;
  CMat B;
  std::vector<Factor> factors;
  std::vector<StepRecord> trace;
  int psi_truncation = 0;
};

/// Stops once residual_norm + truncation_loss <= target. Never throws on
/// iteration failure; throws on invalid input (shape,
/// eps <= 0, non-Hamiltonian data).
ReductionResult reduce(const CMat& A, const QPMatrix& Q, double eps,
                       const KamSchedule& sched);

struct ExponentialSeries {
  QPMatrix E;            // exp(c P)
  QPMatrix Einv;         // exp(-c P)
  QPMatrix B_hat;        // (E - I - cP) / c^2, summed directly
  QPMatrix B_tilde_hat;  // (Einv - I + cP) / c^2
  double remainder_bound = 0.0;
  int terms = 0;
};

/// Requires |c| ||P|| <= 1/2; otherwise throws a smallness error.
ExponentialSeries qp_exponential(const QPMatrix& P, double c, double tol_exp,
                                 const ProductOptions& opt = {});

/// Unscaled perturbation after the change of variables x = exp(hP) y.
QPMatrix assemble_next_Q(const CMat& A_next, const QPMatrix& P,
                         const ExponentialSeries& ex, double h, AssemblyForm form,
                         const ProductOptions& opt = {});

/// Independent route: sum_{i>=1} (-1)^i i/(i+1)! h^(i-1) ad_P^i(Q_tilde).
QPMatrix lie_series_next_Q(const QPMatrix& P, const QPMatrix& Q_tilde, double h,
                           const ProductOptions& opt = {});

/// Max over sampled angles of
///   |Einv (A_next + h Q_tilde) E - Einv E' - (A_next + h^2 Q_next)|.
double conjugation_defect(const CMat& A_next, const QPMatrix& Q_tilde,
                          const ExponentialSeries& ex, double h,
                          const QPMatrix& Q_next, int samples, unsigned seed);

/// psi = E_0 E_1 ... truncated at K_out; identity for no factors.
QPMatrix compose_transformation(const std::vector<Factor>& factors, int K_out,
                                const FrequencyVector& omega, int n, double rho);

struct ConvergenceReport {
  bool conclusive = false;
  double slope = 0.0;  // least squares of log r_{m+1} against log r_m
  double cF1 = 0.0;
  int points = 0;
};

ConvergenceReport convergence_report(const std::vector<StepRecord>& trace);

}  // namespace qpr
