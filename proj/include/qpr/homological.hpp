// Copyright 2026 qpreduce contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Solver for the linearized conjugacy equation
//
//   dP/dt = Lambda P - P Lambda + R,   mean(R) = 0,
//
// mode by mode in the eigenbasis of Lambda:
//   X_k[i][j] = Y_k[i][j] / (i<k,omega> - nu_i + nu_j),   X_0 = 0.

#include <span>
#include <vector>

#include "qpr/qpalg.hpp"
#include "qpr/spectral.hpp"

namespace qpr {

struct DivisorEntry {
  std::vector<int> k;
  int i = 0;
  int j = 0;
  cplx d;
  double threshold = 0.0;  // alpha / |k|^{3 tau}
  bool flagged = false;
};

struct DivisorTable {
  std::vector<DivisorEntry> entries;
  double min_modulus = 0.0;
  std::size_t worst_index = 0;

  std::size_t flagged_count() const;
  const DivisorEntry& worst() const { return entries.at(worst_index); }
};

/// All 0 < |k| <= K and all ordered pairs (i, j). Flags, never throws.
DivisorTable divisor_scan(std::span<const cplx> values, const FrequencyVector& omega,
                          int K, double alpha, double tau);

struct HomologicalSolution {
  QPMatrix P;
  DivisorTable divisors;
  double bound_witness = 0.0;  // sum_{0<|k|<=K} |k|^{3 tau} e^{-s|k|} / alpha
  double condition = 0.0;      // ||S|| ||S^{-1}|| of the eigenbasis used
  double alpha = 0.0;
  double tau = 0.0;
  double s = 0.0;
  double identity_residual = 0.0;  // max_k entrywise residual / ||R||
};

/// Divisor violations are only fatal where the matching entry of R, taken in
/// the eigenbasis of Lambda, is nonzero. Absent entries contribute nothing to P.
HomologicalSolution solve(const CMat& lambda, const QPMatrix& r, double alpha,
                          double tau, double s, double tol_diag = 1e-9);
HomologicalSolution solve(const EigenDecomposition& eig, const CMat& lambda,
                          const QPMatrix& r, double alpha, double tau, double s);

struct NormBound {
  double lhs = 0.0;          // ||P||_{rho - s}
  double rhs_witness = 0.0;  // majorant * kappa^2 * ||R||_rho
  double measured_constant = 0.0;  // lhs / (||R||_rho / (alpha s^nu))
  bool passed() const { return lhs <= rhs_witness; }
};

NormBound norm_bound_check(const HomologicalSolution& sol, double r_norm, double rho,
                           double s);

/// max over stored k of entrywise |i<k,omega> X_k - (Lambda X_k - X_k Lambda) - R_k|.
double mode_identity_residual(const CMat& lambda, const QPMatrix& p, const QPMatrix& r);

}  // namespace qpr
