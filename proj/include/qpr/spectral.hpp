// Copyright 2026 qpreduce contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "qpr/core.hpp"

namespace qpr {

/// S^{-1} M S = diag(values). Columns of S are balanced so that
/// beta = max(||S||, ||S^{-1}||) is as small as a common rescaling allows.
struct EigenDecomposition {
  std::vector<cplx> values;  // sorted by (Re, Im), tolerant in Re
  CMat basis;
  CMat basis_inverse;
  double beta = 0.0;
  double tol_diag = 0.0;
  double diag_residual = 0.0;  // max offdiag |S^{-1} M S| / max(1, ||M||)

  /// ||S|| * ||S^{-1}|| in the row-sum norm.
  double condition() const;
};

/// Eigenvalues from the characteristic polynomial for n <= 4 (closed form
/// for n <= 2), a QR-based solver above that. Throws DefectiveMatrixError
/// when no eigenbasis can be certified at tolerance tol.
EigenDecomposition eigen_decompose(const CMat& m, double tol = 1e-9);

/// Coefficients c_0..c_n of det(lambda I - M), c_n = 1.
std::vector<cplx> characteristic_polynomial(const CMat& m);

/// Roots of sum_i c_i z^i by simultaneous (Aberth) iteration with Newton
/// polishing.
std::vector<cplx> polynomial_roots(std::span<const cplx> coeffs);

struct SeparationGate {
  double gamma = 0.0;  // separation floor
  double delta = 0.0;
  int n = 0;

  SeparationGate(double gamma_, double delta_, int n_);
};

struct GateResult {
  bool passed = false;
  double threshold = 0.0;    // gamma / ((3n-1) beta^2)
  double beta_bound = 0.0;   // 2 beta: conditioning allowed after the step
  explicit operator bool() const { return passed; }
};

/// Sufficient condition for the perturbed matrix to keep n simple eigenvalues:
/// delta_norm < gamma / ((3n-1) beta^2).
GateResult perturbation_gate(const EigenDecomposition& prev, double delta_norm,
                             const SeparationGate& gate);

struct Separation {
  double min_abs = 0.0;
  double min_gap = 0.0;
};

Separation pairwise_separation(std::span<const cplx> values);

/// Largest distance between the multiset {values} and {-values}.
double pm_pair_defect(std::span<const cplx> values);

/// Sort in place by (Re, Im) treating real parts within tol as equal.
void sort_spectrum(std::vector<cplx>& values, double tol);

}  // namespace qpr
