// Copyright 2026 qpreduce contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "qpr/kam.hpp"
#include "qpr/qpalg.hpp"

namespace qpr {

enum class ExponentMode { base_tau, triple_tau };

struct DiophantineSpec {
  double alpha = 0.5;
  double tau = 1.1;
  ExponentMode exponent_mode = ExponentMode::base_tau;
  int K_check = 12;
};

struct DivisorWitness {
  std::vector<int> k;
  int i = 0;
  int j = 0;
  double modulus = 0.0;
  double threshold = 0.0;
};

struct DiophantineCheck {
  bool pass = true;
  /// min over entries of |d| / threshold; the check passes iff it is >= 1.
  double min_ratio = 0.0;
  DivisorWitness worst;  // attains min_ratio
  std::size_t entries = 0;
};

/// |i<k,omega> - lambda_i + lambda_j| >= alpha / |k|^e over 0 < |k| <= K_check,
/// e = tau or 3 tau.
DiophantineCheck check_assumption_A(const FrequencyVector& omega,
                                    std::span<const cplx> lambda_values,
                                    const DiophantineSpec& spec);

/// |<k, (omega, sqrt b)>| >= (alpha/2) / |k|^(5 tau + 4) over 0 < |k| <= K_check
/// in Z^(r+1). With mixed_only, indices whose first r components vanish are
/// skipped.
DiophantineCheck check_extended_frequencies(const FrequencyVector& omega, double b,
                                            const DiophantineSpec& spec,
                                            bool mixed_only = false);

struct SweepOutcome {
  double eps = 0.0;
  bool reduced = false;
  StepStatus failure = StepStatus::ok;
  int failed_step = -1;
  int steps = 0;
  double final_residual = 0.0;
  std::optional<double> b;  // n = 2 with a reduced spectrum +-i sqrt(b)
  std::vector<int> worst_k;
};

struct FailureCluster {
  double eps_lo = 0.0;
  double eps_hi = 0.0;
  std::size_t grid_points = 0;
  std::vector<int> k;  // offending mode of the first small-divisor failure
  StepStatus failure = StepStatus::ok;
};

struct SweepReport {
  double eps0 = 0.0;
  std::vector<SweepOutcome> outcomes;  // sorted by eps
  double success_fraction = 0.0;
  std::vector<FailureCluster> clusters;
};

/// Midpoint grid eps_j = eps0 (j - 1/2) / grid_size, j = 1..grid_size.
std::vector<double> sweep_grid(double eps0, int grid_size);

SweepOutcome sweep_point(const CMat& A, const QPMatrix& Q, double eps,
                         const KamSchedule& sched);

/// Runs reduce on every grid point with `workers` threads; failure clusters
/// get one bisection step at each end.
SweepReport sweep(const CMat& A, const QPMatrix& Q, double eps0, int grid_size,
                  const KamSchedule& sched, int workers = 1);

/// b = |lambda|^2 when B has a purely imaginary pair +-i sqrt(b) within tol.
std::optional<double> imaginary_pair_b(const CMat& B, double tol = 1e-10);

void write_sweep_csv(std::ostream& os, const SweepReport& rep);

}  // namespace qpr
