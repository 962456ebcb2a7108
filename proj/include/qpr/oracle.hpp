// Copyright 2026 qpreduce contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Direct integration of x' = (A + eps Q(t)) x, independent of the reduction.

#include <iosfwd>
#include <vector>

#include "qpr/kam.hpp"
#include "qpr/qpalg.hpp"

namespace qpr {

struct IntegratorConfig {
  int order = 8;  // Runge-Kutta-Fehlberg 7(8)
  double abs_tol = 1e-13;
  double rel_tol = 1e-13;
  double horizon = 100.0;
  int samples = 201;  // uniform sample times on [0, horizon]
  long max_steps = 50'000'000;
};

struct FundamentalSolution {
  std::vector<double> times;
  std::vector<RMat> phi;
  double det_drift = 0.0;          // max |det Phi - 1|
  double symplectic_defect = 0.0;  // max |Phi^T J Phi - J| (even n)
};

/// Phi' = (A + eps Q(t)) Phi, Phi(0) = I. Requires a real-valued system.
FundamentalSolution integrate_fundamental(const CMat& A, const QPMatrix& Q, double eps,
                                          const IntegratorConfig& cfg);

/// Adaptive propagation of X' = M(t) X from t0 to t1 (either direction).
RMat propagate(const CMat& A, const QPMatrix& Q, double eps, double t0, double t1,
               const RMat& X0, const IntegratorConfig& cfg);

/// Fixed-step propagation with the same scheme, for order checks.
RMat propagate_fixed(const CMat& A, const QPMatrix& Q, double eps, double t1,
                     int steps);

struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
};

/// x(t) at uniform samples t_j = j * dt, j = 0..count-1.
Trajectory trajectory(const CMat& A, const QPMatrix& Q, double eps,
                      const Eigen::VectorXd& x0, double dt, long count,
                      const IntegratorConfig& cfg);

/// The composed transformation psi = E_0 E_1 ... of a reduced result.
QPMatrix reduction_transformation(const ReductionResult& result, const FrequencyVector& omega,
                                  int n, double rho);

/// max over samples of ||Phi(t) - psi(t) e^{Bt} psi(0)^{-1}||.
double compare_with_reduction(const FundamentalSolution& sol, const ReductionResult& result,
                              const QPMatrix& psi);

/// Constant-matrix exponential e^{Mt} (dense).
CMat dense_exponential(const CMat& m, double t);

void write_solution_csv(std::ostream& os, const FundamentalSolution& sol);

}  // namespace qpr
