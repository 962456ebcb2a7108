// Copyright 2026 qpreduce contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Hill's equation x'' + eps a(t) x = 0 as the first-order system
//   d/dt (x, x') = ([[0,1],[0,0]] + eps [[0,0],[-a(t),0]]) (x, x').

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "qpr/diophantine.hpp"
#include "qpr/kam.hpp"
#include "qpr/oracle.hpp"

namespace qpr {

class HillProblem {
 public:
  /// a is a 1x1 real-valued series with positive mean.
  explicit HillProblem(QPMatrix a);

  /// a(t) = mean + sum_j (c_j cos<k_j,omega>t + s_j sin<k_j,omega>t).
  struct Term {
    std::vector<int> k;
    double cos = 0.0;
    double sin = 0.0;
  };
  static HillProblem from_terms(const FrequencyVector& omega, double mean,
                                std::span<const Term> terms, double rho);

  const QPMatrix& a() const { return a_; }
  double a_bar() const { return a_bar_; }
  const FrequencyVector& omega() const { return a_.omega(); }
  double rho() const { return a_.rho(); }
  /// delta = sqrt(a_bar) / 2.
  double natural_delta() const { return 0.5 * std::sqrt(a_bar_); }

 private:
  QPMatrix a_;
  double a_bar_ = 0.0;
};

struct HillSystem {
  CMat A;
  QPMatrix Q;
};

HillSystem build_system(const HillProblem& p);

struct HillOptions {
  IntegratorConfig oracle;  // conjugacy horizon and sampling
  double pair_tol = 1e-10;  // purely imaginary pair tolerance on B
  double bound_factor = 3.0;
};

struct HillVerdict {
  double eps = 0.0;
  bool out_of_domain = false;
  bool assumption_A = false;      // omega against lambda = (0, 0)
  std::optional<double> b;
  bool stable = false;
  ReductionResult reduction;
  double oracle_agreement = 0.0;  // NaN when not reduced
  double det_drift = 0.0;
  double orbit_bound = 0.0;       // max_t ||D Phi(t) D^{-1}||_1, D = diag(1, 1/sqrt b)
  double sqrt_b_over_sqrt_eps = 0.0;
};

HillVerdict run(const HillProblem& p, double eps, const KamSchedule& sched,
                const HillOptions& opt = {});

struct BFit {
  bool conclusive = false;
  int successes = 0;
  double slope = 0.0;      // leading coefficient, expected a_bar
  double curvature = 0.0;  // C in b = slope eps + C eps^2
  double max_residual = 0.0;
  double max_residual_ratio = 0.0;  // max_i |residual_i| / (|C| eps_i^3)
  std::vector<double> eps;
  std::vector<double> b;
};

/// Fits b = s eps + C eps^2 with residuals weighted by eps^-3.
BFit b_scaling_fit(const HillProblem& p, std::span<const double> eps_list,
                   const KamSchedule& sched);
BFit fit_b(std::span<const double> eps, std::span<const double> b);

struct SpectralPeak {
  double frequency = 0.0;
  double amplitude = 0.0;
};

struct FrequencyOptions {
  double horizon = 1e4;
  double dt = 0.25;
  double rel_tol = 1e-4;
  DiophantineSpec extended{0.5, 1.1, ExponentMode::base_tau, 12};
  IntegratorConfig integrator;
};

struct FrequencyReport {
  bool pass = false;
  double sqrt_b = 0.0;
  double rotation = 0.0;       // slope of the unwrapped phase angle
  double zero_crossing = 0.0;  // from a fit of zero-crossing times
  double spectral_peak = 0.0;  // refined windowed DFT maximum
  double rotation_rel_error = 0.0;
  double zero_crossing_rel_error = 0.0;
  double spectral_rel_error = 0.0;
  double bin_width = 0.0;      // 2 pi / horizon
  double orbit_ratio = 0.0;    // sup (|x| + |x'|/sqrt b) / initial amplitude
  std::vector<SpectralPeak> peaks;
  DiophantineCheck extended;        // all 0 < |k| <= K_check
  DiophantineCheck extended_mixed;  // only k with a nonzero omega part
};

/// Passes when the phase-slope, zero-crossing and spectral-peak estimates all
/// match sqrt(b) within rel_tol. The extended frequency checks are reported,
/// not gated on. Requires a reduced and stable verdict; throws an inapplicable
/// error otherwise.
FrequencyReport frequency_analysis(const HillProblem& p, const HillVerdict& v,
                                   const FrequencyOptions& opt = {});

}  // namespace qpr
