// Copyright 2026 qpreduce contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Test-only reference implementations. None of these call into the engine's
// arithmetic beyond reading stored coefficients.

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "qpr/qpalg.hpp"

namespace qpr::testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& g, double lo = -1.0, double hi = 1.0) {
  return std::uniform_real_distribution<double>(lo, hi)(g);
}

inline CMat unit_J(int n) {
  const int h = n / 2;
  CMat J = CMat::Zero(n, n);
  J.topRightCorner(h, h).setIdentity();
  J.bottomLeftCorner(h, h) = -CMat::Identity(h, h);
  return J;
}

/// J^{-1} M - (J^{-1} M)^T, entrywise max.
inline double hamiltonian_asymmetry(const CMat& m) {
  const CMat s = unit_J(static_cast<int>(m.rows())).inverse() * m;
  return (s - s.transpose()).cwiseAbs().maxCoeff();
}

inline CMat random_real_hamiltonian(int n, Rng& g) {
  Eigen::MatrixXd s(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) s(i, j) = s(j, i) = uniform(g);
  return unit_J(n) * s.cast<cplx>();
}

/// Real-valued Hamiltonian series: C_k = J S_k, S_k complex symmetric,
/// C_{-k} = conj(C_k), amplitudes decaying like exp(-decay |k|).
inline QPMatrix random_hamiltonian_series(const FrequencyVector& omega, int n, int K, double rho,
                                          Rng& g, double decay = 1.0, bool with_mean = true) {
  QPMatrix q(omega, n, rho, K);
  const CMat J = unit_J(n);
  for (std::size_t p = 0; p < q.mode_count(); ++p) {
    const std::size_t neg = q.ball().negated(p);
    if (neg < p) continue;
    if (p == neg && !with_mean) continue;
    CMat s(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        const cplx z = p == neg ? cplx(uniform(g), 0.0) : cplx(uniform(g), uniform(g));
        s(i, j) = s(j, i) = z;
      }
    const CMat c = std::exp(-decay * q.ball().order(p)) * (J * s);
    q.set_coeff_at(p, c);
    if (neg != p) q.set_coeff_at(neg, c.conjugate());
  }
  q.set_real_flag(true);
  return q;
}

/// Unstructured complex series (for algebra tests).
inline QPMatrix random_series(const FrequencyVector& omega, int n, int K, double rho, Rng& g) {
  QPMatrix q(omega, n, rho, K);
  for (std::size_t p = 0; p < q.mode_count(); ++p) {
    CMat c(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) c(i, j) = cplx(uniform(g), uniform(g));
    q.set_coeff_at(p, c);
  }
  return q;
}

/// Direct sum over stored modes with explicit phases.
inline CMat direct_eval(const QPMatrix& m, double t) {
  CMat out = CMat::Zero(m.dim(), m.dim());
  for (std::size_t p = 0; p < m.mode_count(); ++p) {
    const auto k = m.ball().index(p);
    double phase = 0.0;
    for (std::size_t j = 0; j < k.size(); ++j) phase += k[j] * m.omega()[static_cast<int>(j)] * t;
    out += CMat(m.mode(p)) * std::polar(1.0, phase);
  }
  return out;
}

/// (1 / 2T) * integral over [0, 2T] by the composite trapezoid rule.
inline CMat numerical_average(const QPMatrix& m, double T, int panels) {
  const double h = 2.0 * T / panels;
  CMat acc = 0.5 * (direct_eval(m, 0.0) + direct_eval(m, 2.0 * T));
  for (int i = 1; i < panels; ++i) acc += direct_eval(m, i * h);
  return acc * (h / (2.0 * T));
}

/// Five-point central difference of a matrix-valued function.
inline CMat central_difference(const std::function<CMat(double)>& f, double t, double step) {
  return (-f(t + 2 * step) + 8.0 * f(t + step) - 8.0 * f(t - step) + f(t - 2 * step)) /
         (12.0 * step);
}

struct BruteDivisor {
  std::vector<int> k;
  int i = 0;
  int j = 0;
  double modulus = std::numeric_limits<double>::infinity();
  double ratio = std::numeric_limits<double>::infinity();
  long entries = 0;
};

/// Scans the full box [-K, K]^r, keeps |k|_1 in (0, K], and minimizes
/// |i<k,omega> - l_i + l_j| / (alpha / |k|^e).
inline BruteDivisor brute_force_divisors(const std::vector<double>& omega,
                                         const std::vector<cplx>& lambda, double alpha, double e,
                                         int K) {
  BruteDivisor best;
  const int r = static_cast<int>(omega.size());
  long total = 1;
  for (int j = 0; j < r; ++j) total *= 2 * K + 1;
  std::vector<int> k(static_cast<std::size_t>(r));
  for (long code = 0; code < total; ++code) {
    long c = code;
    int order = 0;
    for (int j = 0; j < r; ++j) {
      k[static_cast<std::size_t>(j)] = static_cast<int>(c % (2 * K + 1)) - K;
      c /= 2 * K + 1;
      order += std::abs(k[static_cast<std::size_t>(j)]);
    }
    if (order == 0 || order > K) continue;
    long double w = 0.0L;
    for (int j = 0; j < r; ++j) w += static_cast<long double>(k[static_cast<std::size_t>(j)]) * omega[static_cast<std::size_t>(j)];
    const double thr = alpha / std::pow(static_cast<double>(order), e);
    for (std::size_t a = 0; a < lambda.size(); ++a)
      for (std::size_t b = 0; b < lambda.size(); ++b) {
        ++best.entries;
        const double mod = std::abs(cplx(0.0, static_cast<double>(w)) - lambda[a] + lambda[b]);
        const double ratio = mod / thr;
        if (ratio < best.ratio) {
          best.ratio = ratio;
          best.modulus = mod;
          best.k = k;
          best.i = static_cast<int>(a);
          best.j = static_cast<int>(b);
        }
      }
  }
  return best;
}

}  // namespace qpr::testing
