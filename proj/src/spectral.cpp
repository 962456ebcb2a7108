// Copyright 2026 qpreduce contributors
// SPDX-License-Identifier: Apache-2.0
#include "qpr/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace qpr {

double EigenDecomposition::condition() const {
  return op_norm(basis) * op_norm(basis_inverse);
}

std::vector<cplx> characteristic_polynomial(const CMat& m) {
  // Faddeev-LeVerrier.
  const Eigen::Index n = m.rows();
  std::vector<cplx> c(static_cast<std::size_t>(n) + 1, cplx(0.0, 0.0));
  c[static_cast<std::size_t>(n)] = 1.0;
  CMat mk = CMat::Zero(n, n);
  const CMat id = CMat::Identity(n, n);
  for (Eigen::Index k = 1; k <= n; ++k) {
    mk = m * mk + c[static_cast<std::size_t>(n - k + 1)] * id;
    c[static_cast<std::size_t>(n - k)] = -(m * mk).trace() / static_cast<double>(k);
  }
  return c;
}

namespace {

cplx horner(std::span<const cplx> c, cplx z, cplx* deriv) {
  cplx p = c.back(), d = 0.0;
  for (std::size_t i = c.size() - 1; i-- > 0;) {
    d = d * z + p;
    p = p * z + c[i];
  }
  if (deriv) *deriv = d;
  return p;
}

}  // namespace

std::vector<cplx> polynomial_roots(std::span<const cplx> coeffs) {
  std::vector<cplx> c(coeffs.begin(), coeffs.end());
  while (c.size() > 1 && c.back() == cplx(0.0, 0.0)) c.pop_back();
  const std::size_t deg = c.size() - 1;
  if (deg == 0) return {};
  const cplx lead = c.back();
  for (cplx& v : c) v /= lead;
  // Cauchy bound.
  double bound = 0.0;
  for (std::size_t i = 0; i < deg; ++i) bound = std::max(bound, std::abs(c[i]));
  bound += 1.0;
  std::vector<cplx> z(deg);
  for (std::size_t i = 0; i < deg; ++i)
    z[i] = std::polar(0.5 * bound, 2.0 * std::numbers::pi * (i + 0.25) / deg + 0.4);
  for (int iter = 0; iter < 500; ++iter) {
    double moved = 0.0;
    for (std::size_t i = 0; i < deg; ++i) {
      cplx d;
      const cplx p = horner(c, z[i], &d);
      if (p == cplx(0.0, 0.0)) continue;
      const cplx ratio = p / d;
      cplx s = 0.0;
      for (std::size_t j = 0; j < deg; ++j)
        if (j != i) s += 1.0 / (z[i] - z[j]);
      const cplx w = ratio / (1.0 - ratio * s);
      if (std::isfinite(w.real()) && std::isfinite(w.imag())) {
        z[i] -= w;
        moved = std::max(moved, std::abs(w) / std::max(1.0, std::abs(z[i])));
      }
    }
    if (moved < 1e-17) break;
  }
  for (cplx& r : z) {
    for (int k = 0; k < 3; ++k) {
      cplx d;
      const cplx p = horner(c, r, &d);
      if (d == cplx(0.0, 0.0)) break;
      const cplx step = p / d;
      if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) break;
      const cplx next = r - step;
      if (std::abs(horner(c, next, nullptr)) <= std::abs(p)) r = next;
      else break;
    }
  }
  return z;
}

void sort_spectrum(std::vector<cplx>& values, double tol) {
  // Insertion sort: the comparator is only tolerant, not a strict weak order.
  auto before = [tol](const cplx& a, const cplx& b) {
    if (std::abs(a.real() - b.real()) > tol) return a.real() < b.real();
    return a.imag() < b.imag();
  };
  for (std::size_t i = 1; i < values.size(); ++i) {
    cplx v = values[i];
    std::size_t j = i;
    while (j > 0 && before(v, values[j - 1])) {
      values[j] = values[j - 1];
      --j;
    }
    values[j] = v;
  }
}

Separation pairwise_separation(std::span<const cplx> values) {
  Separation s{std::numeric_limits<double>::infinity(),
               std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i < values.size(); ++i) {
    s.min_abs = std::min(s.min_abs, std::abs(values[i]));
    for (std::size_t j = i + 1; j < values.size(); ++j)
      s.min_gap = std::min(s.min_gap, std::abs(values[i] - values[j]));
  }
  return s;
}

double pm_pair_defect(std::span<const cplx> values) {
  double worst = 0.0;
  for (const cplx& v : values) {
    double best = std::numeric_limits<double>::infinity();
    for (const cplx& w : values) best = std::min(best, std::abs(v + w));
    worst = std::max(worst, best);
  }
  return worst;
}

SeparationGate::SeparationGate(double gamma_, double delta_, int n_)
    : gamma(gamma_), delta(delta_), n(n_) {
  if (!(gamma > 0.0))
    throw Error(ErrorKind::domain, "separation floor gamma must be positive");
}

GateResult perturbation_gate(const EigenDecomposition& prev, double delta_norm,
                             const SeparationGate& gate) {
  GateResult r;
  r.threshold = gate.gamma / ((3.0 * gate.n - 1.0) * prev.beta * prev.beta);
  r.passed = delta_norm < r.threshold;
  r.beta_bound = 2.0 * prev.beta;
  return r;
}

namespace {

std::vector<cplx> raw_eigenvalues(const CMat& m) {
  const Eigen::Index n = m.rows();
  if (n == 1) return {m(0, 0)};
  if (n == 2) {
    const cplx half_tr = 0.5 * (m(0, 0) + m(1, 1));
    // (a-d)^2/4 + bc avoids cancellation in tr^2/4 - det.
    const cplx hd = 0.5 * (m(0, 0) - m(1, 1));
    const cplx disc = std::sqrt(hd * hd + m(0, 1) * m(1, 0));
    return {half_tr + disc, half_tr - disc};
  }
  if (n <= 4) {
    const auto c = characteristic_polynomial(m);
    return polynomial_roots(c);
  }
  Eigen::ComplexEigenSolver<CMat> es(m, false);
  if (es.info() != Eigen::Success)
    throw DefectiveMatrixError("eigenvalue iteration did not converge", 0.0);
  std::vector<cplx> v(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = es.eigenvalues()(i);
  return v;
}

// Fix the phase so the largest-magnitude entry is real positive.
void normalize_column(Eigen::Ref<Eigen::VectorXcd> v) {
  Eigen::Index imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  const cplx phase = v(imax) / std::abs(v(imax));
  v /= phase;
  v.normalize();
}

}  // namespace

EigenDecomposition eigen_decompose(const CMat& m, double tol) {
  if (m.rows() != m.cols() || m.rows() == 0)
    throw Error(ErrorKind::structural, "eigen_decompose needs a square matrix");
  const Eigen::Index n = m.rows();
  const double scale = std::max(1.0, op_norm(m));
  std::vector<cplx> values = raw_eigenvalues(m);
  sort_spectrum(values, 1e-12 * scale);

  const Separation sep = pairwise_separation(values);
  EigenDecomposition out;
  out.values = values;
  out.tol_diag = tol;
  out.basis = CMat::Zero(n, n);

  // Group values into clusters closer than tol*scale; each cluster needs a
  // null space of matching dimension.
  std::vector<bool> used(values.size(), false);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (used[i]) continue;
    std::vector<std::size_t> cluster{i};
    for (std::size_t j = i + 1; j < values.size(); ++j)
      if (!used[j] && std::abs(values[j] - values[i]) <= tol * scale) cluster.push_back(j);
    cplx center = 0.0;
    for (auto j : cluster) {
      used[j] = true;
      center += values[j];
    }
    center /= static_cast<double>(cluster.size());
    const Eigen::Index mult = static_cast<Eigen::Index>(cluster.size());
    const CMat shifted = m - center * CMat::Identity(n, n);
    Eigen::JacobiSVD<CMat> svd(shifted, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    // Singular values are sorted descending; the last `mult` span the kernel.
    if (sv(n - mult) > 10.0 * tol * scale)
      throw DefectiveMatrixError(
          "eigenvalue of algebraic multiplicity " + std::to_string(mult) +
              " lacks a full eigenspace",
          sep.min_gap);
    for (Eigen::Index c = 0; c < mult; ++c) {
      Eigen::VectorXcd v = svd.matrixV().col(n - 1 - c);
      if (mult == 1) normalize_column(v);
      out.basis.col(static_cast<Eigen::Index>(cluster[static_cast<std::size_t>(c)])) = v;
    }
  }

  Eigen::FullPivLU<CMat> lu(out.basis);
  if (!lu.isInvertible())
    throw DefectiveMatrixError("eigenvector basis is singular", sep.min_gap);
  CMat inv = lu.inverse();
  const double kappa = op_norm(out.basis) * op_norm(inv);
  if (!(kappa * tol < 1.0))
    throw DefectiveMatrixError("eigenvector basis condition " + std::to_string(kappa) +
                                   " exceeds 1/tol",
                               sep.min_gap);
  const double c = std::sqrt(op_norm(inv) / op_norm(out.basis));
  out.basis *= c;
  out.basis_inverse = inv / c;
  out.beta = std::max(op_norm(out.basis), op_norm(out.basis_inverse));

  CMat d = out.basis_inverse * m * out.basis;
  double offdiag = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j) offdiag = std::max(offdiag, std::abs(d(i, j)));
  out.diag_residual = offdiag / scale;

  CMat dv = CMat::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) dv(i, i) = values[static_cast<std::size_t>(i)];
  const double resid = op_norm(m * out.basis - out.basis * dv) / op_norm(out.basis);
  if (resid > tol * scale)
    throw DefectiveMatrixError("eigenpair residual " + std::to_string(resid) +
                                   " above tolerance",
                               sep.min_gap);
  return out;
}

}  // namespace qpr
