// Copyright 2026 qpreduce contributors
// SPDX-License-Identifier: Apache-2.0
#include "qpr/hill.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>

#include <fftw3.h>

namespace qpr {

HillProblem::HillProblem(QPMatrix a) : a_(std::move(a)) {
  if (a_.dim() != 1) throw Error(ErrorKind::structural, "Hill coefficient must be scalar");
  if (a_.conjugate_asymmetry() > 1e-14)
    throw Error(ErrorKind::domain, "Hill coefficient a(t) must be real-valued");
  a_.enforce_real();
  a_.set_real_flag(true);
  a_bar_ = average(a_)(0, 0).real();
  if (!(a_bar_ > 0.0))
    throw Error(ErrorKind::domain, "Hill coefficient needs a positive average, got " +
                                       std::to_string(a_bar_));
}

HillProblem HillProblem::from_terms(const FrequencyVector& omega, double mean,
                                    std::span<const Term> terms, double rho) {
  int K = 0;
  for (const auto& t : terms) {
    if (static_cast<int>(t.k.size()) != omega.size())
      throw Error(ErrorKind::structural, "Hill term index has the wrong length");
    K = std::max(K, index_order(t.k));
  }
  QPMatrix a(omega, 1, rho, std::max(K, 1));
  CMat c(1, 1);
  c(0, 0) = mean;
  a.set_coeff(std::vector<int>(static_cast<std::size_t>(omega.size()), 0), c);
  for (const auto& t : terms) {
    if (index_order(t.k) == 0)
      throw Error(ErrorKind::domain, "Hill term index must be nonzero");
    std::vector<int> neg(t.k);
    for (int& v : neg) v = -v;
    // c cos x + s sin x = (c - i s)/2 e^{ix} + (c + i s)/2 e^{-ix}
    CMat plus(1, 1), minus(1, 1);
    plus(0, 0) = a.coeff(t.k)(0, 0) + cplx(0.5 * t.cos, -0.5 * t.sin);
    minus(0, 0) = a.coeff(neg)(0, 0) + cplx(0.5 * t.cos, 0.5 * t.sin);
    a.set_coeff(t.k, plus);
    a.set_coeff(neg, minus);
  }
  a.set_real_flag(true);
  return HillProblem(std::move(a));
}

HillSystem build_system(const HillProblem& p) {
  HillSystem s;
  s.A = CMat::Zero(2, 2);
  s.A(0, 1) = 1.0;
  s.Q = QPMatrix(p.omega(), 2, p.rho(), p.a().order());
  for (std::size_t q = 0; q < p.a().mode_count(); ++q) {
    if (p.a().mode_is_zero(q)) continue;
    CMat c = CMat::Zero(2, 2);
    c(1, 0) = -p.a().coeff_at(q)(0, 0);
    s.Q.set_coeff_at(q, c);
  }
  s.Q.set_real_flag(true);
  return s;
}

namespace {

double column_norm(const RMat& m) { return m.cwiseAbs().colwise().sum().maxCoeff(); }

}  // namespace

HillVerdict run(const HillProblem& p, double eps, const KamSchedule& sched,
                const HillOptions& opt) {
  HillVerdict v;
  v.eps = eps;
  v.oracle_agreement = std::numeric_limits<double>::quiet_NaN();
  if (!(eps > 0.0)) {
    v.out_of_domain = true;
    return v;
  }
  const HillSystem sys = build_system(p);
  DiophantineSpec ds;
  ds.alpha = sched.alpha;
  ds.tau = sched.tau;
  ds.K_check = sched.k_growth.cap;
  const std::vector<cplx> zero(2, cplx(0.0, 0.0));
  v.assumption_A = check_assumption_A(p.omega(), zero, ds).pass;

  v.reduction = reduce(sys.A, sys.Q, eps, sched);
  const FundamentalSolution sol = integrate_fundamental(sys.A, sys.Q, eps, opt.oracle);
  v.det_drift = sol.det_drift;
  if (!v.reduction.reduced) return v;

  v.b = imaginary_pair_b(v.reduction.B, opt.pair_tol);
  const QPMatrix psi = reduction_transformation(v.reduction, p.omega(), 2, p.rho());
  v.oracle_agreement = compare_with_reduction(sol, v.reduction, psi);
  if (!v.b) return v;
  const double sb = std::sqrt(*v.b);
  v.sqrt_b_over_sqrt_eps = sb / std::sqrt(eps);
  RMat D = RMat::Identity(2, 2), Dinv = RMat::Identity(2, 2);
  D(1, 1) = 1.0 / sb;
  Dinv(1, 1) = sb;
  for (const auto& phi : sol.phi) v.orbit_bound = std::max(v.orbit_bound, column_norm(D * phi * Dinv));
  v.stable = *v.b > 0.0 && v.orbit_bound <= opt.bound_factor;
  return v;
}

BFit fit_b(std::span<const double> eps, std::span<const double> b) {
  BFit f;
  f.eps.assign(eps.begin(), eps.end());
  f.b.assign(b.begin(), b.end());
  f.successes = static_cast<int>(eps.size());
  if (eps.size() < 5) return f;
  const Eigen::Index m = static_cast<Eigen::Index>(eps.size());
  Eigen::MatrixXd X(m, 2);
  Eigen::VectorXd y(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double e = eps[static_cast<std::size_t>(i)];
    const double w = 1.0 / (e * e * e);
    X(i, 0) = e * w;
    X(i, 1) = e * e * w;
    y(i) = b[static_cast<std::size_t>(i)] * w;
  }
  const Eigen::Vector2d c = X.colPivHouseholderQr().solve(y);
  f.slope = c(0);
  f.curvature = c(1);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double e = eps[static_cast<std::size_t>(i)];
    const double r = std::abs(b[static_cast<std::size_t>(i)] - f.slope * e - f.curvature * e * e);
    f.max_residual = std::max(f.max_residual, r);
    const double scale = std::abs(f.curvature) * e * e * e;
    f.max_residual_ratio = std::max(
        f.max_residual_ratio, scale > 0.0 ? r / scale : (r > 0.0 ? std::numeric_limits<double>::infinity() : 0.0));
  }
  f.conclusive = true;
  return f;
}

BFit b_scaling_fit(const HillProblem& p, std::span<const double> eps_list,
                   const KamSchedule& sched) {
  const HillSystem sys = build_system(p);
  std::vector<double> es, bs;
  for (double e : eps_list) {
    const ReductionResult r = reduce(sys.A, sys.Q, e, sched);
    if (!r.reduced) continue;
    const auto b = imaginary_pair_b(r.B);
    if (!b) continue;
    es.push_back(e);
    bs.push_back(*b);
  }
  return fit_b(es, bs);
}

namespace {

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

double slope_fit(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// |sum_j w_j x_j e^{-i nu t_j}|.
double windowed_dtft(std::span<const double> wx, double dt, double nu) {
  cplx acc = 0.0;
  const cplx step = std::polar(1.0, -nu * dt);
  cplx ph = 1.0;
  for (std::size_t j = 0; j < wx.size(); ++j) {
    acc += wx[j] * ph;
    ph *= step;
    if ((j & 1023) == 1023) ph = std::polar(1.0, -nu * dt * static_cast<double>(j + 1));
  }
  return std::abs(acc);
}

std::vector<SpectralPeak> spectrum_peaks(std::span<const double> wx, double dt,
                                         std::size_t count, double* refined) {
  std::size_t nfft = 1;
  while (nfft < 4 * wx.size()) nfft <<= 1;
  std::vector<double> in(nfft, 0.0);
  std::copy(wx.begin(), wx.end(), in.begin());
  std::vector<fftw_complex> out(nfft / 2 + 1);
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_planner_mutex());
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(nfft), in.data(), out.data(), FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  std::vector<double> mag(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) mag[i] = std::hypot(out[i][0], out[i][1]);
  const double df = 2.0 * std::numbers::pi / (dt * static_cast<double>(nfft));

  std::vector<SpectralPeak> peaks;
  for (std::size_t i = 1; i + 1 < mag.size(); ++i)
    if (mag[i] > mag[i - 1] && mag[i] >= mag[i + 1]) peaks.push_back({i * df, mag[i]});
  std::sort(peaks.begin(), peaks.end(),
            [](const SpectralPeak& a, const SpectralPeak& b) { return a.amplitude > b.amplitude; });
  if (peaks.size() > count) peaks.resize(count);
  if (!peaks.empty() && refined) {
    // Golden-section search of the continuous transform within one bin.
    double lo = peaks.front().frequency - df, hi = peaks.front().frequency + df;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = windowed_dtft(wx, dt, x1), f2 = windowed_dtft(wx, dt, x2);
    for (int it = 0; it < 60 && hi - lo > 1e-12 * peaks.front().frequency; ++it) {
      if (f1 < f2) {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + g * (hi - lo);
        f2 = windowed_dtft(wx, dt, x2);
      } else {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - g * (hi - lo);
        f1 = windowed_dtft(wx, dt, x1);
      }
    }
    *refined = 0.5 * (lo + hi);
  }
  return peaks;
}

}  // namespace

FrequencyReport frequency_analysis(const HillProblem& p, const HillVerdict& v,
                                   const FrequencyOptions& opt) {
  if (!v.reduction.reduced || !v.stable || !v.b)
    throw Error(ErrorKind::inapplicable, "frequency analysis needs a reduced, stable verdict");
  if (!(opt.horizon > 0.0) || !(opt.dt > 0.0))
    throw Error(ErrorKind::domain, "frequency analysis needs positive horizon and dt");
  FrequencyReport rep;
  rep.sqrt_b = std::sqrt(*v.b);
  rep.bin_width = 2.0 * std::numbers::pi / opt.horizon;
  const HillSystem sys = build_system(p);
  const double sb = rep.sqrt_b;

  Eigen::VectorXd x0(2);
  x0 << 1.0, 0.37 * sb;
  const long count = static_cast<long>(std::floor(opt.horizon / opt.dt)) + 1;
  const Trajectory tr = trajectory(sys.A, sys.Q, v.eps, x0, opt.dt, count, opt.integrator);

  const double amp0 = std::abs(x0(0)) + std::abs(x0(1)) / sb;
  std::vector<double> theta(tr.states.size()), xs(tr.states.size());
  double prev = 0.0, offset = 0.0;
  for (std::size_t j = 0; j < tr.states.size(); ++j) {
    const double x = tr.states[j](0), y = tr.states[j](1) / sb;
    rep.orbit_ratio = std::max(rep.orbit_ratio, (std::abs(x) + std::abs(y)) / amp0);
    const double a = std::atan2(-y, x);
    if (j > 0) {
      if (a - prev > std::numbers::pi) offset -= 2.0 * std::numbers::pi;
      if (a - prev < -std::numbers::pi) offset += 2.0 * std::numbers::pi;
    }
    prev = a;
    theta[j] = a + offset;
    xs[j] = x;
  }
  rep.rotation = slope_fit(tr.times, theta);

  // Zero crossings of x located by cubic Hermite interpolation with x'.
  std::vector<double> idx, when;
  for (std::size_t j = 0; j + 1 < tr.states.size(); ++j) {
    const double x_a = tr.states[j](0), x_b = tr.states[j + 1](0);
    if ((x_a < 0.0) == (x_b < 0.0) || x_b == 0.0) continue;
    const double d_a = tr.states[j](1) * opt.dt, d_b = tr.states[j + 1](1) * opt.dt;
    auto H = [&](double s) {
      const double s2 = s * s, s3 = s2 * s;
      return (2 * s3 - 3 * s2 + 1) * x_a + (s3 - 2 * s2 + s) * d_a + (-2 * s3 + 3 * s2) * x_b +
             (s3 - s2) * d_b;
    };
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      if ((H(mid) < 0.0) == (x_a < 0.0)) lo = mid;
      else hi = mid;
    }
    idx.push_back(static_cast<double>(idx.size()));
    when.push_back(tr.times[j] + 0.5 * (lo + hi) * opt.dt);
  }
  if (idx.size() >= 3) rep.zero_crossing = std::numbers::pi / slope_fit(idx, when);

  std::vector<double> wx(xs.size());
  const double nm1 = static_cast<double>(xs.size() - 1);
  for (std::size_t j = 0; j < xs.size(); ++j)
    wx[j] = xs[j] * 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(j) / nm1));
  rep.peaks = spectrum_peaks(wx, opt.dt, 8, &rep.spectral_peak);

  rep.rotation_rel_error = std::abs(rep.rotation - sb) / sb;
  rep.zero_crossing_rel_error = std::abs(rep.zero_crossing - sb) / sb;
  rep.spectral_rel_error = std::abs(rep.spectral_peak - sb) / sb;
  rep.extended = check_extended_frequencies(p.omega(), *v.b, opt.extended);
  rep.extended_mixed = check_extended_frequencies(p.omega(), *v.b, opt.extended, true);
  rep.pass = rep.rotation_rel_error <= opt.rel_tol && rep.zero_crossing_rel_error <= opt.rel_tol &&
             rep.spectral_rel_error <= opt.rel_tol;
  return rep;
}

}  // namespace qpr
