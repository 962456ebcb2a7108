// Copyright 2026 qpreduce contributors
// SPDX-License-Identifier: Apache-2.0
#include "qpr/diophantine.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <ostream>
#include <thread>

namespace qpr {

namespace {

void require_tau(const FrequencyVector& omega, const DiophantineSpec& spec) {
  if (!(spec.tau > omega.size() - 1))
    throw Error(ErrorKind::domain, "Diophantine exponent tau must exceed r - 1");
  if (spec.K_check < 1) throw Error(ErrorKind::domain, "K_check must be >= 1");
  if (!(spec.alpha > 0.0)) throw Error(ErrorKind::domain, "alpha must be positive");
}

void consider(DiophantineCheck& out, std::span<const int> k, int i, int j, double modulus,
              double threshold) {
  ++out.entries;
  const double ratio = modulus / threshold;
  if (out.entries == 1 || ratio < out.min_ratio) {
    out.min_ratio = ratio;
    out.worst = DivisorWitness{std::vector<int>(k.begin(), k.end()), i, j, modulus, threshold};
  }
}

}  // namespace

DiophantineCheck check_assumption_A(const FrequencyVector& omega,
                                    std::span<const cplx> lambda_values,
                                    const DiophantineSpec& spec) {
  require_tau(omega, spec);
  const double e = spec.exponent_mode == ExponentMode::triple_tau ? 3.0 * spec.tau : spec.tau;
  const auto ball = IndexBall::get(omega.size(), spec.K_check);
  const int n = static_cast<int>(lambda_values.size());
  DiophantineCheck out;
  for (std::size_t p = 1; p < ball->size(); ++p) {
    const auto k = ball->index(p);
    const double w = omega.dot(k);
    const double thr = spec.alpha / std::pow(static_cast<double>(ball->order(p)), e);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const cplx d = cplx(0.0, w) - lambda_values[static_cast<std::size_t>(i)] +
                       lambda_values[static_cast<std::size_t>(j)];
        consider(out, k, i, j, std::abs(d), thr);
      }
  }
  out.pass = out.entries == 0 || out.min_ratio >= 1.0;
  return out;
}

DiophantineCheck check_extended_frequencies(const FrequencyVector& omega, double b,
                                            const DiophantineSpec& spec, bool mixed_only) {
  if (!(b > 0.0)) throw Error(ErrorKind::domain, "extended check needs b > 0");
  require_tau(omega, spec);
  std::vector<double> ext = omega.values();
  ext.push_back(std::sqrt(b));
  const FrequencyVector big(ext);
  const double e = 5.0 * spec.tau + 4.0;
  const double alpha0 = 0.5 * spec.alpha;
  const auto ball = IndexBall::get(big.size(), spec.K_check);
  DiophantineCheck out;
  for (std::size_t p = 1; p < ball->size(); ++p) {
    const auto k = ball->index(p);
    if (mixed_only && index_order(k.first(k.size() - 1)) == 0) continue;
    const double thr = alpha0 / std::pow(static_cast<double>(ball->order(p)), e);
    consider(out, k, 0, 0, std::abs(big.dot(k)), thr);
  }
  out.pass = out.entries == 0 || out.min_ratio >= 1.0;
  return out;
}

std::optional<double> imaginary_pair_b(const CMat& B, double tol) {
  if (B.rows() != 2 || B.cols() != 2) return std::nullopt;
  const auto eig = eigen_decompose(B);
  const cplx l0 = eig.values[0], l1 = eig.values[1];
  const double scale = std::max(std::abs(l0), std::abs(l1));
  if (scale == 0.0) return std::nullopt;
  if (std::abs(l0.real()) > tol * scale || std::abs(l1.real()) > tol * scale) return std::nullopt;
  if (std::abs(l0 + l1) > tol * scale) return std::nullopt;
  return 0.5 * (std::norm(l0) + std::norm(l1));
}

std::vector<double> sweep_grid(double eps0, int grid_size) {
  if (!(eps0 > 0.0)) throw Error(ErrorKind::domain, "sweep needs eps0 > 0");
  if (grid_size < 10) throw Error(ErrorKind::domain, "sweep needs at least 10 grid points");
  std::vector<double> g(static_cast<std::size_t>(grid_size));
  for (int j = 0; j < grid_size; ++j) g[static_cast<std::size_t>(j)] = eps0 * (j + 0.5) / grid_size;
  return g;
}

SweepOutcome sweep_point(const CMat& A, const QPMatrix& Q, double eps,
                         const KamSchedule& sched) {
  SweepOutcome o;
  o.eps = eps;
  const ReductionResult r = reduce(A, Q, eps, sched);
  o.reduced = r.reduced;
  o.failure = r.failure;
  o.failed_step = r.failed_step;
  o.steps = static_cast<int>(r.trace.size());
  if (!r.trace.empty()) {
    o.final_residual = r.trace.back().residual_norm + r.trace.back().truncation_loss;
    o.worst_k = r.trace.back().worst_k;
  }
  if (r.reduced) {
    try {
      o.b = imaginary_pair_b(r.B);
    } catch (const DefectiveMatrixError&) {
    }
  }
  return o;
}

SweepReport sweep(const CMat& A, const QPMatrix& Q, double eps0, int grid_size,
                  const KamSchedule& sched, int workers) {
  SweepReport rep;
  rep.eps0 = eps0;
  const auto grid = sweep_grid(eps0, grid_size);
  rep.outcomes.resize(grid.size());
  if (workers <= 0) workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = std::min<int>(workers, grid_size);

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < grid.size(); i = next++) {
      try {
        rep.outcomes[i] = sweep_point(A, Q, grid[i], sched);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
  }
  if (error) std::rethrow_exception(error);

  std::size_t ok = 0;
  for (const auto& o : rep.outcomes) ok += o.reduced ? 1 : 0;
  rep.success_fraction = static_cast<double>(ok) / static_cast<double>(grid.size());

  for (std::size_t i = 0; i < rep.outcomes.size();) {
    if (rep.outcomes[i].reduced) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < rep.outcomes.size() && !rep.outcomes[j + 1].reduced) ++j;
    FailureCluster c;
    c.eps_lo = rep.outcomes[i].eps;
    c.eps_hi = rep.outcomes[j].eps;
    c.grid_points = j - i + 1;
    c.failure = rep.outcomes[i].failure;
    for (std::size_t q = i; q <= j; ++q)
      if (!rep.outcomes[q].worst_k.empty()) {
        c.k = rep.outcomes[q].worst_k;
        c.failure = rep.outcomes[q].failure;
        break;
      }
    if (i > 0) {
      const double mid = 0.5 * (rep.outcomes[i - 1].eps + c.eps_lo);
      if (!sweep_point(A, Q, mid, sched).reduced) c.eps_lo = mid;
    }
    if (j + 1 < rep.outcomes.size()) {
      const double mid = 0.5 * (c.eps_hi + rep.outcomes[j + 1].eps);
      if (!sweep_point(A, Q, mid, sched).reduced) c.eps_hi = mid;
    }
    rep.clusters.push_back(std::move(c));
    i = j + 1;
  }
  return rep;
}

void write_sweep_csv(std::ostream& os, const SweepReport& rep) {
  std::size_t r = 0;
  for (const auto& o : rep.outcomes) r = std::max(r, o.worst_k.size());
  os << "eps,status,failed_step,steps,final_residual,b";
  for (std::size_t j = 0; j < r; ++j) os << ",worst_k" << j;
  os << "\n";
  os.precision(17);
  for (const auto& o : rep.outcomes) {
    os << o.eps << "," << (o.reduced ? "reduced" : to_string(o.failure)) << ","
       << o.failed_step << "," << o.steps << "," << o.final_residual << ",";
    if (o.b) os << *o.b;
    for (std::size_t j = 0; j < r; ++j) {
      os << ",";
      if (j < o.worst_k.size()) os << o.worst_k[j];
    }
    os << "\n";
  }
}

}  // namespace qpr
