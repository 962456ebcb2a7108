// Copyright 2026 qpreduce contributors
// SPDX-License-Identifier: Apache-2.0
#include "qpr/oracle.hpp"

#include <cmath>
#include <ostream>

#include <boost/numeric/odeint.hpp>
#include <unsupported/Eigen/MatrixFunctions>

namespace qpr {

namespace odeint = boost::numeric::odeint;

namespace {

using State = std::vector<double>;

// Column-major n x cols state, right-hand side M(t) X.
struct LinearField {
  CMat A;
  QPMatrix Q;
  double eps;
  int n;
  int cols;

  RMat matrix(double t) const {
    CMat m = A;
    if (eps != 0.0) m += eps * evaluate(Q, t);
    return m.real();
  }

  void operator()(const State& x, State& dxdt, double t) const {
    const RMat m = matrix(t);
    Eigen::Map<const RMat> X(x.data(), n, cols);
    Eigen::Map<RMat> D(dxdt.data(), n, cols);
    D.noalias() = m * X;
  }
};

void require_real(const CMat& A, const QPMatrix& Q) {
  if (A.rows() != A.cols() || A.rows() != Q.dim())
    throw Error(ErrorKind::structural, "oracle: A and Q dimensions differ");
  if (A.imag().cwiseAbs().maxCoeff() != 0.0 || Q.conjugate_asymmetry() > 1e-14)
    throw Error(ErrorKind::precondition, "oracle: system must be real-valued");
}

State to_state(const RMat& m) { return State(m.data(), m.data() + m.size()); }

template <class Stepper>
void guarded(double t_hint, Stepper&& run) {
  try {
    run();
  } catch (const odeint::step_adjustment_error& e) {
    throw IntegrationError(std::string("step size control failed: ") + e.what(), t_hint);
  } catch (const odeint::no_progress_error& e) {
    throw IntegrationError(std::string("integrator made no progress: ") + e.what(), t_hint);
  }
}

}  // namespace

RMat propagate(const CMat& A, const QPMatrix& Q, double eps, double t0, double t1,
               const RMat& X0, const IntegratorConfig& cfg) {
  require_real(A, Q);
  const int n = static_cast<int>(A.rows());
  LinearField f{A, Q, eps, n, static_cast<int>(X0.cols())};
  State x = to_state(X0);
  if (t0 == t1) return X0;
  auto stepper = odeint::make_controlled(cfg.abs_tol, cfg.rel_tol,
                                         odeint::runge_kutta_fehlberg78<State>());
  const double dt = (t1 > t0 ? 1.0 : -1.0) * 1e-3;
  guarded(t0, [&] { odeint::integrate_adaptive(stepper, f, x, t0, t1, dt); });
  Eigen::Map<const RMat> X(x.data(), n, X0.cols());
  if (!X.allFinite()) throw IntegrationError("solution overflowed", t1);
  return X;
}

RMat propagate_fixed(const CMat& A, const QPMatrix& Q, double eps, double t1, int steps) {
  require_real(A, Q);
  const int n = static_cast<int>(A.rows());
  LinearField f{A, Q, eps, n, n};
  State x = to_state(RMat::Identity(n, n));
  odeint::runge_kutta_fehlberg78<State> stepper;
  const double dt = t1 / steps;
  double t = 0.0;
  for (int i = 0; i < steps; ++i) {
    stepper.do_step(f, x, t, dt);
    t = (i + 1) * dt;
  }
  return Eigen::Map<const RMat>(x.data(), n, n);
}

FundamentalSolution integrate_fundamental(const CMat& A, const QPMatrix& Q, double eps,
                                          const IntegratorConfig& cfg) {
  require_real(A, Q);
  if (!(cfg.horizon > 0.0) || cfg.samples < 2)
    throw Error(ErrorKind::domain, "oracle: need a positive horizon and >= 2 samples");
  const int n = static_cast<int>(A.rows());
  LinearField f{A, Q, eps, n, n};
  FundamentalSolution sol;
  for (int j = 0; j < cfg.samples; ++j)
    sol.times.push_back(cfg.horizon * j / (cfg.samples - 1));
  State x = to_state(RMat::Identity(n, n));
  const CMat J = n % 2 == 0 ? symplectic_unit(n) : CMat();
  auto observe = [&](const State& s, double t) {
    RMat phi = Eigen::Map<const RMat>(s.data(), n, n);
    if (!phi.allFinite()) throw IntegrationError("solution overflowed", t);
    sol.det_drift = std::max(sol.det_drift, std::abs(phi.determinant() - 1.0));
    if (n % 2 == 0) {
      const CMat pc = phi.cast<cplx>();
      sol.symplectic_defect =
          std::max(sol.symplectic_defect,
                   (pc.transpose() * J * pc - J).cwiseAbs().maxCoeff());
    }
    sol.phi.push_back(std::move(phi));
  };
  auto stepper = odeint::make_controlled(cfg.abs_tol, cfg.rel_tol,
                                         odeint::runge_kutta_fehlberg78<State>());
  guarded(0.0, [&] {
    odeint::integrate_times(stepper, f, x, sol.times.begin(), sol.times.end(), 1e-3,
                            observe, odeint::max_step_checker(static_cast<int>(
                                         std::min<long>(cfg.max_steps, 1'000'000'000))));
  });
  return sol;
}

Trajectory trajectory(const CMat& A, const QPMatrix& Q, double eps,
                      const Eigen::VectorXd& x0, double dt, long count,
                      const IntegratorConfig& cfg) {
  require_real(A, Q);
  if (!(dt > 0.0) || count < 1) throw Error(ErrorKind::domain, "trajectory: bad sampling");
  const int n = static_cast<int>(A.rows());
  LinearField f{A, Q, eps, n, 1};
  Trajectory tr;
  tr.times.reserve(static_cast<std::size_t>(count));
  for (long j = 0; j < count; ++j) tr.times.push_back(dt * static_cast<double>(j));
  State x(x0.data(), x0.data() + x0.size());
  auto observe = [&](const State& s, double t) {
    Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(s.data(), n);
    if (!v.allFinite()) throw IntegrationError("solution overflowed", t);
    tr.states.push_back(std::move(v));
  };
  auto stepper = odeint::make_controlled(cfg.abs_tol, cfg.rel_tol,
                                         odeint::runge_kutta_fehlberg78<State>());
  if (count == 1) {
    observe(x, 0.0);
    return tr;
  }
  guarded(0.0, [&] {
    odeint::integrate_times(stepper, f, x, tr.times.begin(), tr.times.end(), 1e-3, observe);
  });
  return tr;
}

CMat dense_exponential(const CMat& m, double t) {
  const CMat mt = m * t;
  return mt.exp();
}

QPMatrix reduction_transformation(const ReductionResult& result,
                                  const FrequencyVector& omega, int n, double rho) {
  return compose_transformation(result.factors, result.psi_truncation, omega, n, rho);
}

double compare_with_reduction(const FundamentalSolution& sol, const ReductionResult& result,
                              const QPMatrix& psi) {
  if (!result.reduced)
    throw Error(ErrorKind::precondition, "comparison needs a reduced result");
  const CMat psi0_inv = evaluate(psi, 0.0).inverse();
  double worst = 0.0;
  for (std::size_t j = 0; j < sol.times.size(); ++j) {
    const double t = sol.times[j];
    const CMat pred = evaluate(psi, t) * dense_exponential(result.B, t) * psi0_inv;
    worst = std::max(worst, op_norm(sol.phi[j].cast<cplx>() - pred));
  }
  return worst;
}

void write_solution_csv(std::ostream& os, const FundamentalSolution& sol) {
  const Eigen::Index n = sol.phi.empty() ? 0 : sol.phi.front().rows();
  os << "t";
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) os << ",phi_" << i << "_" << j;
  os << "\n";
  os.precision(17);
  for (std::size_t s = 0; s < sol.times.size(); ++s) {
    os << sol.times[s];
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) os << "," << sol.phi[s](i, j);
    os << "\n";
  }
}

}  // namespace qpr
