// Copyright 2026 qpreduce contributors
// SPDX-License-Identifier: Apache-2.0
#include "qpr/qpr.h"

#include <new>
#include <string>

#include "qpr/commands.hpp"
#include "qpr/config.hpp"

struct qpr_config {
  qpr::ProblemConfig cfg;
};

struct qpr_output {
  qpr::CommandResult result;
};

struct qpr_reduction {
  qpr::ProblemConfig cfg;
  qpr::ReductionResult result;
};

namespace {

thread_local std::string last_error;

qpr_status status_for(qpr::ErrorKind k) {
  using qpr::ErrorKind;
  switch (k) {
    case ErrorKind::parse: return QPR_ERR_PARSE;
    case ErrorKind::domain: return QPR_ERR_DOMAIN;
    case ErrorKind::structural: return QPR_ERR_STRUCTURAL;
    case ErrorKind::precondition:
    case ErrorKind::inapplicable: return QPR_ERR_PRECONDITION;
    case ErrorKind::integration: return QPR_ERR_INTEGRATION;
    case ErrorKind::resonant_representation:
    case ErrorKind::defective_matrix:
    case ErrorKind::small_divisor:
    case ErrorKind::smallness:
    case ErrorKind::truncation: return QPR_ERR_NUMERICAL;
  }
  return QPR_ERR_INTERNAL;
}

template <class F>
qpr_status guarded(F&& f) {
  try {
    f();
    last_error.clear();
    return QPR_OK;
  } catch (const qpr::Error& e) {
    last_error = e.what();
    return status_for(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    last_error = e.what();
    return QPR_ERR_IO;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return QPR_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return QPR_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return QPR_ERR_INTERNAL;
  }
}

qpr_status invalid(const char* what) {
  last_error = what;
  return QPR_ERR_INVALID_ARGUMENT;
}

}  // namespace

extern "C" {

const char* qpr_last_error(void) { return last_error.c_str(); }

const char* qpr_status_string(qpr_status status) {
  switch (status) {
    case QPR_OK: return "ok";
    case QPR_ERR_INVALID_ARGUMENT: return "invalid argument";
    case QPR_ERR_PARSE: return "parse error";
    case QPR_ERR_DOMAIN: return "domain error";
    case QPR_ERR_STRUCTURAL: return "structural error";
    case QPR_ERR_PRECONDITION: return "precondition violated";
    case QPR_ERR_NUMERICAL: return "numerical failure";
    case QPR_ERR_INTEGRATION: return "integration failure";
    case QPR_ERR_IO: return "i/o error";
    case QPR_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* qpr_version(void) { return "0.1.0"; }

void qpr_run_options_init(qpr_run_options* opt) {
  if (!opt) return;
  opt->workers = 1;
  opt->has_seed = 0;
  opt->seed = 0;
  opt->has_horizon = 0;
  opt->horizon = 0.0;
}

qpr_status qpr_config_load(const char* path, qpr_config** out) {
  if (!path || !out) return invalid("qpr_config_load: null argument");
  *out = nullptr;
  return guarded([&] { *out = new qpr_config{qpr::load_config(path)}; });
}

qpr_status qpr_config_parse(const char* text, qpr_config** out) {
  if (!text || !out) return invalid("qpr_config_parse: null argument");
  *out = nullptr;
  return guarded([&] { *out = new qpr_config{qpr::parse_config(text)}; });
}

qpr_status qpr_config_default(qpr_config** out) {
  if (!out) return invalid("qpr_config_default: null argument");
  *out = nullptr;
  return guarded([&] { *out = new qpr_config{qpr::default_config()}; });
}

void qpr_config_free(qpr_config* cfg) { delete cfg; }

const char* qpr_config_mode(const qpr_config* cfg) { return cfg ? cfg->cfg.mode.c_str() : ""; }

qpr_status qpr_run(const qpr_config* cfg, qpr_command cmd, const qpr_run_options* opt,
                   qpr_output** out) {
  if (!cfg || !out) return invalid("qpr_run: null argument");
  *out = nullptr;
  qpr::RunOptions ro;
  if (opt) {
    ro.workers = opt->workers;
    if (opt->has_seed) ro.seed = opt->seed;
    if (opt->has_horizon) ro.horizon = opt->horizon;
  }
  return guarded([&] {
    qpr::CommandResult r;
    switch (cmd) {
      case QPR_CMD_REDUCE: r = qpr::cmd_reduce(cfg->cfg, ro); break;
      case QPR_CMD_SWEEP: r = qpr::cmd_sweep(cfg->cfg, ro); break;
      case QPR_CMD_HILL: r = qpr::cmd_hill(cfg->cfg, ro); break;
      case QPR_CMD_VERIFY: r = qpr::cmd_verify(cfg->cfg, ro); break;
      default: throw qpr::Error(qpr::ErrorKind::domain, "unknown command");
    }
    *out = new qpr_output{std::move(r)};
  });
}

int qpr_output_exit_code(const qpr_output* out) { return out ? out->result.exit_code : -1; }

const char* qpr_output_summary(const qpr_output* out) {
  return out ? out->result.summary.c_str() : "";
}

size_t qpr_output_artifact_count(const qpr_output* out) {
  return out ? out->result.artifacts.size() : 0;
}

const char* qpr_output_artifact_name(const qpr_output* out, size_t i) {
  if (!out || i >= out->result.artifacts.size()) return nullptr;
  return out->result.artifacts[i].name.c_str();
}

const char* qpr_output_artifact_data(const qpr_output* out, size_t i, size_t* size) {
  if (!out || i >= out->result.artifacts.size()) return nullptr;
  const auto& a = out->result.artifacts[i];
  if (size) *size = a.content.size();
  return a.content.c_str();
}

qpr_status qpr_output_write(const qpr_output* out, const char* dir) {
  if (!out || !dir) return invalid("qpr_output_write: null argument");
  const qpr_status s = guarded([&] { qpr::write_artifacts(out->result, dir); });
  return s == QPR_ERR_DOMAIN ? QPR_ERR_IO : s;
}

void qpr_output_free(qpr_output* out) { delete out; }

qpr_status qpr_reduce(const qpr_config* cfg, double eps, qpr_reduction** out) {
  if (!cfg || !out) return invalid("qpr_reduce: null argument");
  *out = nullptr;
  return guarded([&] {
    auto r = std::make_unique<qpr_reduction>();
    r->cfg = cfg->cfg;
    r->result = qpr::reduce(r->cfg.A, r->cfg.Q, eps, r->cfg.schedule);
    *out = r.release();
  });
}

int qpr_reduction_reduced(const qpr_reduction* r) { return r && r->result.reduced ? 1 : 0; }

const char* qpr_reduction_status(const qpr_reduction* r) {
  if (!r) return "";
  return r->result.reduced ? "reduced" : qpr::to_string(r->result.failure);
}

size_t qpr_reduction_dim(const qpr_reduction* r) {
  return r ? static_cast<size_t>(r->cfg.n) : 0;
}

size_t qpr_reduction_steps(const qpr_reduction* r) { return r ? r->result.trace.size() : 0; }

qpr_status qpr_reduction_residual(const qpr_reduction* r, size_t m, double* residual) {
  if (!r || !residual) return invalid("qpr_reduction_residual: null argument");
  if (m >= r->result.trace.size()) return invalid("qpr_reduction_residual: record out of range");
  *residual = r->result.trace[m].residual_norm;
  return QPR_OK;
}

qpr_status qpr_reduction_B(const qpr_reduction* r, double* re, double* im) {
  if (!r || !re || !im) return invalid("qpr_reduction_B: null argument");
  if (!r->result.reduced) {
    last_error = "reduction did not converge";
    return QPR_ERR_PRECONDITION;
  }
  const auto& B = r->result.B;
  for (Eigen::Index i = 0; i < B.rows(); ++i)
    for (Eigen::Index j = 0; j < B.cols(); ++j) {
      re[i * B.cols() + j] = B(i, j).real();
      im[i * B.cols() + j] = B(i, j).imag();
    }
  return QPR_OK;
}

qpr_status qpr_reduction_b(const qpr_reduction* r, double* b) {
  if (!r || !b) return invalid("qpr_reduction_b: null argument");
  return guarded([&] {
    if (!r->result.reduced) throw qpr::Error(qpr::ErrorKind::precondition, "reduction did not converge");
    const auto v = qpr::imaginary_pair_b(r->result.B);
    if (!v) throw qpr::Error(qpr::ErrorKind::inapplicable, "B has no purely imaginary pair");
    *b = *v;
  });
}

qpr_status qpr_reduction_convergence_slope(const qpr_reduction* r, double* slope) {
  if (!r || !slope) return invalid("qpr_reduction_convergence_slope: null argument");
  const auto c = qpr::convergence_report(r->result.trace);
  if (!c.conclusive) {
    last_error = "too few ok records for a slope";
    return QPR_ERR_PRECONDITION;
  }
  *slope = c.slope;
  return QPR_OK;
}

qpr_status qpr_reduction_oracle_error(const qpr_reduction* r, double horizon, double* error) {
  if (!r || !error) return invalid("qpr_reduction_oracle_error: null argument");
  return guarded([&] {
    qpr::IntegratorConfig oc = r->cfg.oracle;
    oc.horizon = horizon;
    const auto sol = qpr::integrate_fundamental(r->cfg.A, r->cfg.Q, r->result.eps, oc);
    const auto psi = qpr::reduction_transformation(r->result, r->cfg.omega, r->cfg.n,
                                                   r->cfg.schedule.rho);
    *error = qpr::compare_with_reduction(sol, r->result, psi);
  });
}

void qpr_reduction_free(qpr_reduction* r) { delete r; }

}  // extern "C"
