// Copyright 2026 qpreduce contributors
// SPDX-License-Identifier: Apache-2.0
#include "qpr/commands.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "qpr/io.hpp"

namespace qpr {

namespace {

using io::json;

std::string fmt(double v, int prec = 6) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

IntegratorConfig oracle_config(const ProblemConfig& cfg, const RunOptions& opt) {
  IntegratorConfig oc = cfg.oracle;
  if (opt.horizon) {
    if (!(*opt.horizon > 0.0)) throw ParseError("--horizon", "must be positive");
    oc.horizon = *opt.horizon;
  }
  return oc;
}

json problem_json(const ProblemConfig& cfg) {
  json j{{"omega", io::to_json(cfg.omega)},
         {"n", cfg.n},
         {"A", io::to_json(cfg.A)},
         {"Q", io::to_json(cfg.Q)},
         {"schedule", io::to_json(cfg.schedule)}};
  if (cfg.hill) j["hill"] = json{{"a", io::to_json(cfg.hill->a())}, {"a_bar", cfg.hill->a_bar()}};
  return j;
}

std::string csv(const std::function<void(std::ostream&)>& writer) {
  std::ostringstream os;
  writer(os);
  return os.str();
}

std::vector<double> log_spaced(double lo, double hi, int count) {
  std::vector<double> out;
  for (int i = 0; i < count; ++i)
    out.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (count - 1)));
  return out;
}

}  // namespace

CommandResult cmd_reduce(const ProblemConfig& cfg, const RunOptions& opt) {
  if (!cfg.eps) throw ParseError("eps", "reduce needs a single eps");
  const double eps = *cfg.eps;
  const ReductionResult res = reduce(cfg.A, cfg.Q, eps, cfg.schedule);

  CommandResult out;
  json rep{{"command", "reduce"}, {"problem", problem_json(cfg)}, {"result", io::to_json(res)}};
  std::ostringstream sum;
  sum << "status: " << (res.reduced ? "reduced" : to_string(res.failure)) << "\n";
  sum << "steps: " << res.trace.size() << "\n";
  if (!res.reason.empty()) sum << "reason: " << res.reason << "\n";

  if (res.reduced) {
    const auto b = imaginary_pair_b(res.B);
    rep["b"] = b ? io::number(*b) : json(nullptr);
    if (b) sum << "b: " << fmt(*b, 17) << "\n";
    const auto conv = convergence_report(res.trace);
    if (conv.conclusive) sum << "convergence slope: " << fmt(conv.slope, 4) << "\n";
  }
  if (!res.trace.empty()) {
    const StepRecord& r0 = res.trace.front();
    if (!r0.eigenvalues.empty() && r0.K > 0) {
      const DivisorTable t = divisor_scan(r0.eigenvalues, cfg.omega, r0.K, r0.alpha,
                                          cfg.schedule.tau);
      out.artifacts.push_back(
          {"divisors_step0.csv", csv([&](std::ostream& os) { io::write_divisor_csv(os, t, cfg.omega.size()); })});
    }
  }
  if (res.reduced && cfg.Q.real_flag() && cfg.A.imag().cwiseAbs().maxCoeff() == 0.0) {
    const IntegratorConfig oc = oracle_config(cfg, opt);
    const FundamentalSolution sol = integrate_fundamental(cfg.A, cfg.Q, eps, oc);
    const QPMatrix psi = reduction_transformation(res, cfg.omega, cfg.n, cfg.schedule.rho);
    const double err = compare_with_reduction(sol, res, psi);
    rep["oracle"] = json{{"horizon", oc.horizon},
                         {"samples", oc.samples},
                         {"max_error", io::number(err)},
                         {"det_drift", io::number(sol.det_drift)},
                         {"symplectic_defect", io::number(sol.symplectic_defect)}};
    sum << "oracle max error: " << fmt(err, 3) << " over [0, " << fmt(oc.horizon) << "]\n";
    out.artifacts.push_back(
        {"solution.csv", csv([&](std::ostream& os) { write_solution_csv(os, sol); })});
  }
  out.artifacts.insert(out.artifacts.begin(), Artifact{"reduce_report.json", io::dump(rep)});
  out.exit_code = res.reduced ? 0 : 1;
  out.summary = sum.str();
  return out;
}

CommandResult cmd_sweep(const ProblemConfig& cfg, const RunOptions& opt) {
  if (!cfg.eps_range) throw ParseError("eps_range", "sweep needs eps_range");
  const SweepReport rep =
      sweep(cfg.A, cfg.Q, cfg.eps_range->eps0, cfg.eps_range->grid, cfg.schedule, opt.workers);
  CommandResult out;
  json summary{{"command", "sweep"}, {"schedule", io::to_json(cfg.schedule)}};
  summary["sweep"] = io::summary_json(rep);
  out.artifacts.push_back({"sweep.csv", csv([&](std::ostream& os) { write_sweep_csv(os, rep); })});
  out.artifacts.push_back({"sweep_summary.json", io::dump(summary)});
  std::ostringstream sum;
  sum << "eps0: " << fmt(rep.eps0) << "\n";
  sum << "grid: " << rep.outcomes.size() << "\n";
  sum << "success_fraction: " << fmt(rep.success_fraction, 4) << "\n";
  sum << "failure clusters: " << rep.clusters.size() << "\n";
  out.summary = sum.str();
  out.exit_code = rep.success_fraction > 0.0 ? 0 : 1;
  return out;
}

CommandResult cmd_hill(const ProblemConfig& cfg, const RunOptions& opt) {
  if (!cfg.hill) throw ParseError("hill", "hill command needs a Hill problem");
  std::vector<double> eps = cfg.eps_list;
  if (eps.empty() && cfg.eps) eps.push_back(*cfg.eps);
  if (eps.empty() && !cfg.fit) throw ParseError("eps", "hill needs eps, eps_list or fit");

  HillOptions ho;
  ho.oracle = oracle_config(cfg, opt);
  FrequencyOptions fo = cfg.frequency;
  fo.integrator = ho.oracle;

  CommandResult out;
  json rep{{"command", "hill"}, {"problem", problem_json(cfg)}};
  json verdicts = json::array();
  std::ostringstream table, sum;
  table << "eps,reduced,status,b,stable,steps,slope,cF1,final_residual,oracle_agreement,"
           "det_drift,orbit_bound,sqrt_b_over_sqrt_eps,frequency_pass\n";
  table.precision(17);
  bool all_reduced = true;
  for (double e : eps) {
    const HillVerdict v = run(*cfg.hill, e, cfg.schedule, ho);
    all_reduced = all_reduced && v.reduction.reduced;
    json vj = io::to_json(v);
    std::string fpass;
    if (cfg.frequency_enabled && v.reduction.reduced && v.stable && v.b) {
      const FrequencyReport fr = frequency_analysis(*cfg.hill, v, fo);
      vj["frequency"] = io::to_json(fr);
      fpass = fr.pass ? "1" : "0";
    }
    const auto conv = convergence_report(v.reduction.trace);
    const double final_res = v.reduction.trace.empty()
                                 ? 0.0
                                 : v.reduction.trace.back().residual_norm +
                                       v.reduction.trace.back().truncation_loss;
    table << e << "," << (v.reduction.reduced ? 1 : 0) << ","
          << (v.reduction.reduced ? "reduced" : to_string(v.reduction.failure)) << ",";
    if (v.b) table << *v.b;
    table << "," << (v.stable ? 1 : 0) << "," << v.reduction.trace.size() << ",";
    if (conv.conclusive) table << conv.slope;
    table << ",";
    if (conv.conclusive) table << conv.cF1;
    table << "," << final_res << ",";
    if (std::isfinite(v.oracle_agreement)) table << v.oracle_agreement;
    table << "," << v.det_drift << "," << v.orbit_bound << "," << v.sqrt_b_over_sqrt_eps << ","
          << fpass << "\n";
    sum << "eps " << fmt(e) << ": " << (v.reduction.reduced ? "reduced" : to_string(v.reduction.failure));
    if (v.b) sum << ", b = " << fmt(*v.b, 12);
    sum << ", " << (v.stable ? "stable" : "not stable");
    if (!fpass.empty()) sum << ", frequency " << (fpass == "1" ? "match" : "mismatch");
    sum << "\n";
    verdicts.push_back(std::move(vj));
  }
  rep["verdicts"] = std::move(verdicts);
  if (cfg.fit) {
    const auto grid = log_spaced(cfg.fit->lo, cfg.fit->hi, cfg.fit->count);
    const BFit f = b_scaling_fit(*cfg.hill, grid, cfg.schedule);
    rep["fit"] = io::to_json(f);
    sum << "b fit: slope " << fmt(f.slope, 10) << " (a_bar " << fmt(cfg.hill->a_bar(), 10)
        << "), C " << fmt(f.curvature) << ", residual ratio " << fmt(f.max_residual_ratio, 4)
        << "\n";
  }
  out.artifacts.push_back({"hill_report.json", io::dump(rep)});
  out.artifacts.push_back({"hill_verdicts.csv", table.str()});
  out.summary = sum.str();
  out.exit_code = all_reduced ? 0 : 1;
  return out;
}

CommandResult cmd_verify(const ProblemConfig& cfg, const RunOptions& opt) {
  const std::uint64_t seed = opt.seed.value_or(cfg.seed);
  const auto results = verify_suite(cfg, seed);
  CommandResult out;
  std::ostringstream sum;
  std::size_t width = 9;
  for (const auto& r : results) width = std::max(width, r.name.size());
  json items = json::array();
  bool ok = true;
  sum << "invariant" << std::string(width - 9 + 2, ' ') << "result  detail\n";
  for (const auto& r : results) {
    const char* verdict = r.skipped ? "SKIP" : (r.passed ? "PASS" : "FAIL");
    ok = ok && (r.skipped || r.passed);
    sum << r.name << std::string(width - r.name.size() + 2, ' ') << verdict
        << std::string(8 - std::char_traits<char>::length(verdict), ' ') << r.detail << "\n";
    items.push_back(json{{"name", r.name}, {"result", verdict}, {"detail", r.detail}});
  }
  json rep{{"command", "verify"}, {"seed", seed}, {"invariants", std::move(items)}, {"passed", ok}};
  out.artifacts.push_back({"verify_report.json", io::dump(rep)});
  out.summary = sum.str();
  out.exit_code = ok ? 0 : 1;
  return out;
}

void write_artifacts(const CommandResult& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& a : r.artifacts) {
    std::ofstream f(dir / a.name, std::ios::binary);
    if (!f) throw Error(ErrorKind::domain, "cannot write " + (dir / a.name).string());
    f << a.content;
  }
}

}  // namespace qpr
