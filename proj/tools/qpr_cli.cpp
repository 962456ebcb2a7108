// Copyright 2026 qpreduce contributors
// SPDX-License-Identifier: Apache-2.0
#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "qpr/qpr.h"

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct ConfigDeleter {
  void operator()(qpr_config* c) const { qpr_config_free(c); }
};
struct OutputDeleter {
  void operator()(qpr_output* o) const { qpr_output_free(o); }
};

int status_exit(qpr_status s) {
  switch (s) {
    case QPR_OK: return 0;
    case QPR_ERR_INVALID_ARGUMENT:
    case QPR_ERR_PARSE:
    case QPR_ERR_DOMAIN:
    case QPR_ERR_STRUCTURAL:
    case QPR_ERR_PRECONDITION: return kExitUsage;
    default: return kExitFailure;
  }
}

int report_error(qpr_status s) {
  std::cerr << "error (" << qpr_status_string(s) << "): " << qpr_last_error() << "\n";
  return status_exit(s);
}

struct Flags {
  std::string config;
  std::string out = "qpr_out";
  int workers = 1;
  std::optional<std::uint64_t> seed;
  std::optional<double> horizon;
};

int execute(qpr_command cmd, const Flags& f) {
  qpr_config* raw = nullptr;
  const qpr_status ls = f.config.empty() ? qpr_config_default(&raw)
                                         : qpr_config_load(f.config.c_str(), &raw);
  if (ls != QPR_OK) return report_error(ls);
  std::unique_ptr<qpr_config, ConfigDeleter> cfg(raw);

  qpr_run_options opt;
  qpr_run_options_init(&opt);
  opt.workers = f.workers;
  if (f.seed) {
    opt.has_seed = 1;
    opt.seed = *f.seed;
  }
  if (f.horizon) {
    opt.has_horizon = 1;
    opt.horizon = *f.horizon;
  }
  qpr_output* out_raw = nullptr;
  const qpr_status rs = qpr_run(cfg.get(), cmd, &opt, &out_raw);
  if (rs != QPR_OK) return report_error(rs);
  std::unique_ptr<qpr_output, OutputDeleter> out(out_raw);

  std::cout << qpr_output_summary(out.get());
  const qpr_status ws = qpr_output_write(out.get(), f.out.c_str());
  if (ws != QPR_OK) return report_error(ws);
  for (std::size_t i = 0; i < qpr_output_artifact_count(out.get()); ++i)
    std::cout << "wrote " << f.out << "/" << qpr_output_artifact_name(out.get(), i) << "\n";
  return qpr_output_exit_code(out.get());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reduction of quasi-periodic linear Hamiltonian systems to constant coefficients"};
  app.set_version_flag("--version", std::string(qpr_version()));
  app.require_subcommand(1);

  Flags flags;
  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* c = sub->add_option("--config", flags.config, "Problem configuration (JSON)")
                  ->check(CLI::ExistingFile);
    if (config_required) c->required();
    sub->add_option("--out", flags.out, "Output directory for reports")->capture_default_str();
  };

  auto* reduce = app.add_subcommand("reduce", "Reduce one system and validate against the ODE oracle");
  add_common(reduce, true);
  reduce->add_option("--horizon", flags.horizon, "Oracle comparison horizon T");

  auto* sweep = app.add_subcommand("sweep", "Run the reduction over an eps grid");
  add_common(sweep, true);
  sweep->add_option("--workers", flags.workers, "Worker threads (0: all cores)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();

  auto* hill = app.add_subcommand("hill", "Hill verdicts, b fit and frequency analysis");
  add_common(hill, true);
  hill->add_option("--horizon", flags.horizon, "Oracle comparison horizon T");

  auto* verify = app.add_subcommand("verify", "Run the invariant suite");
  add_common(verify, false);
  verify->add_option("--seed", flags.seed, "Random seed for the property checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    std::cerr << (subs.empty() ? app.help() : subs.front()->help());
    return kExitUsage;
  }

  if (reduce->parsed()) return execute(QPR_CMD_REDUCE, flags);
  if (sweep->parsed()) return execute(QPR_CMD_SWEEP, flags);
  if (hill->parsed()) return execute(QPR_CMD_HILL, flags);
  return execute(QPR_CMD_VERIFY, flags);
}
