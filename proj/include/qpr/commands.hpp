// Copyright 2026 qpreduce contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qpr/config.hpp"

namespace qpr {

struct RunOptions {
  int workers = 1;
  std::optional<std::uint64_t> seed;
  std::optional<double> horizon;  // oracle conjugacy horizon
};

struct Artifact {
  std::string name;  // file name relative to the output directory
  std::string content;
};

struct CommandResult {
  int exit_code = 0;     // 0 success, 1 failure of the computation
  std::string summary;   // human-readable lines for stdout
  std::vector<Artifact> artifacts;
};

/// Single eps; reduction plus oracle comparison. Exit 0 iff reduced.
CommandResult cmd_reduce(const ProblemConfig& cfg, const RunOptions& opt);
/// eps_range required. Exit 1 only when no grid point reduces.
CommandResult cmd_sweep(const ProblemConfig& cfg, const RunOptions& opt);
/// Hill verdicts for eps_list (or eps), optional b fit, frequency analysis on
/// stable verdicts. Exit 0 iff every verdict reduced.
CommandResult cmd_hill(const ProblemConfig& cfg, const RunOptions& opt);

struct InvariantResult {
  std::string name;
  bool passed = false;
  bool skipped = false;
  std::string detail;
};

/// Property and invariant suite over random instances drawn from the seed and
/// over the configured fixture.
std::vector<InvariantResult> verify_suite(const ProblemConfig& cfg, std::uint64_t seed);
/// Exit 1 on any failed invariant.
CommandResult cmd_verify(const ProblemConfig& cfg, const RunOptions& opt);

void write_artifacts(const CommandResult& r, const std::filesystem::path& dir);

}  // namespace qpr
