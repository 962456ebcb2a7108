// Copyright 2026 qpreduce contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Problem configuration documents (JSON). A document describes either a
// general system (A, Q) or a Hill problem (scalar a(t)); the latter also
// supplies A and Q through build_system.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qpr/hill.hpp"
#include "qpr/kam.hpp"
#include "qpr/oracle.hpp"

namespace qpr {

struct EpsRange {
  double eps0 = 0.0;
  int grid = 200;
};

struct FitRange {
  double lo = 1e-4;
  double hi = 1e-2;
  int count = 10;
};

struct ProblemConfig {
  std::string mode;  // informational; the command decides what runs
  FrequencyVector omega;
  int n = 0;
  CMat A;
  QPMatrix Q;
  std::optional<HillProblem> hill;
  std::optional<double> eps;
  std::optional<EpsRange> eps_range;
  std::vector<double> eps_list;
  std::optional<FitRange> fit;
  KamSchedule schedule;
  IntegratorConfig oracle;
  FrequencyOptions frequency;
  bool frequency_enabled = true;
  std::uint64_t seed = 1;
};

/// Throws ParseError naming the offending field. JSON syntax errors report
/// the line and column.
ProblemConfig parse_config(std::string_view text);
ProblemConfig load_config(const std::filesystem::path& path);

/// Built-in fixture: Hill with a(t) = 1 + cos(t)/2 + cos(golden t)/2, eps = 1e-3.
ProblemConfig default_config();

}  // namespace qpr
