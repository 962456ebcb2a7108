// Copyright 2026 qpreduce contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// JSON and CSV serialization of engine objects. Doubles are written in their
// shortest round-trip form, so QPMatrix documents reload bit for bit.

#include <iosfwd>
#include <string>
#include <string_view>

#include "json.hpp"
#include "qpr/diophantine.hpp"
#include "qpr/hill.hpp"
#include "qpr/homological.hpp"
#include "qpr/kam.hpp"

namespace qpr::io {

using json = nlohmann::ordered_json;

/// Non-finite values become null.
json number(double v);

/// A JSON number, a "p/q" string, or a named constant (golden, sqrt2, sqrt3,
/// sqrt5, pi, e) with an optional leading '-'.
double parse_real(const json& j, std::string_view field);
double parse_real_text(std::string_view text, std::string_view field);

json to_json(const CMat& m);
/// Accepts {"re": rows, "im": rows} or a plain real row array. `field` names
/// the location for parse errors.
CMat matrix_from_json(const json& j, std::string_view field);

json to_json(const FrequencyVector& omega);

/// {omega, n, rho, K, real, tail, coeffs: [{k, re, im}]}, zero modes omitted.
json to_json(const QPMatrix& m);
QPMatrix qp_from_json(const json& j, std::string_view field);

json to_json(const KamSchedule& s);
json to_json(const StepRecord& r);
json to_json(const ConvergenceReport& c);
json to_json(const ReductionResult& r);
json to_json(const DiophantineCheck& c);
json to_json(const HillVerdict& v);
json to_json(const BFit& f);
json to_json(const FrequencyReport& f);
/// Summary only; per-point outcomes go to CSV.
json summary_json(const SweepReport& rep);

/// Columns k0..k{r-1}, i, j, re_d, im_d, threshold, flagged.
void write_divisor_csv(std::ostream& os, const DivisorTable& table, int rank);

/// Two-space indented dump with a trailing newline.
std::string dump(const json& j);

}  // namespace qpr::io
