// Copyright 2026 qpreduce contributors
// SPDX-License-Identifier: Apache-2.0
#include <sstream>

#include "doctest.h"
#include "qpr/config.hpp"
#include "qpr/io.hpp"
#include "support.hpp"

using namespace qpr;
using namespace qpr::testing;
using qpr::io::json;

namespace {

const FrequencyVector kGolden({1.0, std::numbers::phi});

// Parses `text` and returns the field named by the parse error, or "" on success.
std::string error_field(const std::string& text) {
  try {
    (void)parse_config(text);
  } catch (const ParseError& e) {
    return e.field();
  }
  return "";
}

const char* kMinimal = R"({"omega": [1, "golden"], "A": [[0, 1], [-1, 0]]})";

}  // namespace

TEST_CASE("real numbers in text form") {
  CHECK(io::parse_real_text("0.25", "x") == 0.25);
  CHECK(io::parse_real_text("1/2", "x") == 0.5);
  CHECK(io::parse_real_text("-3/4", "x") == -0.75);
  CHECK(io::parse_real_text("golden", "x") == std::numbers::phi);
  CHECK(io::parse_real_text("sqrt2", "x") == std::sqrt(2.0));
  CHECK(io::parse_real_text("-pi", "x") == -std::numbers::pi);
  CHECK(io::parse_real(json(1e-3), "x") == 1e-3);
  CHECK(io::parse_real(json("sqrt5"), "x") == std::sqrt(5.0));
  for (const char* bad : {"gold", "1/0", "", "1/", "2x", "--1"}) {
    try {
      (void)io::parse_real_text(bad, "omega[1]");
      FAIL("expected a parse error for " << bad);
    } catch (const ParseError& e) {
      CHECK(e.field() == "omega[1]");
    }
  }
  CHECK(io::number(std::nan("")).is_null());
}

TEST_CASE("quasi-periodic matrices round-trip bit for bit") {
  Rng g(71);
  for (int trial = 0; trial < 5; ++trial) {
    const QPMatrix m = random_hamiltonian_series(kGolden, 4, 3, 0.8, g);
    const json back = json::parse(io::dump(io::to_json(m)));
    const QPMatrix r = io::qp_from_json(back, "Q");
    REQUIRE(r.mode_count() == m.mode_count());
    CHECK(r.order() == m.order());
    CHECK(r.rho() == m.rho());
    CHECK(r.omega()[1] == m.omega()[1]);
    CHECK(r.real_flag() == m.real_flag());
    for (std::size_t p = 0; p < m.mode_count(); ++p) CHECK(r.coeff_at(p) == m.coeff_at(p));
  }
}

TEST_CASE("declared truncation order must cover the stored modes") {
  json j = json::parse(R"({"omega": [1], "n": 2, "rho": 1, "K": 1,
    "coeffs": [{"k": [2], "re": [[0, 0], [1, 0]]}]})");
  CHECK_THROWS_AS((void)io::qp_from_json(j, "Q"), ParseError);
  j["K"] = 2;
  CHECK(io::qp_from_json(j, "Q").order() == 2);
}

TEST_CASE("matrices accept rows or separate real and imaginary parts") {
  const CMat a = io::matrix_from_json(json::parse("[[1, 2], [3, 4]]"), "A");
  CHECK(a(1, 0) == cplx(3.0));
  const CMat b = io::matrix_from_json(json::parse(R"({"re": [[1, 0], [0, 1]], "im": [[0, 1], [-1, 0]]})"), "A");
  CHECK(b(0, 1) == cplx(0.0, 1.0));
  try {
    (void)io::matrix_from_json(json::parse("[[1, 2, 3], [4, 5, 6]]"), "A");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.field() == "A");
  }
}

TEST_CASE("minimal and bundled configurations parse") {
  const auto cfg = parse_config(kMinimal);
  CHECK(cfg.n == 2);
  CHECK(cfg.omega.size() == 2);
  CHECK(cfg.Q.is_zero());

  for (const char* name : {"hill_golden.json", "sweep_hill.json", "zero_q.json", "autonomous.json",
                           "general_4d.json", "non_hamiltonian.json"}) {
    CAPTURE(name);
    CHECK_NOTHROW((void)load_config(std::string(QPR_CONFIG_DIR) + "/" + name));
  }
  const auto hill = load_config(std::string(QPR_CONFIG_DIR) + "/hill_golden.json");
  REQUIRE(hill.hill.has_value());
  CHECK(hill.hill->a_bar() == 1.0);
  CHECK(hill.schedule.delta == hill.hill->natural_delta());
  CHECK(hill.omega[1] == std::numbers::phi);
  CHECK(hill.eps_list.size() == 5);
}

TEST_CASE("configuration errors name the offending field") {
  CHECK(error_field(R"({"omega": [1, "gold"], "A": [[0, 1], [-1, 0]]})") == "omega[1]");
  CHECK(error_field(R"({"omega": [1, 2], "tau": 0.5, "A": [[0, 1], [-1, 0]]})") == "tau");
  CHECK(error_field(R"({"omega": [1], "rho": -1, "A": [[0, 1], [-1, 0]]})") == "rho");
  CHECK(error_field(R"({"omega": [1], "A": [[0, 1, 0], [-1, 0, 0], [0, 0, 0]]})") == "A");
  CHECK(error_field(R"({"omega": [1], "A": [[0, 1], [-1, 0]], "colour": 1})") == "colour");
  CHECK(error_field(R"({"omega": [1], "A": [[0, 1], [-1, 0]], "schedule": {"K_cap": 0}})") ==
        "schedule.K_cap");
  CHECK(error_field(R"({"omega": [1], "A": [[0, 1], [-1, 0]],
    "Q": {"coeffs": [{"k": [1], "re": [[0, 0], [1, 0]]}]}})") == "Q");
  CHECK(error_field(R"({"omega": [1], "hill": {"mean": -1}})") == "hill.mean");
  CHECK(error_field(R"({"omega": [1], "A": [[0, 1], [-1, 0]], "eps_range": {"eps0": 1e-3, "grid": 5}})") ==
        "eps_range.grid");
  CHECK(error_field(R"({"omega": [1], "A": )") == "<document>");
  CHECK(error_field(kMinimal).empty());

  try {
    (void)load_config(std::string(QPR_CONFIG_DIR) + "/negative_mean.json");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("positive") != std::string::npos);
  }
  CHECK_THROWS_AS((void)load_config("/nonexistent/config.json"), ParseError);
}

TEST_CASE("default configuration is the golden Hill problem") {
  const auto cfg = default_config();
  REQUIRE(cfg.hill.has_value());
  CHECK(cfg.eps == 1e-3);
  CHECK(cfg.omega[1] == std::numbers::phi);
}

TEST_CASE("divisor CSV has one row per table entry") {
  const std::vector<cplx> vals{cplx(0, 0.1), cplx(0, -0.1)};
  const auto t = divisor_scan(vals, kGolden, 2, 0.1, 1.0);
  std::ostringstream os;
  io::write_divisor_csv(os, t, 2);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "k0,k1,i,j,re_d,im_d,threshold,flagged");
  std::size_t rows = 0;
  while (std::getline(is, line)) ++rows;
  CHECK(rows == t.entries.size());
}

TEST_CASE("reduction report carries stable field names") {
  const auto cfg = load_config(std::string(QPR_CONFIG_DIR) + "/hill_golden.json");
  const auto res = reduce(cfg.A, cfg.Q, 1e-3, cfg.schedule);
  const json j = io::to_json(res);
  for (const char* key : {"status", "B", "B_eigenvalues", "convergence", "trace", "factors", "psi_truncation"})
    CHECK(j.contains(key));
  CHECK(j["status"] == "reduced");
  REQUIRE(j["trace"].is_array());
  const json& rec = j["trace"][0];
  for (const char* key : {"m", "h", "K", "residual_norm", "truncation_loss", "F", "status"})
    CHECK(rec.contains(key));
  const json sched = io::to_json(cfg.schedule);
  CHECK(sched.contains("alpha"));
  CHECK(sched.contains("tau"));
}
