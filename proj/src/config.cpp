// Copyright 2026 qpreduce contributors
// SPDX-License-Identifier: Apache-2.0
#include "qpr/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "qpr/io.hpp"

namespace qpr {

namespace {

using io::json;

const std::vector<std::string> kKnownKeys = {
    "mode", "omega", "rho", "eps", "eps_range", "eps_list", "fit", "alpha", "tau",
    "delta", "schedule", "n", "A", "Q", "hill", "seed", "oracle", "frequency", "real"};

double real_at(const json& doc, const char* key, double fallback) {
  return doc.contains(key) ? io::parse_real(doc.at(key), key) : fallback;
}

int int_at(const json& obj, const char* key, int fallback, const std::string& field) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) throw ParseError(field, "expected an integer");
  return v.get<int>();
}

double positive(double v, const std::string& field) {
  if (!(v > 0.0)) throw ParseError(field, "must be positive");
  return v;
}

void parse_schedule(const json& s, KamSchedule& sched) {
  if (!s.is_object()) throw ParseError("schedule", "expected an object");
  for (const auto& [key, _] : s.items()) {
    static const std::vector<std::string> known = {"max_steps", "K_cap", "K_increment",
                                                   "target_residual", "tol_sym", "tol_diag",
                                                   "tol_exp", "drop_tol", "form"};
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ParseError("schedule." + key, "unknown field");
  }
  sched.max_steps = int_at(s, "max_steps", sched.max_steps, "schedule.max_steps");
  if (sched.max_steps < 1) throw ParseError("schedule.max_steps", "must be >= 1");
  sched.k_growth.cap = int_at(s, "K_cap", sched.k_growth.cap, "schedule.K_cap");
  sched.k_growth.increment = int_at(s, "K_increment", sched.k_growth.cap, "schedule.K_increment");
  if (sched.k_growth.cap < 1 || sched.k_growth.increment < 1)
    throw ParseError("schedule.K_cap", "K_cap and K_increment must be >= 1");
  if (s.contains("target_residual"))
    sched.target_residual = io::parse_real(s.at("target_residual"), "schedule.target_residual");
  if (s.contains("tol_sym"))
    sched.tol.sym = positive(io::parse_real(s.at("tol_sym"), "schedule.tol_sym"), "schedule.tol_sym");
  if (s.contains("tol_diag"))
    sched.tol.diag = positive(io::parse_real(s.at("tol_diag"), "schedule.tol_diag"), "schedule.tol_diag");
  if (s.contains("tol_exp"))
    sched.tol.exp = positive(io::parse_real(s.at("tol_exp"), "schedule.tol_exp"), "schedule.tol_exp");
  if (s.contains("drop_tol"))
    sched.drop_tol = io::parse_real(s.at("drop_tol"), "schedule.drop_tol");
  if (s.contains("form")) {
    const auto f = s.at("form").is_string() ? s.at("form").get<std::string>() : std::string();
    if (f == "exact") sched.form = AssemblyForm::exact;
    else if (f == "paper_five_term") sched.form = AssemblyForm::paper_five_term;
    else throw ParseError("schedule.form", "expected \"exact\" or \"paper_five_term\"");
  }
}

HillProblem parse_hill(const json& h, const FrequencyVector& omega, double rho) {
  if (!h.is_object()) throw ParseError("hill", "expected an object");
  try {
    if (h.contains("a")) {
      json a = h.at("a");
      a["omega"] = omega.values();
      a["rho"] = rho;
      a["n"] = 1;
      QPMatrix q = io::qp_from_json(a, "hill.a");
      return HillProblem(std::move(q));
    }
    if (!h.contains("mean")) throw ParseError("hill.mean", "missing (or give hill.a)");
    const double mean = io::parse_real(h.at("mean"), "hill.mean");
    std::vector<HillProblem::Term> terms;
    if (h.contains("terms")) {
      const json& ts = h.at("terms");
      if (!ts.is_array()) throw ParseError("hill.terms", "expected an array");
      for (std::size_t i = 0; i < ts.size(); ++i) {
        const std::string f = "hill.terms[" + std::to_string(i) + "]";
        if (!ts[i].contains("k") || !ts[i]["k"].is_array())
          throw ParseError(f + ".k", "expected an integer array");
        HillProblem::Term t;
        t.k = ts[i]["k"].get<std::vector<int>>();
        if (static_cast<int>(t.k.size()) != omega.size())
          throw ParseError(f + ".k", "length differs from omega");
        if (index_order(t.k) == 0) throw ParseError(f + ".k", "zero index; use hill.mean");
        if (ts[i].contains("cos")) t.cos = io::parse_real(ts[i]["cos"], f + ".cos");
        if (ts[i].contains("sin")) t.sin = io::parse_real(ts[i]["sin"], f + ".sin");
        terms.push_back(std::move(t));
      }
    }
    if (!(mean > 0.0))
      throw ParseError("hill.mean",
                       "the average of a(t) must be positive for the Hill reduction, got " +
                           std::to_string(mean));
    return HillProblem::from_terms(omega, mean, terms, rho);
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError("hill", e.what());
  }
}

ProblemConfig parse_document(const json& doc) {
  if (!doc.is_object()) throw ParseError("<root>", "expected an object");
  for (const auto& [key, _] : doc.items())
    if (std::find(kKnownKeys.begin(), kKnownKeys.end(), key) == kKnownKeys.end())
      throw ParseError(key, "unknown field");

  ProblemConfig cfg;
  if (doc.contains("mode")) {
    if (!doc.at("mode").is_string()) throw ParseError("mode", "expected a string");
    cfg.mode = doc.at("mode").get<std::string>();
    if (cfg.mode != "reduce" && cfg.mode != "sweep" && cfg.mode != "hill" && cfg.mode != "verify")
      throw ParseError("mode", "expected reduce, sweep, hill or verify");
  }

  if (!doc.contains("omega")) throw ParseError("omega", "missing");
  const json& om = doc.at("omega");
  if (!om.is_array() || om.empty()) throw ParseError("omega", "expected a non-empty array");
  std::vector<double> w;
  for (std::size_t i = 0; i < om.size(); ++i)
    w.push_back(io::parse_real(om[i], "omega[" + std::to_string(i) + "]"));
  cfg.omega = FrequencyVector(std::move(w));
  const int r = cfg.omega.size();

  KamSchedule& s = cfg.schedule;
  s.rho = real_at(doc, "rho", s.rho);
  if (!(s.rho > 0.0)) throw ParseError("rho", "must be positive");
  s.alpha = real_at(doc, "alpha", s.alpha);
  if (!(s.alpha > 0.0)) throw ParseError("alpha", "must be positive");
  s.tau = real_at(doc, "tau", s.tau);
  if (!(s.tau > r - 1))
    throw ParseError("tau", "must exceed r - 1 = " + std::to_string(r - 1));
  if (doc.contains("schedule")) parse_schedule(doc.at("schedule"), s);

  const bool real = doc.contains("real") ? doc.at("real").get<bool>() : true;

  if (doc.contains("hill")) {
    if (doc.contains("A") || doc.contains("Q"))
      throw ParseError("hill", "give either hill or A/Q, not both");
    cfg.hill = parse_hill(doc.at("hill"), cfg.omega, s.rho);
    const HillSystem sys = build_system(*cfg.hill);
    cfg.A = sys.A;
    cfg.Q = sys.Q;
    s.delta = cfg.hill->natural_delta();
  } else {
    if (!doc.contains("A")) throw ParseError("A", "missing (or give hill)");
    cfg.A = io::matrix_from_json(doc.at("A"), "A");
    if (doc.contains("Q")) {
      json q = doc.at("Q");
      if (!q.is_object()) throw ParseError("Q", "expected an object with coeffs");
      q["omega"] = cfg.omega.values();
      q["rho"] = s.rho;
      q["n"] = cfg.A.rows();
      cfg.Q = io::qp_from_json(q, "Q");
    } else {
      cfg.Q = QPMatrix(cfg.omega, static_cast<int>(cfg.A.rows()), s.rho, 0);
    }
    if (real) {
      if (cfg.A.imag().cwiseAbs().maxCoeff() > 0.0) throw ParseError("A", "real system needs a real matrix");
      const double scale = std::max(1.0, cfg.Q.max_abs());
      if (cfg.Q.conjugate_asymmetry() > 1e-14 * scale)
        throw ParseError("Q", "coefficients are not conjugate-symmetric (Q_{-k} != conj(Q_k))");
      cfg.Q.enforce_real();
      cfg.Q.set_real_flag(true);
    }
  }
  cfg.n = static_cast<int>(cfg.A.rows());
  if (cfg.n % 2 != 0) throw ParseError("A", "dimension must be even");
  if (doc.contains("n") && int_at(doc, "n", 0, "n") != cfg.n)
    throw ParseError("n", "does not match the matrix dimension");
  if (doc.contains("delta")) s.delta = positive(io::parse_real(doc.at("delta"), "delta"), "delta");

  if (doc.contains("eps")) cfg.eps = positive(io::parse_real(doc.at("eps"), "eps"), "eps");
  if (doc.contains("eps_range")) {
    const json& e = doc.at("eps_range");
    if (!e.is_object() || !e.contains("eps0")) throw ParseError("eps_range.eps0", "missing");
    EpsRange rng;
    rng.eps0 = positive(io::parse_real(e.at("eps0"), "eps_range.eps0"), "eps_range.eps0");
    rng.grid = int_at(e, "grid", rng.grid, "eps_range.grid");
    if (rng.grid < 10) throw ParseError("eps_range.grid", "needs at least 10 points");
    cfg.eps_range = rng;
  }
  if (doc.contains("eps_list")) {
    const json& e = doc.at("eps_list");
    if (!e.is_array()) throw ParseError("eps_list", "expected an array");
    for (std::size_t i = 0; i < e.size(); ++i) {
      const std::string f = "eps_list[" + std::to_string(i) + "]";
      cfg.eps_list.push_back(positive(io::parse_real(e[i], f), f));
    }
  }
  if (doc.contains("fit")) {
    const json& f = doc.at("fit");
    if (!f.is_object()) throw ParseError("fit", "expected an object");
    FitRange fr;
    if (f.contains("lo")) fr.lo = positive(io::parse_real(f.at("lo"), "fit.lo"), "fit.lo");
    if (f.contains("hi")) fr.hi = positive(io::parse_real(f.at("hi"), "fit.hi"), "fit.hi");
    fr.count = int_at(f, "count", fr.count, "fit.count");
    if (!(fr.hi > fr.lo)) throw ParseError("fit.hi", "must exceed fit.lo");
    if (fr.count < 5) throw ParseError("fit.count", "needs at least 5 points");
    cfg.fit = fr;
  }
  if (doc.contains("seed")) {
    const json& sd = doc.at("seed");
    if (!sd.is_number_unsigned()) throw ParseError("seed", "expected a non-negative integer");
    cfg.seed = sd.get<std::uint64_t>();
  }
  if (doc.contains("oracle")) {
    const json& o = doc.at("oracle");
    if (!o.is_object()) throw ParseError("oracle", "expected an object");
    if (o.contains("horizon"))
      cfg.oracle.horizon = positive(io::parse_real(o.at("horizon"), "oracle.horizon"), "oracle.horizon");
    cfg.oracle.samples = int_at(o, "samples", cfg.oracle.samples, "oracle.samples");
    if (cfg.oracle.samples < 2) throw ParseError("oracle.samples", "needs at least 2");
    if (o.contains("tol")) {
      const double t = positive(io::parse_real(o.at("tol"), "oracle.tol"), "oracle.tol");
      cfg.oracle.abs_tol = cfg.oracle.rel_tol = t;
    }
  }
  cfg.frequency.integrator = cfg.oracle;
  if (doc.contains("frequency")) {
    const json& f = doc.at("frequency");
    if (!f.is_object()) throw ParseError("frequency", "expected an object");
    if (f.contains("enabled")) cfg.frequency_enabled = f.at("enabled").get<bool>();
    if (f.contains("horizon"))
      cfg.frequency.horizon = positive(io::parse_real(f.at("horizon"), "frequency.horizon"), "frequency.horizon");
    if (f.contains("dt"))
      cfg.frequency.dt = positive(io::parse_real(f.at("dt"), "frequency.dt"), "frequency.dt");
    if (f.contains("rel_tol"))
      cfg.frequency.rel_tol = positive(io::parse_real(f.at("rel_tol"), "frequency.rel_tol"), "frequency.rel_tol");
    cfg.frequency.extended.K_check = int_at(f, "K_check", cfg.frequency.extended.K_check, "frequency.K_check");
  }
  cfg.frequency.extended.alpha = s.alpha;
  cfg.frequency.extended.tau = s.tau;
  return cfg;
}

}  // namespace

ProblemConfig parse_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError("<document>", e.what());
  }
  try {
    return parse_document(doc);
  } catch (const json::exception& e) {
    throw ParseError("<document>", e.what());
  }
}

ProblemConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("--config", "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

ProblemConfig default_config() {
  return parse_config(R"({
    "mode": "verify",
    "omega": [1, "golden"],
    "rho": 1,
    "eps": 0.001,
    "hill": {"mean": 1, "terms": [{"k": [1, 0], "cos": "1/2"}, {"k": [0, 1], "cos": "1/2"}]}
  })");
}

}  // namespace qpr
