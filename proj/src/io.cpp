// Copyright 2026 qpreduce contributors
// SPDX-License-Identifier: Apache-2.0
#include "qpr/io.hpp"

#include <charconv>
#include <cmath>
#include <numbers>
#include <ostream>

namespace qpr::io {

namespace {

std::string sub(std::string_view field, std::string_view key) {
  std::string s(field);
  if (!s.empty()) s += ".";
  s += key;
  return s;
}

std::string sub(std::string_view field, std::size_t idx) {
  return std::string(field) + "[" + std::to_string(idx) + "]";
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

double parse_plain(std::string_view text, std::string_view field) {
  const std::string t = trim(text);
  bool neg = false;
  std::string_view body = t;
  if (!body.empty() && body.front() == '-') {
    neg = true;
    body.remove_prefix(1);
  }
  double v = 0.0;
  if (body == "golden") v = std::numbers::phi;
  else if (body == "sqrt2") v = std::numbers::sqrt2;
  else if (body == "sqrt3") v = std::numbers::sqrt3;
  else if (body == "sqrt5") v = std::sqrt(5.0);
  else if (body == "pi") v = std::numbers::pi;
  else if (body == "e") v = std::numbers::e;
  else {
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
      throw ParseError(std::string(field), "not a number: '" + std::string(text) + "'");
    return v;
  }
  return neg ? -v : v;
}

json cvec(std::span<const cplx> v) {
  json out = json::array();
  for (const auto& z : v) out.push_back(json::array({number(z.real()), number(z.imag())}));
  return out;
}

json kvec(std::span<const int> k) { return json(std::vector<int>(k.begin(), k.end())); }

}  // namespace

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double parse_real_text(std::string_view text, std::string_view field) {
  const auto slash = text.find('/');
  double v = 0.0;
  if (slash == std::string_view::npos) {
    v = parse_plain(text, field);
  } else {
    const double p = parse_plain(text.substr(0, slash), field);
    const double q = parse_plain(text.substr(slash + 1), field);
    if (q == 0.0) throw ParseError(std::string(field), "zero denominator");
    v = p / q;
  }
  if (!std::isfinite(v)) throw ParseError(std::string(field), "value is not finite");
  return v;
}

double parse_real(const json& j, std::string_view field) {
  if (j.is_number()) {
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw ParseError(std::string(field), "value is not finite");
    return v;
  }
  if (j.is_string()) return parse_real_text(j.get<std::string>(), field);
  throw ParseError(std::string(field), "expected a number, a p/q string or a named constant");
}

json to_json(const CMat& m) {
  json re = json::array(), im = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json rr = json::array(), ri = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      rr.push_back(number(m(i, c).real()));
      ri.push_back(number(m(i, c).imag()));
    }
    re.push_back(std::move(rr));
    im.push_back(std::move(ri));
  }
  return json{{"re", std::move(re)}, {"im", std::move(im)}};
}

namespace {

RMat real_rows(const json& j, std::string_view field) {
  if (!j.is_array() || j.empty()) throw ParseError(std::string(field), "expected a non-empty array of rows");
  const std::size_t rows = j.size();
  std::size_t cols = 0;
  for (std::size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array() || j[i].empty())
      throw ParseError(sub(field, i), "expected a non-empty row");
    if (i == 0) cols = j[i].size();
    if (j[i].size() != cols) throw ParseError(sub(field, i), "ragged row");
  }
  RMat m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
          parse_real(j[i][c], sub(sub(field, i), c));
  return m;
}

}  // namespace

CMat matrix_from_json(const json& j, std::string_view field) {
  if (j.is_array()) {
    const RMat r = real_rows(j, field);
    if (r.rows() != r.cols()) throw ParseError(std::string(field), "matrix must be square");
    return r.cast<cplx>();
  }
  if (!j.is_object() || !j.contains("re"))
    throw ParseError(std::string(field), "expected a row array or an object with re/im");
  const RMat re = real_rows(j.at("re"), sub(field, "re"));
  RMat im = RMat::Zero(re.rows(), re.cols());
  if (j.contains("im")) {
    im = real_rows(j.at("im"), sub(field, "im"));
    if (im.rows() != re.rows() || im.cols() != re.cols())
      throw ParseError(sub(field, "im"), "shape differs from re");
  }
  if (re.rows() != re.cols()) throw ParseError(std::string(field), "matrix must be square");
  CMat m(re.rows(), re.cols());
  m.real() = re;
  m.imag() = im;
  return m;
}

json to_json(const FrequencyVector& omega) { return json(omega.values()); }

json to_json(const QPMatrix& m) {
  json coeffs = json::array();
  for (std::size_t p = 0; p < m.mode_count(); ++p) {
    if (m.mode_is_zero(p)) continue;
    json c = to_json(CMat(m.mode(p)));
    coeffs.push_back(json{{"k", kvec(m.ball().index(p))}, {"re", c["re"]}, {"im", c["im"]}});
  }
  return json{{"omega", to_json(m.omega())},
              {"n", m.dim()},
              {"rho", number(m.rho())},
              {"K", m.order()},
              {"real", m.real_flag()},
              {"tail", number(m.tail_allowance())},
              {"coeffs", std::move(coeffs)}};
}

QPMatrix qp_from_json(const json& j, std::string_view field) {
  if (!j.is_object()) throw ParseError(std::string(field), "expected an object");
  auto need = [&](const char* key) -> const json& {
    if (!j.contains(key)) throw ParseError(sub(field, key), "missing");
    return j.at(key);
  };
  const json& om = need("omega");
  if (!om.is_array() || om.empty())
    throw ParseError(sub(field, "omega"), "expected a non-empty array");
  std::vector<double> w;
  for (std::size_t i = 0; i < om.size(); ++i) w.push_back(parse_real(om[i], sub(sub(field, "omega"), i)));
  const double rho = parse_real(need("rho"), sub(field, "rho"));
  if (!(rho > 0.0)) throw ParseError(sub(field, "rho"), "must be positive");
  const json& cs = need("coeffs");
  if (!cs.is_array()) throw ParseError(sub(field, "coeffs"), "expected an array");

  int n = j.contains("n") ? j.at("n").get<int>() : 0;
  int K = 0;
  for (std::size_t c = 0; c < cs.size(); ++c) {
    const std::string f = sub(sub(field, "coeffs"), c);
    if (!cs[c].contains("k") || !cs[c]["k"].is_array())
      throw ParseError(sub(f, "k"), "expected an integer array");
    const auto k = cs[c]["k"].get<std::vector<int>>();
    if (k.size() != w.size()) throw ParseError(sub(f, "k"), "length differs from omega");
    K = std::max(K, index_order(k));
  }
  if (j.contains("K")) {
    const int declared = j.at("K").get<int>();
    if (declared < K) throw ParseError(sub(field, "K"), "smaller than the largest |k| present");
    K = declared;
  }
  std::vector<CMat> mats;
  for (std::size_t c = 0; c < cs.size(); ++c) {
    const std::string f = sub(sub(field, "coeffs"), c);
    CMat m = matrix_from_json(cs[c], f);
    if (n == 0) n = static_cast<int>(m.rows());
    if (m.rows() != n) throw ParseError(f, "dimension differs from n");
    mats.push_back(std::move(m));
  }
  if (n <= 0) throw ParseError(sub(field, "n"), "missing or not positive");

  QPMatrix q(FrequencyVector(std::move(w)), n, rho, K);
  for (std::size_t c = 0; c < cs.size(); ++c) {
    const auto k = cs[c]["k"].get<std::vector<int>>();
    q.set_coeff(k, q.coeff(k) + mats[c]);
  }
  if (j.contains("real")) q.set_real_flag(j.at("real").get<bool>());
  if (j.contains("tail") && !j.at("tail").is_null()) q.set_tail(parse_real(j.at("tail"), sub(field, "tail")));
  return q;
}

json to_json(const KamSchedule& s) {
  return json{{"alpha", s.alpha},
              {"tau", s.tau},
              {"rho", s.rho},
              {"delta", s.delta},
              {"max_steps", s.max_steps},
              {"target_residual", s.target_residual},
              {"K_increment", s.k_growth.increment},
              {"K_cap", s.k_growth.cap},
              {"tol_sym", s.tol.sym},
              {"tol_diag", s.tol.diag},
              {"tol_exp", s.tol.exp},
              {"drop_tol", s.drop_tol},
              {"form", to_string(s.form)}};
}

json to_json(const StepRecord& r) {
  json j{{"m", r.m},
         {"status", to_string(r.status)},
         {"h", number(r.h)},
         {"K", r.K},
         {"rho", number(r.rho)},
         {"s", number(r.s)},
         {"alpha", number(r.alpha)},
         {"residual_norm", number(r.residual_norm)},
         {"truncation_loss", number(r.truncation_loss)},
         {"F", number(r.F)},
         {"P_norm", number(r.P_norm)},
         {"beta", number(r.beta)},
         {"divisor_min", number(r.divisor_min)},
         {"min_abs", number(r.min_abs)},
         {"min_gap", number(r.min_gap)},
         {"floor", number(r.floor)},
         {"drift", number(r.drift)},
         {"gate", json{{"evaluated", r.gate_evaluated},
                       {"passed", r.gate_passed},
                       {"threshold", number(r.gate_threshold)}}},
         {"measured_constant", number(r.measured_constant)},
         {"P_hamiltonian_defect", number(r.P_hamiltonian_defect)},
         {"exp_terms", r.exp_terms},
         {"eigenvalues", cvec(r.eigenvalues)},
         {"A", to_json(r.A)}};
  if (r.A_next.size() > 0) j["A_next"] = to_json(r.A_next);
  if (!r.message.empty()) j["message"] = r.message;
  if (!r.worst_k.empty()) j["worst_k"] = r.worst_k;
  return j;
}

json to_json(const ConvergenceReport& c) {
  return json{{"conclusive", c.conclusive},
              {"slope", number(c.slope)},
              {"cF1", number(c.cF1)},
              {"points", c.points}};
}

json to_json(const ReductionResult& r) {
  json j{{"status", r.reduced ? "reduced" : to_string(r.failure)},
         {"reduced", r.reduced},
         {"eps", number(r.eps)},
         {"target_residual", number(r.target_residual)},
         {"failed_step", r.failed_step}};
  if (!r.reason.empty()) j["reason"] = r.reason;
  if (r.B.size() > 0) {
    j["B"] = to_json(r.B);
    try {
      j["B_eigenvalues"] = cvec(eigen_decompose(r.B).values);
    } catch (const Error&) {
      j["B_eigenvalues"] = nullptr;
    }
  }
  j["convergence"] = to_json(convergence_report(r.trace));
  json trace = json::array();
  for (const auto& s : r.trace) trace.push_back(to_json(s));
  j["trace"] = std::move(trace);
  json factors = json::array();
  for (const auto& f : r.factors) factors.push_back(json{{"h", number(f.h)}, {"P", to_json(f.P)}});
  j["factors"] = std::move(factors);
  j["psi_truncation"] = r.psi_truncation;
  return j;
}

json to_json(const DiophantineCheck& c) {
  return json{{"pass", c.pass},
              {"min_ratio", number(c.min_ratio)},
              {"entries", c.entries},
              {"worst", json{{"k", c.worst.k},
                             {"i", c.worst.i},
                             {"j", c.worst.j},
                             {"modulus", number(c.worst.modulus)},
                             {"threshold", number(c.worst.threshold)}}}};
}

json to_json(const HillVerdict& v) {
  json j{{"eps", number(v.eps)},
         {"out_of_domain", v.out_of_domain},
         {"assumption_A", v.assumption_A},
         {"b", v.b ? number(*v.b) : json(nullptr)},
         {"stable", v.stable},
         {"oracle_agreement", number(v.oracle_agreement)},
         {"det_drift", number(v.det_drift)},
         {"orbit_bound", number(v.orbit_bound)},
         {"sqrt_b_over_sqrt_eps", number(v.sqrt_b_over_sqrt_eps)}};
  j["reduction"] = to_json(v.reduction);
  return j;
}

json to_json(const BFit& f) {
  return json{{"conclusive", f.conclusive},
              {"successes", f.successes},
              {"slope", number(f.slope)},
              {"curvature", number(f.curvature)},
              {"max_residual", number(f.max_residual)},
              {"max_residual_ratio", number(f.max_residual_ratio)},
              {"eps", f.eps},
              {"b", f.b}};
}

json to_json(const FrequencyReport& f) {
  json peaks = json::array();
  for (const auto& p : f.peaks) peaks.push_back(json{{"frequency", number(p.frequency)}, {"amplitude", number(p.amplitude)}});
  return json{{"pass", f.pass},
              {"sqrt_b", number(f.sqrt_b)},
              {"rotation", number(f.rotation)},
              {"zero_crossing", number(f.zero_crossing)},
              {"spectral_peak", number(f.spectral_peak)},
              {"rotation_rel_error", number(f.rotation_rel_error)},
              {"zero_crossing_rel_error", number(f.zero_crossing_rel_error)},
              {"spectral_rel_error", number(f.spectral_rel_error)},
              {"bin_width", number(f.bin_width)},
              {"orbit_ratio", number(f.orbit_ratio)},
              {"peaks", std::move(peaks)},
              {"extended", to_json(f.extended)},
              {"extended_mixed", to_json(f.extended_mixed)}};
}

json summary_json(const SweepReport& rep) {
  json clusters = json::array();
  for (const auto& c : rep.clusters)
    clusters.push_back(json{{"eps_lo", number(c.eps_lo)},
                            {"eps_hi", number(c.eps_hi)},
                            {"grid_points", c.grid_points},
                            {"k", c.k},
                            {"failure", to_string(c.failure)}});
  std::size_t reduced = 0;
  for (const auto& o : rep.outcomes) reduced += o.reduced ? 1 : 0;
  return json{{"eps0", number(rep.eps0)},
              {"grid", rep.outcomes.size()},
              {"reduced", reduced},
              {"success_fraction", number(rep.success_fraction)},
              {"clusters", std::move(clusters)}};
}

void write_divisor_csv(std::ostream& os, const DivisorTable& table, int rank) {
  for (int c = 0; c < rank; ++c) os << "k" << c << ",";
  os << "i,j,re_d,im_d,threshold,flagged\n";
  const auto old = os.precision(17);
  for (const auto& e : table.entries) {
    for (int c = 0; c < rank; ++c) os << e.k[static_cast<std::size_t>(c)] << ",";
    os << e.i << "," << e.j << "," << e.d.real() << "," << e.d.imag() << "," << e.threshold
       << "," << (e.flagged ? 1 : 0) << "\n";
  }
  os.precision(old);
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace qpr::io
