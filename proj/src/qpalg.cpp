// Copyright 2026 qpreduce contributors
// SPDX-License-Identifier: Apache-2.0
#include "qpr/qpalg.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <utility>

namespace qpr {

FrequencyVector::FrequencyVector(std::vector<double> omega)
    : omega_(std::move(omega)) {
  if (omega_.empty())
    throw Error(ErrorKind::domain, "frequency vector must have r >= 1 entries");
  for (double w : omega_)
    if (!std::isfinite(w))
      throw Error(ErrorKind::domain, "frequency vector entries must be finite");
}

double FrequencyVector::dot(std::span<const int> k) const {
  double s = 0.0;
  for (std::size_t j = 0; j < k.size(); ++j) s += k[j] * omega_[j];
  return s;
}

int index_order(std::span<const int> k) {
  int s = 0;
  for (int v : k) s += std::abs(v);
  return s;
}

// ---------------------------------------------------------------------------
// IndexBall

IndexBall::IndexBall(int r, int K) : r_(r), K_(K) {
  if (r < 1 || K < 0)
    throw Error(ErrorKind::structural, "index ball needs r >= 1 and K >= 0");
  std::vector<std::vector<int>> all;
  std::vector<int> cur(static_cast<std::size_t>(r), 0);
  // Depth-first enumeration with remaining l1 budget.
  auto rec = [&](auto&& self, int j, int budget) -> void {
    if (j == r) {
      all.push_back(cur);
      return;
    }
    for (int v = -budget; v <= budget; ++v) {
      cur[static_cast<std::size_t>(j)] = v;
      self(self, j + 1, budget - std::abs(v));
    }
  };
  rec(rec, 0, K);
  std::stable_sort(all.begin(), all.end(),
                   [](const std::vector<int>& a, const std::vector<int>& b) {
                     const int oa = index_order(a), ob = index_order(b);
                     if (oa != ob) return oa < ob;
                     return a < b;
                   });
  flat_.reserve(all.size() * static_cast<std::size_t>(r));
  for (const auto& k : all) {
    flat_.insert(flat_.end(), k.begin(), k.end());
    orders_.push_back(index_order(k));
  }
  strides_.resize(static_cast<std::size_t>(r));
  long stride = 1;
  for (int j = 0; j < r; ++j) {
    strides_[static_cast<std::size_t>(j)] = stride;
    stride *= (2L * K + 1);
  }
  table_.assign(static_cast<std::size_t>(stride), -1);
  for (std::size_t p = 0; p < all.size(); ++p)
    table_[static_cast<std::size_t>(code(all[p]))] = static_cast<long>(p);
  negated_.resize(all.size());
  std::vector<int> neg(static_cast<std::size_t>(r));
  for (std::size_t p = 0; p < all.size(); ++p) {
    for (int j = 0; j < r; ++j) neg[static_cast<std::size_t>(j)] = -all[p][static_cast<std::size_t>(j)];
    negated_[p] = static_cast<std::size_t>(table_[static_cast<std::size_t>(code(neg))]);
  }
}

long IndexBall::code(std::span<const int> k) const {
  long c = 0;
  for (int j = 0; j < r_; ++j)
    c += (k[static_cast<std::size_t>(j)] + K_) * strides_[static_cast<std::size_t>(j)];
  return c;
}

long IndexBall::find(std::span<const int> k) const {
  if (static_cast<int>(k.size()) != r_) return -1;
  if (index_order(k) > K_) return -1;
  return table_[static_cast<std::size_t>(code(k))];
}

std::shared_ptr<const IndexBall> IndexBall::get(int r, int K) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::shared_ptr<const IndexBall>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{r, K}];
  if (!slot) slot = std::make_shared<const IndexBall>(r, K);
  return slot;
}

// ---------------------------------------------------------------------------
// QPMatrix

QPMatrix::QPMatrix(FrequencyVector omega, int n, double rho, int K)
    : omega_(std::move(omega)), n_(n), rho_(rho) {
  if (n < 1) throw Error(ErrorKind::structural, "dimension must be positive");
  if (!(rho > 0.0) || !std::isfinite(rho))
    throw Error(ErrorKind::domain, "analyticity width rho must be positive");
  if (K < 0) throw Error(ErrorKind::structural, "truncation order must be >= 0");
  ball_ = IndexBall::get(omega_.size(), K);
  data_.assign(ball_->size() * nn(), cplx(0.0, 0.0));
}

QPMatrix QPMatrix::constant(FrequencyVector omega, const CMat& m, double rho,
                            int K) {
  if (m.rows() != m.cols())
    throw Error(ErrorKind::structural, "constant term must be square");
  QPMatrix q(std::move(omega), static_cast<int>(m.rows()), rho, K);
  q.mode(0) = m;
  q.real_ = m.imag().cwiseAbs().maxCoeff() == 0.0;
  return q;
}

CMat QPMatrix::coeff(const std::vector<int>& k) const {
  const long p = ball_->find(k);
  if (p < 0) return CMat::Zero(n_, n_);
  return coeff_at(static_cast<std::size_t>(p));
}

CMat QPMatrix::coeff_at(std::size_t pos) const { return mode(pos); }

void QPMatrix::set_coeff(const std::vector<int>& k, const CMat& c) {
  if (static_cast<int>(k.size()) != rank())
    throw Error(ErrorKind::structural, "multi-index has the wrong length");
  const long p = ball_->find(k);
  if (p < 0)
    throw Error(ErrorKind::structural,
                "multi-index exceeds truncation order K=" + std::to_string(order()));
  set_coeff_at(static_cast<std::size_t>(p), c);
}

void QPMatrix::set_coeff_at(std::size_t pos, const CMat& c) {
  if (c.rows() != n_ || c.cols() != n_)
    throw Error(ErrorKind::structural, "coefficient has the wrong shape");
  mode(pos) = c;
}

bool QPMatrix::mode_is_zero(std::size_t pos) const {
  const cplx* p = raw(pos);
  for (std::size_t e = 0; e < nn(); ++e)
    if (p[e] != cplx(0.0, 0.0)) return false;
  return true;
}

bool QPMatrix::is_zero() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](const cplx& c) { return c == cplx(0.0, 0.0); });
}

double QPMatrix::max_abs() const {
  double m = 0.0;
  for (const cplx& c : data_) m = std::max(m, std::abs(c));
  return m;
}

QPMatrix QPMatrix::with_order(int K) const {
  QPMatrix out(omega_, n_, rho_, K);
  out.tail_ = tail_;
  out.real_ = real_;
  double dropped = 0.0;
  for (std::size_t p = 0; p < mode_count(); ++p) {
    if (mode_is_zero(p)) continue;
    const long q = out.ball_->find(ball_->index(p));
    if (q >= 0) {
      out.mode(static_cast<std::size_t>(q)) = mode(p);
    } else {
      double row = 0.0;
      for (int i = 0; i < n_; ++i) {
        double s = 0.0;
        for (int j = 0; j < n_; ++j) s += std::abs(mode(p)(i, j));
        row = std::max(row, s);
      }
      dropped += row * std::exp(ball_->order(p) * rho_);
    }
  }
  out.tail_ += dropped;
  return out;
}

QPMatrix QPMatrix::with_rho(double rho) const {
  if (!(rho > 0.0))
    throw Error(ErrorKind::domain, "analyticity width rho must be positive");
  QPMatrix out = *this;
  out.rho_ = rho;
  return out;
}

double QPMatrix::conjugate_asymmetry() const {
  double worst = 0.0;
  for (std::size_t p = 0; p < mode_count(); ++p) {
    const std::size_t q = ball_->negated(p);
    worst = std::max(worst, (mode(q) - mode(p).conjugate()).cwiseAbs().maxCoeff());
  }
  return worst;
}

void QPMatrix::enforce_real() {
  for (std::size_t p = 0; p < mode_count(); ++p) {
    const std::size_t q = ball_->negated(p);
    if (q < p) continue;
    const CMat avg = 0.5 * (mode(p) + mode(q).conjugate());
    mode(p) = avg;
    mode(q) = avg.conjugate();
  }
  real_ = true;
}

void QPMatrix::prune(double rel) {
  if (rel <= 0.0) return;
  double total = 0.0;
  std::vector<double> mass(mode_count(), 0.0);
  for (std::size_t p = 0; p < mode_count(); ++p) {
    const cplx* c = raw(p);
    for (std::size_t e = 0; e < nn(); ++e) mass[p] += std::abs(c[e]);
    total += mass[p];
  }
  const double cut = rel * total;
  double dropped = 0.0;
  for (std::size_t p = 0; p < mode_count(); ++p) {
    if (mass[p] > 0.0 && mass[p] <= cut) {
      dropped += mass[p] * std::exp(ball_->order(p) * rho_);
      std::fill(raw(p), raw(p) + nn(), cplx(0.0, 0.0));
    }
  }
  tail_ += dropped;
}

namespace {

void require_compatible(const QPMatrix& a, const QPMatrix& b, const char* op) {
  if (a.dim() != b.dim())
    throw Error(ErrorKind::structural,
                std::string(op) + ": dimension mismatch " + std::to_string(a.dim()) +
                    " vs " + std::to_string(b.dim()));
  if (!(a.omega() == b.omega()))
    throw Error(ErrorKind::structural, std::string(op) + ": frequency vectors differ");
}

}  // namespace

QPMatrix& QPMatrix::operator+=(const QPMatrix& o) {
  require_compatible(*this, o, "sum");
  if (o.order() > order()) *this = with_order(o.order());
  const bool same = o.order() == order();
  for (std::size_t p = 0; p < o.mode_count(); ++p) {
    if (o.mode_is_zero(p)) continue;
    const std::size_t q =
        same ? p : static_cast<std::size_t>(ball_->find(o.ball().index(p)));
    mode(q) += o.mode(p);
  }
  tail_ += o.tail_;
  real_ = real_ && o.real_;
  rho_ = std::min(rho_, o.rho_);
  return *this;
}

QPMatrix& QPMatrix::operator-=(const QPMatrix& o) {
  QPMatrix neg = o;
  neg *= cplx(-1.0, 0.0);
  neg.tail_ = o.tail_;
  return *this += neg;
}

QPMatrix& QPMatrix::operator*=(cplx s) {
  for (cplx& c : data_) c *= s;
  tail_ *= std::abs(s);
  if (s.imag() != 0.0) real_ = false;
  return *this;
}

QPMatrix operator+(QPMatrix a, const QPMatrix& b) { return a += b; }
QPMatrix operator-(QPMatrix a, const QPMatrix& b) { return a -= b; }
QPMatrix operator*(cplx s, QPMatrix a) { return a *= s; }
QPMatrix operator-(QPMatrix a) {
  const double t = a.tail_allowance();
  a *= cplx(-1.0, 0.0);
  a.set_tail(t);
  return a;
}

double weighted_norm(const QPMatrix& m, double rho) {
  if (rho > m.rho() * (1.0 + 1e-15))
    throw Error(ErrorKind::domain,
                "weighted norm requested at rho=" + std::to_string(rho) +
                    " beyond the analyticity width " + std::to_string(m.rho()));
  const int n = m.dim();
  std::vector<double> rows(static_cast<std::size_t>(n), 0.0);
  for (std::size_t p = 0; p < m.mode_count(); ++p) {
    if (m.mode_is_zero(p)) continue;
    const double w = std::exp(m.ball().order(p) * rho);
    const auto c = m.mode(p);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) rows[static_cast<std::size_t>(i)] += std::abs(c(i, j)) * w;
  }
  return n == 0 ? 0.0 : *std::max_element(rows.begin(), rows.end());
}

namespace {

inline void mul_acc(const cplx* a, const cplx* b, cplx* c, int n) {
  // column-major c += a*b
  if (n == 2) {
    c[0] += a[0] * b[0] + a[2] * b[1];
    c[1] += a[1] * b[0] + a[3] * b[1];
    c[2] += a[0] * b[2] + a[2] * b[3];
    c[3] += a[1] * b[2] + a[3] * b[3];
    return;
  }
  for (int j = 0; j < n; ++j)
    for (int l = 0; l < n; ++l) {
      const cplx blj = b[l + j * n];
      if (blj == cplx(0.0, 0.0)) continue;
      for (int i = 0; i < n; ++i) c[i + j * n] += a[i + l * n] * blj;
    }
}

std::vector<std::size_t> support(const QPMatrix& m) {
  std::vector<std::size_t> s;
  for (std::size_t p = 0; p < m.mode_count(); ++p)
    if (!m.mode_is_zero(p)) s.push_back(p);
  return s;
}

double mode_row_norm(const QPMatrix& m, std::size_t p) {
  const auto c = m.mode(p);
  double best = 0.0;
  for (int i = 0; i < m.dim(); ++i) {
    double s = 0.0;
    for (int j = 0; j < m.dim(); ++j) s += std::abs(c(i, j));
    best = std::max(best, s);
  }
  return best;
}

}  // namespace

QPMatrix qp_product(const QPMatrix& a, const QPMatrix& b, const ProductOptions& opt) {
  require_compatible(a, b, "qp_product");
  const int n = a.dim();
  int k_out = a.order() + b.order();
  if (opt.k_cap >= 0) k_out = std::min(k_out, opt.k_cap);
  const double rho = std::min(a.rho(), b.rho());
  QPMatrix c(a.omega(), n, rho, k_out);
  c.set_real_flag(a.real_flag() && b.real_flag());
  const IndexBall& bo = c.ball();
  const int r = a.rank();

  const auto sa = support(a);
  const auto sb = support(b);
  // Precomputed box codes relative to the output ball.
  std::vector<long> ca(sa.size()), cb(sb.size());
  for (std::size_t x = 0; x < sa.size(); ++x) {
    long code = 0;
    const auto k = a.ball().index(sa[x]);
    for (int j = 0; j < r; ++j) code += k[static_cast<std::size_t>(j)] * bo.box_stride(j);
    ca[x] = code;
  }
  for (std::size_t y = 0; y < sb.size(); ++y) {
    long code = 0;
    const auto k = b.ball().index(sb[y]);
    for (int j = 0; j < r; ++j) code += (k[static_cast<std::size_t>(j)] + k_out) * bo.box_stride(j);
    cb[y] = code;
  }

  double dropped = 0.0;
  for (std::size_t x = 0; x < sa.size(); ++x) {
    const auto ka = a.ball().index(sa[x]);
    const int oa = a.ball().order(sa[x]);
    const cplx* pa = a.raw(sa[x]);
    for (std::size_t y = 0; y < sb.size(); ++y) {
      const int ob = b.ball().order(sb[y]);
      bool inside = oa + ob <= k_out;
      if (!inside) {
        const auto kb = b.ball().index(sb[y]);
        int l1 = 0;
        for (int j = 0; j < r; ++j) l1 += std::abs(ka[static_cast<std::size_t>(j)] + kb[static_cast<std::size_t>(j)]);
        inside = l1 <= k_out;
        if (!inside) {
          // Norm bound of the dropped product term at the output width.
          dropped += mode_row_norm(a, sa[x]) * mode_row_norm(b, sb[y]) *
                     std::exp(l1 * rho);
          continue;
        }
      }
      const long pos = bo.lookup_code(ca[x] + cb[y]);
      mul_acc(pa, b.raw(sb[y]), c.raw(static_cast<std::size_t>(pos)), n);
    }
  }
  double tail = dropped;
  if (a.tail_allowance() > 0.0 || b.tail_allowance() > 0.0) {
    const double na = weighted_norm(a, rho), nb = weighted_norm(b, rho);
    tail += a.tail_allowance() * nb + b.tail_allowance() * na +
            a.tail_allowance() * b.tail_allowance();
  }
  c.set_tail(tail);
  c.prune(opt.drop_tol);
  return c;
}

QPMatrix commutator(const QPMatrix& a, const QPMatrix& b, const ProductOptions& opt) {
  QPMatrix ab = qp_product(a, b, opt);
  QPMatrix ba = qp_product(b, a, opt);
  return ab - ba;
}

QPMatrix left_multiply(const CMat& c, const QPMatrix& m) {
  QPMatrix out = m;
  const double cn = op_norm(c);
  for (std::size_t p = 0; p < m.mode_count(); ++p)
    if (!m.mode_is_zero(p)) out.mode(p) = c * m.mode(p);
  out.set_tail(m.tail_allowance() * cn);
  out.set_real_flag(m.real_flag() && c.imag().cwiseAbs().maxCoeff() == 0.0);
  return out;
}

QPMatrix right_multiply(const QPMatrix& m, const CMat& c) {
  QPMatrix out = m;
  const double cn = op_norm(c);
  for (std::size_t p = 0; p < m.mode_count(); ++p)
    if (!m.mode_is_zero(p)) out.mode(p) = m.mode(p) * c;
  out.set_tail(m.tail_allowance() * cn);
  out.set_real_flag(m.real_flag() && c.imag().cwiseAbs().maxCoeff() == 0.0);
  return out;
}

QPMatrix commutator(const CMat& c, const QPMatrix& m) {
  QPMatrix out = m;
  for (std::size_t p = 0; p < m.mode_count(); ++p)
    if (!m.mode_is_zero(p)) out.mode(p) = c * m.mode(p) - m.mode(p) * c;
  out.set_tail(2.0 * op_norm(c) * m.tail_allowance());
  out.set_real_flag(m.real_flag() && c.imag().cwiseAbs().maxCoeff() == 0.0);
  return out;
}

QPMatrix add_constant(QPMatrix m, const CMat& c) {
  if (c.rows() != m.dim() || c.cols() != m.dim())
    throw Error(ErrorKind::structural, "add_constant: dimension mismatch");
  m.mode(0) += c;
  if (c.imag().cwiseAbs().maxCoeff() != 0.0) m.set_real_flag(false);
  return m;
}

CMat average(const QPMatrix& m) {
  for (std::size_t p = 1; p < m.mode_count(); ++p) {
    if (m.mode_is_zero(p)) continue;
    if (m.omega().dot(m.ball().index(p)) == 0.0) {
      std::string k;
      for (int v : m.ball().index(p)) k += (k.empty() ? "" : ",") + std::to_string(v);
      throw Error(ErrorKind::resonant_representation,
                  "stored mode k=(" + k + ") has <k,omega> = 0; the zero mode "
                  "is not the time average");
    }
  }
  return m.coeff_at(m.ball().zero_position());
}

QPMatrix without_average(const QPMatrix& m) {
  QPMatrix out = m;
  out.mode(0).setZero();
  return out;
}

CMat evaluate_angles(const QPMatrix& m, std::span<const double> theta) {
  if (static_cast<int>(theta.size()) != m.rank())
    throw Error(ErrorKind::structural, "angle vector has the wrong length");
  CMat out = CMat::Zero(m.dim(), m.dim());
  for (std::size_t p = 0; p < m.mode_count(); ++p) {
    if (m.mode_is_zero(p)) continue;
    const auto k = m.ball().index(p);
    double phase = 0.0;
    for (std::size_t j = 0; j < theta.size(); ++j) phase += k[j] * theta[j];
    out += m.mode(p) * std::polar(1.0, phase);
  }
  return out;
}

CMat evaluate(const QPMatrix& m, double t) {
  CMat out = CMat::Zero(m.dim(), m.dim());
  for (std::size_t p = 0; p < m.mode_count(); ++p) {
    if (m.mode_is_zero(p)) continue;
    const double phase = m.omega().dot(m.ball().index(p)) * t;
    out += m.mode(p) * std::polar(1.0, phase);
  }
  return out;
}

QPMatrix derivative(const QPMatrix& m) {
  QPMatrix out = m;
  out.mode(0).setZero();
  for (std::size_t p = 1; p < m.mode_count(); ++p) {
    if (m.mode_is_zero(p)) continue;
    out.mode(p) = cplx(0.0, m.omega().dot(m.ball().index(p))) * m.mode(p);
  }
  double kmax = 0.0;
  for (int j = 0; j < m.rank(); ++j) kmax = std::max(kmax, std::abs(m.omega()[j]));
  out.set_tail(m.tail_allowance() * kmax * (m.order() + 1));
  return out;
}

double hamiltonian_defect(const QPMatrix& m) {
  if (m.dim() % 2 != 0)
    throw Error(ErrorKind::structural, "Hamiltonian test needs even dimension, got " +
                                           std::to_string(m.dim()));
  const CMat jinv = -symplectic_unit(m.dim());
  double worst = 0.0;
  for (std::size_t p = 0; p < m.mode_count(); ++p) {
    if (m.mode_is_zero(p)) continue;
    const CMat s = jinv * m.mode(p);
    worst = std::max(worst, (s - s.transpose()).cwiseAbs().maxCoeff());
  }
  return worst;
}

bool is_hamiltonian(const QPMatrix& m, double tol) { return hamiltonian_defect(m) <= tol; }

}  // namespace qpr
