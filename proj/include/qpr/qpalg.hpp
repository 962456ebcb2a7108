// Copyright 2026 qpreduce contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Quasi-periodic matrices as truncated Fourier series
//
//   M(t) = sum_{|k| <= K} M_k exp(i <k, omega> t),
//
// where |k| is the l1 norm of the integer vector k. Coefficients live on the
// full index ball |k| <= K (dense storage); modes that are exactly zero are
// skipped by the convolution kernels.

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "qpr/core.hpp"

namespace qpr {

/// Basic frequency vector omega in R^r (r >= 1, all entries finite).
class FrequencyVector {
 public:
  FrequencyVector() = default;
  explicit FrequencyVector(std::vector<double> omega);

  int size() const { return static_cast<int>(omega_.size()); }
  double operator[](int j) const { return omega_[static_cast<std::size_t>(j)]; }
  const std::vector<double>& values() const { return omega_; }

  double dot(std::span<const int> k) const;

  friend bool operator==(const FrequencyVector&, const FrequencyVector&) = default;

 private:
  std::vector<double> omega_;
};

/// l1 order |k| = sum_j |k_j|.
int index_order(std::span<const int> k);

/// Enumeration of all k in Z^r with |k| <= K, ordered by |k| then
/// lexicographically. Shared and immutable; obtain through get().
class IndexBall {
 public:
  static std::shared_ptr<const IndexBall> get(int r, int K);

  int rank() const { return r_; }
  int radius() const { return K_; }
  std::size_t size() const { return orders_.size(); }

  std::span<const int> index(std::size_t pos) const {
    return {flat_.data() + pos * static_cast<std::size_t>(r_),
            static_cast<std::size_t>(r_)};
  }
  int order(std::size_t pos) const { return orders_[pos]; }
  std::size_t zero_position() const { return 0; }
  std::size_t negated(std::size_t pos) const { return negated_[pos]; }

  /// Position of k, or -1 when |k| > K.
  long find(std::span<const int> k) const;

  // Linear box code of k; valid for components in [-K, K].
  long code(std::span<const int> k) const;
  long lookup_code(long code) const { return table_[static_cast<std::size_t>(code)]; }
  long box_stride(int j) const { return strides_[static_cast<std::size_t>(j)]; }

  IndexBall(int r, int K);

 private:
  int r_;
  int K_;
  std::vector<int> flat_;
  std::vector<int> orders_;
  std::vector<std::size_t> negated_;
  std::vector<long> strides_;
  std::vector<long> table_;
};

class QPMatrix {
 public:
  QPMatrix() = default;
  /// Zero series of dimension n over the ball |k| <= K.
  QPMatrix(FrequencyVector omega, int n, double rho, int K);

  static QPMatrix constant(FrequencyVector omega, const CMat& m, double rho,
                           int K = 0);

  const FrequencyVector& omega() const { return omega_; }
  int dim() const { return n_; }
  int rank() const { return omega_.size(); }
  double rho() const { return rho_; }
  int order() const { return ball_ ? ball_->radius() : 0; }
  const IndexBall& ball() const { return *ball_; }
  std::size_t mode_count() const { return ball_ ? ball_->size() : 0; }

  /// Mass dropped by truncation, measured in the weighted norm at rho().
  double tail_allowance() const { return tail_; }
  void add_tail(double t) { tail_ += t; }
  void set_tail(double t) { tail_ = t; }

  /// Real-valuedness on the real torus (coefficient at -k is the conjugate
  /// of the coefficient at k). An assertion carried along, not storage.
  bool real_flag() const { return real_; }
  void set_real_flag(bool r) { real_ = r; }

  CMat coeff(const std::vector<int>& k) const;
  CMat coeff_at(std::size_t pos) const;
  void set_coeff(const std::vector<int>& k, const CMat& c);
  void set_coeff_at(std::size_t pos, const CMat& c);

  Eigen::Map<CMat> mode(std::size_t pos) {
    return Eigen::Map<CMat>(data_.data() + pos * nn(), n_, n_);
  }
  Eigen::Map<const CMat> mode(std::size_t pos) const {
    return Eigen::Map<const CMat>(data_.data() + pos * nn(), n_, n_);
  }
  const cplx* raw(std::size_t pos) const { return data_.data() + pos * nn(); }
  cplx* raw(std::size_t pos) { return data_.data() + pos * nn(); }

  bool mode_is_zero(std::size_t pos) const;
  bool is_zero() const;
  double max_abs() const;

  /// Same coefficients re-embedded in the ball of radius K (modes with
  /// |k| > K are dropped; their weighted mass is added to the tail).
  QPMatrix with_order(int K) const;
  QPMatrix with_rho(double rho) const;

  /// max over stored k of |M_{-k} - conj(M_k)|.
  double conjugate_asymmetry() const;
  /// Project onto real-valued series: M_k <- (M_k + conj(M_{-k}))/2.
  void enforce_real();

  /// Zero out modes whose l1 entry mass is <= rel * (total l1 mass).
  void prune(double rel);

  QPMatrix& operator+=(const QPMatrix& o);
  QPMatrix& operator-=(const QPMatrix& o);
  QPMatrix& operator*=(cplx s);

 private:
  std::size_t nn() const { return static_cast<std::size_t>(n_) * n_; }

  FrequencyVector omega_;
  int n_ = 0;
  double rho_ = 0.0;
  double tail_ = 0.0;
  bool real_ = false;
  std::shared_ptr<const IndexBall> ball_;
  std::vector<cplx> data_;
};

QPMatrix operator+(QPMatrix a, const QPMatrix& b);
QPMatrix operator-(QPMatrix a, const QPMatrix& b);
QPMatrix operator*(cplx s, QPMatrix a);
QPMatrix operator-(QPMatrix a);

/// ||M||_rho = max_i sum_j sum_k |(M_k)_ij| e^{|k| rho}. Requires rho <= M.rho().
double weighted_norm(const QPMatrix& m, double rho);

struct ProductOptions {
  int k_cap = -1;          // K_out = min(K_A + K_B, k_cap); -1 means no cap
  double drop_tol = 1e-16; // relative pruning after the product
};

/// Truncated convolution. Dropped mass beyond K_out is added to the result's
/// tail_allowance along with the operands' tails (scaled by the other
/// operand's norm).
QPMatrix qp_product(const QPMatrix& a, const QPMatrix& b,
                    const ProductOptions& opt = {});

/// a*b - b*a with the same truncation rule.
QPMatrix commutator(const QPMatrix& a, const QPMatrix& b,
                    const ProductOptions& opt = {});

QPMatrix left_multiply(const CMat& c, const QPMatrix& m);
QPMatrix right_multiply(const QPMatrix& m, const CMat& c);
/// c*m - m*c for a constant c.
QPMatrix commutator(const CMat& c, const QPMatrix& m);
/// m + c (c added to the zero mode).
QPMatrix add_constant(QPMatrix m, const CMat& c);

/// Time average, i.e. the zero mode. Throws resonant_representation when a
/// stored nonzero mode has <k, omega> == 0 exactly.
CMat average(const QPMatrix& m);
QPMatrix without_average(const QPMatrix& m);

CMat evaluate(const QPMatrix& m, double t);
/// Evaluate on the torus at angles theta in R^r.
CMat evaluate_angles(const QPMatrix& m, std::span<const double> theta);

/// Coefficientwise i<k,omega> M_k.
QPMatrix derivative(const QPMatrix& m);

/// True iff every stored coefficient C_k has J^{-1} C_k symmetric within tol.
bool is_hamiltonian(const QPMatrix& m, double tol);
double hamiltonian_defect(const QPMatrix& m);

}  // namespace qpr
