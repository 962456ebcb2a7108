// Copyright 2026 qpreduce contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qpr {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using RMat = Eigen::MatrixXd;

enum class ErrorKind {
  domain,
  structural,
  resonant_representation,
  defective_matrix,
  small_divisor,
  precondition,
  smallness,
  truncation,
  integration,
  parse,
  inapplicable,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Raised when an eigenbasis cannot be certified.
class DefectiveMatrixError : public Error {
 public:
  DefectiveMatrixError(const std::string& what, double min_separation)
      : Error(ErrorKind::defective_matrix, what),
        min_separation_(min_separation) {}
  double min_separation() const noexcept { return min_separation_; }

 private:
  double min_separation_;
};

class SmallDivisorError : public Error {
 public:
  SmallDivisorError(const std::string& what, std::vector<int> k, int i, int j,
                    double modulus, double threshold)
      : Error(ErrorKind::small_divisor, what),
        k_(std::move(k)), i_(i), j_(j), modulus_(modulus),
        threshold_(threshold) {}
  const std::vector<int>& k() const noexcept { return k_; }
  int i() const noexcept { return i_; }
  int j() const noexcept { return j_; }
  double modulus() const noexcept { return modulus_; }
  double threshold() const noexcept { return threshold_; }

 private:
  std::vector<int> k_;
  int i_, j_;
  double modulus_, threshold_;
};

class IntegrationError : public Error {
 public:
  IntegrationError(const std::string& what, double time)
      : Error(ErrorKind::integration, what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

// Parse failures name the offending field.
class ParseError : public Error {
 public:
  ParseError(const std::string& field, const std::string& what)
      : Error(ErrorKind::parse, field + ": " + what), field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Maximum absolute row sum. This is the operator norm used everywhere a
/// constant matrix norm appears (eigenbasis conditioning, drift, gates).
double op_norm(const CMat& m);

/// Standard symplectic unit J = [[0, I], [-I, 0]] for even n.
CMat symplectic_unit(int n);

/// J^{-1} M symmetric (not Hermitian) entrywise within tol.
bool is_hamiltonian(const CMat& m, double tol);

/// max |M^T J M - J| entrywise.
double symplectic_defect(const CMat& m);

}  // namespace qpr
