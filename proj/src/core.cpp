// Copyright 2026 qpreduce contributors
// SPDX-License-Identifier: Apache-2.0
#include "qpr/core.hpp"

namespace qpr {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::domain: return "domain";
    case ErrorKind::structural: return "structural";
    case ErrorKind::resonant_representation: return "resonant_representation";
    case ErrorKind::defective_matrix: return "defective_matrix";
    case ErrorKind::small_divisor: return "small_divisor";
    case ErrorKind::precondition: return "precondition";
    case ErrorKind::smallness: return "smallness";
    case ErrorKind::truncation: return "truncation";
    case ErrorKind::integration: return "integration";
    case ErrorKind::parse: return "parse";
    case ErrorKind::inapplicable: return "inapplicable";
  }
  return "unknown";
}

double op_norm(const CMat& m) {
  double best = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    double row = 0.0;
    for (Eigen::Index j = 0; j < m.cols(); ++j) row += std::abs(m(i, j));
    best = std::max(best, row);
  }
  return best;
}

CMat symplectic_unit(int n) {
  if (n <= 0 || n % 2 != 0)
    throw Error(ErrorKind::structural,
                "symplectic unit needs a positive even dimension, got " +
                    std::to_string(n));
  const int h = n / 2;
  CMat j = CMat::Zero(n, n);
  j.topRightCorner(h, h) = CMat::Identity(h, h);
  j.bottomLeftCorner(h, h) = -CMat::Identity(h, h);
  return j;
}

bool is_hamiltonian(const CMat& m, double tol) {
  if (m.rows() != m.cols() || m.rows() % 2 != 0)
    throw Error(ErrorKind::structural,
                "Hamiltonian test needs an even square matrix");
  // J^{-1} = -J
  const CMat s = -symplectic_unit(static_cast<int>(m.rows())) * m;
  return (s - s.transpose()).cwiseAbs().maxCoeff() <= tol;
}

double symplectic_defect(const CMat& m) {
  const CMat j = symplectic_unit(static_cast<int>(m.rows()));
  return (m.transpose() * j * m - j).cwiseAbs().maxCoeff();
}

}  // namespace qpr
