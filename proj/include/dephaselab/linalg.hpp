// Copyright 2026 The dephaselab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <complex>

namespace dephaselab {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;
using Matrix2c = Eigen::Matrix2cd;

inline constexpr cplx kI{0.0, 1.0};

/// Determinant in log form: det = exp(log_abs) * phase.
struct LogDet {
  double log_abs = 0.0;
  cplx phase{1.0, 0.0};
  bool singular = false;
};

// Relative pivot size below which a decomposition is treated as exactly singular.
inline constexpr double kSingularPivot = 1e-13;

LogDet log_determinant(const Eigen::PartialPivLU<CMatrix>& lu);
LogDet log_determinant(const CMatrix& m);

/// Rotates v so that its largest-magnitude component (first one on ties) is real positive.
void fix_phase(Eigen::Ref<CVector> v);

/// max_ij |m_ij - conj(m_ji)|
double hermiticity_defect(const CMatrix& m);

/// Kronecker product a (x) b.
CMatrix kron(const CMatrix& a, const CMatrix& b);

}  // namespace dephaselab
