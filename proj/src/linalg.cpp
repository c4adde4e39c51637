// Copyright 2026 The dephaselab Authors
// SPDX-License-Identifier: Apache-2.0

#include "dephaselab/linalg.hpp"

#include <cmath>
#include <limits>

namespace dephaselab {

LogDet log_determinant(const Eigen::PartialPivLU<CMatrix>& lu) {
  LogDet out;
  const CMatrix& packed = lu.matrixLU();
  const Eigen::Index n = packed.rows();
  if (n == 0) return out;

  double scale = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) scale = std::max(scale, std::abs(packed(i, i)));
  scale = std::max(scale, lu.rows() > 0 ? packed.cwiseAbs().maxCoeff() : 0.0);

  out.phase = cplx(static_cast<double>(lu.permutationP().determinant()), 0.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const cplx d = packed(i, i);
    const double mag = std::abs(d);
    if (mag <= kSingularPivot * scale || mag == 0.0) {
      out.singular = true;
      out.log_abs = -std::numeric_limits<double>::infinity();
      out.phase = cplx(1.0, 0.0);
      return out;
    }
    out.log_abs += std::log(mag);
    out.phase *= d / mag;
  }
  // renormalize accumulated rounding in the unit phase
  out.phase /= std::abs(out.phase);
  return out;
}

LogDet log_determinant(const CMatrix& m) {
  Eigen::PartialPivLU<CMatrix> lu(m);
  return log_determinant(lu);
}

void fix_phase(Eigen::Ref<CVector> v) {
  Eigen::Index best = 0;
  double best_mag = -1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double mag = std::abs(v(i));
    if (mag > best_mag + 1e-12) {
      best_mag = mag;
      best = i;
    }
  }
  if (best_mag <= 0.0) return;
  const cplx rot = std::conj(v(best)) / best_mag;
  v *= rot;
  v(best) = cplx(v(best).real(), 0.0);
}

double hermiticity_defect(const CMatrix& m) {
  if (m.rows() != m.cols()) return std::numeric_limits<double>::infinity();
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace dephaselab
