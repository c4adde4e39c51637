// Copyright 2026 The dephaselab Authors
// SPDX-License-Identifier: Apache-2.0

// Small independent references used across the tests: single-particle Wick contractions
// in a full (site, spin, flavor) basis and Gauss-Hermite quadrature.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "dephaselab/model.hpp"

namespace dephaselab::testing {

/// Full single-particle matrix of a bilinear, mode ((2 site + spin) N + flavor).
inline CMatrix full_operator_matrix(const BilinearSpec& op, const TightBindingModel& model) {
  const int nf = model.n_flavors();
  const int dim = 2 * model.n_sites() * nf;
  CMatrix a = CMatrix::Zero(dim, dim);
  for (const auto& t : resolve_terms(op, model.lattice))
    for (int s = 0; s < 2; ++s)
      for (int sp = 0; sp < 2; ++sp)
        for (int f = 0; f < nf; ++f)
          for (int fp = 0; fp < nf; ++fp)
            a((2 * t.from + s) * nf + f, (2 * t.to + sp) * nf + fp) += t.coef * t.spin(s, sp) * op.omega(f, fp);
  return a;
}

/// G_{ji} = <c^dag_i c_j> of the free doubled ground state, all flavors.
inline CMatrix free_projector(const CMatrix& p, int n_flavors) {
  return kron(p * p.adjoint(), CMatrix::Identity(n_flavors, n_flavors));
}

/// Free <A B> with the connected part tr(A (1 - G) B G) and <A> = tr(A G).
struct WickPair {
  cplx full;
  cplx connected;
};

inline WickPair free_wick(const CMatrix& a, const CMatrix& b, const CMatrix& g) {
  const CMatrix one = CMatrix::Identity(g.rows(), g.cols());
  const cplx conn = (a * (one - g) * b * g).trace();
  return {conn + (a * g).trace() * (b * g).trace(), conn};
}

/// Nodes and weights for integral exp(-t^2) f(t) dt (Golub-Welsch).
struct Quadrature {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline Quadrature gauss_hermite(int n) {
  RMatrix j = RMatrix::Zero(n, n);
  for (int i = 1; i < n; ++i) j(i, i - 1) = j(i - 1, i) = std::sqrt(i / 2.0);
  Eigen::SelfAdjointEigenSolver<RMatrix> es(j);
  Quadrature q;
  for (int i = 0; i < n; ++i) {
    q.nodes.push_back(es.eigenvalues()(i));
    q.weights.push_back(std::sqrt(std::numbers::pi) * es.eigenvectors()(0, i) * es.eigenvectors()(0, i));
  }
  return q;
}

/// Tensor-product integral of f(phi) exp(-Sum phi^2 / g) over R^n, up to a constant that is
/// the same for every f.
inline cplx gaussian_field_integral(int n, double g, int order, const std::function<cplx(const RVector&)>& f) {
  const auto q = gauss_hermite(order);
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  RVector phi(n);
  cplx total(0.0);
  while (true) {
    double w = 1.0;
    for (int i = 0; i < n; ++i) {
      phi(i) = std::sqrt(g) * q.nodes[idx[i]];
      w *= q.weights[idx[i]];
    }
    total += w * f(phi);
    int i = 0;
    while (i < n && ++idx[i] == order) idx[i++] = 0;
    if (i == n) break;
  }
  return total;
}

}  // namespace dephaselab::testing
