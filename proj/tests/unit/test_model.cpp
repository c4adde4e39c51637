// Copyright 2026 The dephaselab Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "dephaselab/errors.hpp"
#include "dephaselab/model.hpp"

using namespace dephaselab;

namespace {

ModelSpec chain(int l, Boundary b = Boundary::open, int n = 2) {
  ModelSpec s;
  s.lx = l;
  s.boundary = b;
  s.n_flavors = n;
  return s;
}

RVector eigenvalues(const CMatrix& h) { return Eigen::SelfAdjointEigenSolver<CMatrix>(h).eigenvalues(); }

}  // namespace

TEST_CASE("two-site chain hopping matrix") {
  const auto m = build_model(chain(2));
  CHECK(std::abs(m.h(0, 1) - cplx(-1.0)) < 1e-15);
  CHECK(std::abs(m.h(1, 0) - cplx(-1.0)) < 1e-15);
  CHECK(std::abs(m.h(0, 0)) < 1e-15);
  const RVector e = eigenvalues(m.h);
  CHECK(e(0) == doctest::Approx(-1.0));
  CHECK(e(1) == doctest::Approx(1.0));
}

TEST_CASE("periodic four-site chain spectrum") {
  const RVector e = eigenvalues(build_model(chain(4, Boundary::periodic)).h);
  CHECK(e(0) == doctest::Approx(-2.0));
  CHECK(std::abs(e(1)) < 1e-12);
  CHECK(std::abs(e(2)) < 1e-12);
  CHECK(e(3) == doctest::Approx(2.0));
}

TEST_CASE("pi-flux lattice with mass is gapped and particle-hole symmetric") {
  ModelSpec s;
  s.geometry = Geometry::pi_flux;
  s.lx = 4;
  s.ly = 4;
  s.boundary = Boundary::periodic;
  s.mass = 0.1;
  const auto m = build_model(s);
  CHECK(hermiticity_defect(m.h) < 1e-14);
  const RVector e = eigenvalues(m.h);
  CHECK(e.cwiseAbs().minCoeff() >= 0.1 - 1e-12);
  for (Eigen::Index i = 0; i < e.size(); ++i) CHECK(std::abs(e(i) + e(e.size() - 1 - i)) < 1e-12);

  s.mass = 0.0;
  const RVector e0 = eigenvalues(build_model(s).h);
  // two Dirac cones: four zero modes on a 4 x 4 mesh containing the nodes
  CHECK(std::count_if(e0.begin(), e0.end(), [](double x) { return std::abs(x) < 1e-10; }) == 4);
}

TEST_CASE("model construction rejects bad input") {
  CHECK_THROWS_AS(parse_geometry("hexagon"), InvalidInput);
  ModelSpec s = chain(0);
  CHECK_THROWS_AS(build_model(s), InvalidInput);
  s = chain(3);
  s.geometry = Geometry::custom;
  CMatrix h = CMatrix::Zero(2, 2);
  h(0, 1) = 1.0;
  s.custom_h = h;
  CHECK_THROWS_AS(build_model(s), InvalidInput);
  s = chain(4);
  s.disorder_strength = -1.0;
  CHECK_THROWS_AS(build_model(s), InvalidInput);
}

TEST_CASE("disordered models are reproducible from the seed") {
  ModelSpec s = chain(6);
  s.disorder_seed = 42;
  s.disorder_strength = 0.7;
  const auto a = build_model(s);
  const auto b = build_model(s);
  CHECK((a.h.array() == b.h.array()).all());
  s.disorder_seed = 43;
  CHECK((a.h - build_model(s).h).norm() > 1e-3);
}

TEST_CASE("doubled hamiltonian blocks and spectral symmetry") {
  const auto dm = double_hamiltonian(build_model(chain(2)));
  CHECK(std::abs(dm.hd(doubled_index(0, kUp), doubled_index(1, kUp)) - cplx(-1.0)) < 1e-15);
  CHECK(std::abs(dm.hd(doubled_index(0, kDown), doubled_index(1, kDown)) - cplx(1.0)) < 1e-15);
  CHECK(dm.n_filled == 2);

  ModelSpec s = chain(7);
  s.disorder_seed = 3;
  s.disorder_strength = 1.0;
  s.twist = 0.4;
  s.boundary = Boundary::periodic;
  const auto d7 = double_hamiltonian(build_model(s));
  CMatrix s1 = kron(CMatrix::Identity(7, 7), pseudo_spin_matrix(PseudoSpin::s1));
  CHECK((s1 * d7.hd * s1 + d7.hd).norm() == 0.0);
  RVector e = eigenvalues(d7.hd);
  RVector neg = -e.reverse();
  CHECK((e - neg).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("ground orbitals of the two-site chain") {
  const auto orb = ground_orbitals(double_hamiltonian(build_model(chain(2))));
  CHECK(orb.gap == doctest::Approx(2.0));
  REQUIRE(orb.p.cols() == 2);
  const double r = 1.0 / std::sqrt(2.0);
  CVector up = CVector::Zero(4), down = CVector::Zero(4);
  up(doubled_index(0, kUp)) = r;
  up(doubled_index(1, kUp)) = r;
  down(doubled_index(0, kDown)) = r;
  down(doubled_index(1, kDown)) = -r;
  // the occupied space is spanned by these two orbitals
  const CMatrix proj = orb.p * orb.p.adjoint();
  CHECK((proj * up - up).norm() < 1e-12);
  CHECK((proj * down - down).norm() < 1e-12);
}

TEST_CASE("degenerate and gapped four-site chains") {
  const auto periodic = double_hamiltonian(build_model(chain(4, Boundary::periodic)));
  CHECK_THROWS_AS(ground_orbitals(periodic), DegenerateGroundState);
  try {
    ground_orbitals(periodic);
  } catch (const DegenerateGroundState& e) {
    CHECK(!e.eigenvalues().empty());
  }

  const auto orb = ground_orbitals(double_hamiltonian(build_model(chain(4))));
  CHECK(orb.gap == doctest::Approx(std::sqrt(5.0) - 1.0));
  CHECK((orb.p.adjoint() * orb.p - CMatrix::Identity(4, 4)).norm() < 1e-10);
  const CMatrix g0 = orb.p * orb.p.adjoint();
  CHECK((g0 * g0 - g0).norm() < 1e-10);
  CHECK(std::abs(g0.trace() - cplx(4.0)) < 1e-10);

  ModelSpec zero;
  zero.geometry = Geometry::custom;
  zero.custom_h = CMatrix::Zero(3, 3);
  zero.n_flavors = 1;
  const auto dz = double_hamiltonian(build_model(zero));
  CHECK(dz.hd.norm() == 0.0);
  CHECK_THROWS_AS(ground_orbitals(dz), DegenerateGroundState);
}

TEST_CASE("orbital choice is deterministic") {
  ModelSpec s = chain(5);
  s.disorder_seed = 11;
  s.disorder_strength = 0.5;
  const auto dm = double_hamiltonian(build_model(s));
  const auto a = ground_orbitals(dm);
  const auto b = ground_orbitals(dm);
  CHECK((a.p.array() == b.p.array()).all());
  for (Eigen::Index k = 0; k < a.p.cols(); ++k) {
    Eigen::Index i = 0;
    a.p.col(k).cwiseAbs().maxCoeff(&i);
    CHECK(std::abs(a.p(i, k).imag()) < 1e-14);
    CHECK(a.p(i, k).real() > 0.0);
  }
}

TEST_CASE("SU(n) generators") {
  CHECK_THROWS_AS(su_generators(1), InvalidInput);
  const auto t2 = su_generators(2);
  REQUIRE(t2.size() == 3);
  for (int n = 2; n <= 5; ++n) {
    const auto t = su_generators(n);
    REQUIRE(static_cast<int>(t.size()) == n * n - 1);
    for (std::size_t a = 0; a < t.size(); ++a) {
      CHECK(std::abs(t[a].trace()) < 1e-14);
      CHECK(hermiticity_defect(t[a]) < 1e-15);
      for (std::size_t b = 0; b < t.size(); ++b)
        CHECK(std::abs((t[a] * t[b]).trace() - cplx(a == b ? 0.5 : 0.0)) < 1e-12);
    }
  }
  // n = 2 reduces to the Pauli matrices over 2, in x, y, z order
  for (int i = 0; i < 3; ++i) {
    const Matrix2c pauli = pseudo_spin_matrix(pseudo_spin_from_mu(i + 1));
    CHECK((t2[i] - 0.5 * CMatrix(pauli)).norm() < 1e-15);
  }
  CHECK((flavor_matrix("su2-z", 2) - t2[2]).norm() < 1e-15);
  CHECK((flavor_matrix("identity", 3) - CMatrix::Identity(3, 3)).norm() == 0.0);
  CHECK((flavor_matrix("suN-8", 3) - su_generators(3)[7]).norm() == 0.0);
  CHECK((flavor_matrix("[[1,0],[0,-1]]", 2) - 2.0 * t2[2]).norm() < 1e-15);
  CHECK_THROWS_AS(flavor_matrix("su2-w", 2), InvalidInput);
  CHECK_THROWS_AS(flavor_matrix("[[0,1],[0,0]]", 2), InvalidInput);
}

TEST_CASE("bilinear terms and adjoints") {
  const auto m = build_model(chain(4));
  const auto bond = bond_bilinear(1, {1, 0}, PseudoSpin::s1, flavor_matrix("su2-x", 2));
  const auto terms = resolve_terms(bond, m.lattice);
  REQUIRE(terms.size() == 1);
  CHECK(terms[0].from == 1);
  CHECK(terms[0].to == 2);
  const auto adj = adjoint(bond, m.lattice);
  CHECK(adj.site == 2);
  CHECK(adj.offset[0] == -1);

  const auto j = current_operator(0, {1, 0}, flavor_matrix("identity", 2));
  CHECK(resolve_terms(j, m.lattice).size() == 2);
  CHECK_THROWS_AS(resolve_terms(bond_bilinear(3, {1, 0}, PseudoSpin::s0, j.omega), m.lattice), InvalidInput);
  CHECK_THROWS_AS(validate_bilinear(onsite_bilinear(0, PseudoSpin::s0, CMatrix::Identity(3, 3)), m), InvalidInput);
}

TEST_CASE("periodic lattice distances and shifts") {
  const auto m = build_model(chain(6, Boundary::periodic));
  CHECK(m.lattice.distance(0, 5) == doctest::Approx(1.0));
  CHECK(m.lattice.distance(1, 4) == doctest::Approx(3.0));
  CHECK(*m.lattice.shifted(5, {1, 0}) == 0);
  const auto open = build_model(chain(6));
  CHECK(!open.lattice.shifted(5, {1, 0}).has_value());
}

TEST_CASE("custom matrix file round trip") {
  const auto path = std::filesystem::temp_directory_path() / "dephaselab_h_test.txt";
  {
    std::ofstream out(path);
    out << "0 0  -1 0.5\n-1 -0.5  0 0\n";
  }
  const CMatrix h = read_matrix_file(path);
  REQUIRE(h.rows() == 2);
  CHECK(std::abs(h(0, 1) - cplx(-1.0, 0.5)) < 1e-15);
  CHECK(hermiticity_defect(h) == 0.0);
  std::filesystem::remove(path);
}
