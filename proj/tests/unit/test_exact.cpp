// Copyright 2026 The dephaselab Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <array>
#include <cmath>
#include <random>

#include "dense_fock.hpp"
#include "dephaselab/errors.hpp"
#include "dephaselab/exact.hpp"
#include "oracles.hpp"

using namespace dephaselab;
using namespace dephaselab::testing;

namespace {

TightBindingModel chain(int l, int n = 2, Boundary b = Boundary::open) {
  ModelSpec s;
  s.lx = l;
  s.n_flavors = n;
  s.boundary = b;
  return build_model(s);
}

// the open three-site chain has a zero mode; the ring does not
TightBindingModel ring3(int n = 2) { return chain(3, n, Boundary::periodic); }

TightBindingModel random_model(int n_sites, std::uint64_t seed, int n_flavors = 2) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  ModelSpec s;
  s.geometry = Geometry::custom;
  s.n_flavors = n_flavors;
  CMatrix h(n_sites, n_sites);
  for (int i = 0; i < n_sites; ++i) {
    h(i, i) = gauss(rng);
    for (int j = i + 1; j < n_sites; ++j) {
      h(i, j) = cplx(gauss(rng), gauss(rng));
      h(j, i) = std::conj(h(i, j));
    }
  }
  s.custom_h = h;
  s.lx = n_sites;
  return build_model(s);
}

std::vector<BilinearSpec> probe_operators(const TightBindingModel& m) {
  std::vector<BilinearSpec> ops;
  const int n = m.n_sites();
  for (int mu = 0; mu < 4; ++mu) {
    ops.push_back(onsite_bilinear(0, pseudo_spin_from_mu(mu), flavor_matrix("su2-z", 2)));
    ops.push_back(onsite_bilinear(n - 1, pseudo_spin_from_mu(mu), flavor_matrix("su2-x", 2)));
    ops.push_back(onsite_bilinear(1, pseudo_spin_from_mu(mu), flavor_matrix("identity", 2)));
  }
  ops.push_back(onsite_bilinear(1, PseudoSpin::raise, flavor_matrix("identity", 2)));
  ops.push_back(onsite_bilinear(0, PseudoSpin::lower, flavor_matrix("su2-y", 2)));
  ops.push_back(bond_bilinear(0, {1, 0}, PseudoSpin::s3, flavor_matrix("su2-z", 2)));
  ops.push_back(bond_bilinear(1, {1, 0}, PseudoSpin::s1, flavor_matrix("identity", 2)));
  ops.push_back(current_operator(0, {1, 0}, flavor_matrix("identity", 2)));
  return ops;
}

}  // namespace

TEST_CASE("slater amplitudes") {
  const auto m2 = chain(2);
  const auto t = slater_fock_amplitudes(single_layer_orbitals(m2, 1), 1);
  REQUIRE(t.keys.size() == 2);
  CHECK(t.keys[0] == 0b01);
  CHECK(t.keys[1] == 0b10);
  for (const auto& a : t.amplitudes) CHECK(std::abs(a - cplx(1.0 / std::sqrt(2.0))) < 1e-12);

  const auto m4 = chain(4);
  const auto t4 = slater_fock_amplitudes(single_layer_orbitals(m4, 2), 2);
  CHECK(t4.keys.size() == 6);
  double s = 0.0;
  for (const auto& a : t4.amplitudes) s += std::norm(a);
  CHECK(s == doctest::Approx(1.0).epsilon(1e-10));

  const auto t0 = slater_fock_amplitudes(CMatrix(4, 0), 0);
  REQUIRE(t0.keys.size() == 1);
  CHECK(t0.keys[0] == 0);
  CHECK(t0.amplitudes[0] == cplx(1.0));
}

TEST_CASE("slater amplitudes match the dense creation-operator state") {
  // |psi> of one flavor and layer, built here by brute force with N = 1 and read off
  const auto m = random_model(5, 3, 1);
  const CMatrix u = single_layer_orbitals(m, 2);
  const auto t = slater_fock_amplitudes(u, 2);
  for (std::size_t k = 0; k < t.keys.size(); ++k) {
    int a = -1, b = -1;
    for (int i = 0; i < 5; ++i)
      if (t.keys[k] >> i & 1) (a < 0 ? a : b) = i;
    const cplx det = u(a, 0) * u(b, 1) - u(a, 1) * u(b, 0);
    CHECK(std::abs(t.amplitudes[k] - det) < 1e-12);
  }
}

TEST_CASE("exact state norms and weights") {
  const auto m1 = chain(2, 1);
  const auto s0 = build_exact_state(m1, 0.0);
  CHECK(s0.norm() == doctest::Approx(1.0).epsilon(1e-14));
  for (double g : {0.1, 0.5, 1.0, 2.0, 5.0}) {
    const auto s = build_exact_state(m1, g);
    // two of four joint configurations are imbalanced, Sum d^2 = 2 for each
    CHECK(s.norm() == doctest::Approx(0.5 + 0.5 * std::exp(-2.0 * g)).epsilon(1e-13));
  }
  CHECK(build_exact_state(m1, 40.0).norm() == doctest::Approx(0.5).epsilon(1e-14));

  const auto m = ring3();
  const auto s = build_exact_state(m, 0.8);
  const int n_left = s.layer_charge(s.keys()[0], 0);
  const int n_right = s.layer_charge(s.keys()[0], 1);
  double previous = 1.0;
  for (std::uint64_t key : s.keys()) {
    const double w = s.dephasing_weight(key);
    CHECK(w > 0.0);
    CHECK(w <= 1.0);
    bool balanced = true;
    for (int d : s.imbalance(key)) balanced = balanced && d == 0;
    CHECK((w == 1.0) == balanced);
    CHECK(s.layer_charge(key, 0) == n_left);
    CHECK(s.layer_charge(key, 1) == n_right);
  }
  for (double g : {0.0, 0.3, 1.0, 3.0}) {
    const double nrm = build_exact_state(m, g).norm();
    CHECK(nrm <= previous + 1e-14);
    previous = nrm;
  }
}

TEST_CASE("budget refusal") {
  CHECK(exact_configuration_count(12, 6, 2) == doctest::Approx(std::pow(924.0, 4)));
  CHECK_THROWS_AS(build_exact_state(chain(12), 1.0), SizeLimit);
  try {
    build_exact_state(chain(12), 1.0);
  } catch (const SizeLimit& e) {
    CHECK(e.count() == doctest::Approx(std::pow(924.0, 4)));
  }
  ExactOptions tight;
  tight.budget = 10;
  CHECK_THROWS_AS(build_exact_state(ring3(), 1.0, tight), SizeLimit);
}

TEST_CASE("two-sided correlators agree with the dense oracle") {
  for (std::uint64_t seed : {1u, 2u}) {
    const auto m = random_model(3, seed);
    const int filling = natural_filling(m);
    const DenseFock fock(m, filling);
    for (double g : {0.0, 0.4, 1.7}) {
      const auto state = build_exact_state(m, g);
      const auto psi = fock.weighted(fock.psi(), [&](const std::vector<int>& d) {
        double s2 = 0.0;
        for (int x : d) s2 += x * x;
        return cplx(std::exp(-0.5 * g * s2));
      });
      CHECK(state.norm() == doctest::Approx(std::real(DenseFock::dot(psi, psi))).epsilon(1e-12));
      const auto ops = probe_operators(m);
      for (std::size_t i = 0; i < ops.size(); ++i)
        for (std::size_t j = 0; j < ops.size(); j += 3) {
          const auto c = exact_renyi2_correlator(state, m, ops[i], ops[j]);
          const cplx ref = dense_dephased(fock, g, {dense_op(ops[i], m.lattice), dense_op(ops[j], m.lattice)});
          CHECK(std::abs(c.full - ref) < 1e-11);
          const cplx ma = dense_dephased(fock, g, {dense_op(ops[i], m.lattice)});
          CHECK(std::abs(c.mean_a - ma) < 1e-11);
          CHECK(std::abs(c.connected - (c.full - c.mean_a * c.mean_b)) < 1e-12);
        }
    }
  }
}

TEST_CASE("fixed-field expectations agree with the dense oracle") {
  const auto m = random_model(3, 9);
  const DenseFock fock(m, natural_filling(m));
  const auto state = build_exact_state(m, 0.0);
  const auto ops = probe_operators(m);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> gauss(0.0, 0.8);
  for (int trial = 0; trial < 3; ++trial) {
    RVector phi(3);
    for (int i = 0; i < 3; ++i) phi(i) = gauss(rng);
    for (std::size_t i = 0; i < ops.size(); i += 2) {
      const std::array<ExactOperator, 2> pair = {exact_operator(ops[i], m), exact_operator(ops.back(), m)};
      const cplx v = exact_fixed_field_expectation(state, pair, phi);
      const cplx ref = dense_fixed_field(fock, phi, {dense_op(ops[i], m.lattice), dense_op(ops.back(), m.lattice)});
      CHECK(std::abs(v - ref) < 1e-11);
    }
  }
}

TEST_CASE("free limit matches single-particle Wick contractions") {
  const auto m = random_model(4, 21);
  const auto state = build_exact_state(m, 0.0);
  const auto orb = ground_orbitals(double_hamiltonian(m));
  const CMatrix g = free_projector(orb.p, 2);
  const auto ops = probe_operators(m);
  for (const auto& a : ops)
    for (const auto& b : ops) {
      const auto c = exact_renyi2_correlator(state, m, a, b);
      const auto w = free_wick(full_operator_matrix(a, m), full_operator_matrix(b, m), g);
      CHECK(std::abs(c.full - w.full) < 1e-12);
      CHECK(std::abs(c.connected - w.connected) < 1e-12);
    }
}

TEST_CASE("single-field insertion is the Gaussian field average") {
  const auto m = chain(2, 2);
  const auto state0 = build_exact_state(m, 0.0);
  const double g = 0.7;
  const auto state = build_exact_state(m, g);
  const auto bond = bond_bilinear(0, {1, 0}, PseudoSpin::s1, flavor_matrix("su2-x", 2));
  const auto onsite = onsite_bilinear(1, PseudoSpin::s3, flavor_matrix("su2-z", 2));
  for (const auto& [a, b] : {std::pair{bond, bond}, std::pair{onsite, bond}, std::pair{onsite, onsite}}) {
    const std::array<ExactOperator, 2> ops = {exact_operator(a, m), exact_operator(b, m)};
    const cplx num = gaussian_field_integral(2, g, 40, [&](const RVector& phi) {
      return exact_fixed_field_expectation(state0, ops, phi) * exact_fixed_field_overlap(state0, phi);
    });
    const cplx den =
        gaussian_field_integral(2, g, 40, [&](const RVector& phi) { return exact_fixed_field_overlap(state0, phi); });
    CHECK(std::abs(exact_expectation(state, ops, Insertion::single_field) - num / den) < 1e-10);
  }
  // onsite strings commute with the defect: both insertions coincide
  const std::array<ExactOperator, 2> on = {exact_operator(onsite, m), exact_operator(onsite, m)};
  CHECK(std::abs(exact_expectation(state, on, Insertion::single_field) -
                 exact_expectation(state, on, Insertion::two_sided)) < 1e-12);
}

TEST_CASE("selection rules and symmetry") {
  const auto m = chain(4, 2);
  const auto state = build_exact_state(m, 1.3);
  const auto z = flavor_matrix("su2-z", 2);
  const auto x = flavor_matrix("su2-x", 2);
  for (int mu : {1, 2}) {
    const auto a = onsite_bilinear(0, pseudo_spin_from_mu(mu), z);
    for (int nu = 0; nu < 4; ++nu) {
      const auto c = exact_renyi2_correlator(state, m, a, onsite_bilinear(2, pseudo_spin_from_mu(nu), z));
      CHECK(std::abs(c.mean_a) < 1e-13);
      CHECK(std::abs(c.full - c.connected) < 1e-13);
    }
  }
  // flavor SU(2): Omega = T^z and T^x give identical correlators
  for (int mu = 0; mu < 4; ++mu) {
    const auto sp = pseudo_spin_from_mu(mu);
    const auto cz = exact_renyi2_correlator(state, m, onsite_bilinear(0, sp, z), onsite_bilinear(3, sp, z));
    const auto cx = exact_renyi2_correlator(state, m, onsite_bilinear(0, sp, x), onsite_bilinear(3, sp, x));
    CHECK(std::abs(cz.full - cx.full) < 1e-12);
    // Hermitian onsite operators at distinct sites commute: real correlator
    CHECK(std::abs(cz.full.imag()) < 1e-12);
  }
}

TEST_CASE("golden two-site value") {
  // A = B = c^dag sigma^1 Omega c, Omega = diag(1, -1), sites (0, 1), N = 2, g = 1
  const auto m = chain(2, 2);
  const auto state = build_exact_state(m, 1.0);
  CMatrix omega = CMatrix::Zero(2, 2);
  omega(0, 0) = 1.0;
  omega(1, 1) = -1.0;
  const auto a = onsite_bilinear(0, PseudoSpin::s1, omega);
  const auto b = onsite_bilinear(1, PseudoSpin::s1, omega);
  const auto c = exact_renyi2_correlator(state, m, a, b);
  const DenseFock fock(m, 1);
  const cplx ref = dense_dephased(fock, 1.0, {dense_op(a, m.lattice), dense_op(b, m.lattice)});
  CHECK(std::abs(c.full - ref) < 1e-13);
  CHECK(std::abs(c.full - cplx(1.2822574310204577)) < 1e-12);
  CHECK(std::abs(c.connected - c.full) < 1e-14);
}

TEST_CASE("four-point functions") {
  const auto m = ring3();
  const auto state = build_exact_state(m, 0.9);
  const auto id = flavor_matrix("identity", 2);
  const auto raise0 = onsite_bilinear(0, PseudoSpin::raise, id);
  const auto lower0 = onsite_bilinear(0, PseudoSpin::lower, id);
  const auto raise2 = onsite_bilinear(2, PseudoSpin::raise, id);
  const auto lower2 = onsite_bilinear(2, PseudoSpin::lower, id);
  // X = O(r) O^dag(0) with O = raise: X^dag X = O(0) O^dag(r) O(r) O^dag(0)
  const std::array<BilinearSpec, 4> xx = {raise0, lower2, raise2, lower0};
  const cplx v = exact_fourpoint(state, m, xx);
  CHECK(std::abs(v.imag()) < 1e-12);
  CHECK(v.real() >= 0.0);
  const DenseFock fock(m, natural_filling(m));
  std::vector<DenseOp> dense;
  for (const auto& o : xx) dense.push_back(dense_op(o, m.lattice));
  CHECK(std::abs(v - dense_dephased(fock, 0.9, dense)) < 1e-11);

  // diagonal operators: a polynomial in occupations averaged with the dephased weights
  // c^dag sigma^0 c = n_L + 1 - n_R per flavor
  const auto n0 = onsite_bilinear(0, PseudoSpin::s0, id);
  const auto n1 = onsite_bilinear(1, PseudoSpin::s0, id);
  const std::array<BilinearSpec, 4> dd = {n0, n1, n0, n1};
  double num = 0.0;
  for (std::size_t k = 0; k < state.size(); ++k) {
    const auto d = state.imbalance(state.keys()[k]);
    const double w = std::norm(state.base_amplitudes()[k]) * state.dephasing_weight(state.keys()[k]);
    num += w * std::pow(d[0] + 2, 2) * std::pow(d[1] + 2, 2);
  }
  CHECK(std::abs(exact_fourpoint(state, m, dd) - cplx(num / state.norm())) < 1e-12);
}
