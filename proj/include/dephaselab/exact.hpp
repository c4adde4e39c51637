// Copyright 2026 The dephaselab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "dephaselab/linalg.hpp"
#include "dephaselab/model.hpp"

namespace dephaselab {

inline constexpr double kDefaultExactBudget = 1e7;

/// Amplitudes of a single Slater determinant over occupation bitstrings.
///
/// Bit i of a key is site i. The basis state of a key with occupied sites
/// s_1 < s_2 < ... < s_M is c^dag_{s_1} c^dag_{s_2} ... c^dag_{s_M} |0>, and its
/// amplitude is det(U[s_1..s_M, 0..M-1]). Keys are listed in increasing order.
struct FockAmplitudeTable {
  int n_sites = 0;
  int n_particles = 0;
  std::vector<std::uint64_t> keys;
  std::vector<cplx> amplitudes;
};

FockAmplitudeTable slater_fock_amplitudes(const CMatrix& orbitals, int n_particles,
                                          double budget = kDefaultExactBudget);

/// How the two half-defects e^{-H_eff} sandwich operator strings.
enum class Insertion {
  /// <Psi0| e^{-H_eff} X e^{-H_eff} |Psi0>: the state-based definition.
  two_sided,
  /// One Hubbard-Stratonovich field shared by both halves: the phi-integral of
  /// <Psi0| V^{1/2}_phi X V^{1/2}_phi |Psi0>. Agrees with two_sided for onsite strings.
  single_field,
};

/// The doubled state |Psi0>_L (x) |Psi0^*>_R over all flavors in the left/right Fock basis.
///
/// Global mode of (flavor f, layer l in {L=0, R=1}, site i) is (2 f + l) n + i. Joint keys are
/// canonical ascending creation strings over the global modes; the joint amplitude is a plain
/// product of block amplitudes (left block from U, right block from conj(U)).
class ExactDoubledState {
 public:
  ExactDoubledState(const TightBindingModel& model, int filling, double g, double budget);

  int n_sites() const { return m_n_sites; }
  int n_flavors() const { return m_n_flavors; }
  int filling() const { return m_filling; }
  double g() const { return m_g; }
  std::size_t size() const { return m_keys.size(); }
  std::span<const std::uint64_t> keys() const { return m_keys; }
  std::span<const cplx> base_amplitudes() const { return m_base; }

  /// <<Psi(g)|Psi(g)>> with |Psi(g)>> = e^{-H_eff}|Psi(0)>>.
  double norm() const { return m_norm; }

  /// Sum_i (n_{i,L} - n_{i,R})^2 summed over flavors, and the site-resolved imbalance.
  int squared_imbalance(std::uint64_t key) const;
  std::vector<int> imbalance(std::uint64_t key) const;

  /// e^{-g Sum_i (n_{i,L}-n_{i,R})^2}: the weight this configuration carries in the norm.
  double dephasing_weight(std::uint64_t key) const;

  int layer_charge(std::uint64_t key, int layer) const;

  /// Index of a key, or -1.
  std::ptrdiff_t find(std::uint64_t key) const;

  int global_mode(int flavor, int layer, int site) const { return (2 * flavor + layer) * m_n_sites + site; }

 private:
  int m_n_sites;
  int m_n_flavors;
  int m_filling;
  double m_g;
  std::vector<std::uint64_t> m_keys;
  std::vector<cplx> m_base;
  std::unordered_map<std::uint64_t, std::size_t> m_index;
  std::vector<std::uint64_t> m_left_mask;   // per site, all flavors
  std::vector<std::uint64_t> m_right_mask;
  std::vector<std::uint64_t> m_layer_mask;  // [L, R]
  double m_norm = 0.0;
};

struct ExactOptions {
  double budget = kDefaultExactBudget;
  /// Left-layer filling per flavor; defaults to the number of negative eigenvalues of h
  /// (the sector selected by the half-filled doubled ground state).
  std::optional<int> filling;
};

/// Joint configuration count C(n, M)^(2N) that build_exact_state would enumerate.
double exact_configuration_count(int n_sites, int filling, int n_flavors);

ExactDoubledState build_exact_state(const TightBindingModel& model, double g, const ExactOptions& options = {});

/// An operator in the pseudo-spin representation, ready for Fock-space application.
struct ExactOperator {
  std::vector<BilinearTerm> terms;
  CMatrix omega;
};

ExactOperator exact_operator(const BilinearSpec& op, const TightBindingModel& model);

/// <<Psi(g)| X_1 X_2 ... X_k |Psi(g)>> / <<Psi(g)|Psi(g)>> under the chosen insertion.
cplx exact_expectation(const ExactDoubledState& state, std::span<const ExactOperator> ops,
                       Insertion insertion = Insertion::two_sided);

/// <Psi0| V^{1/2} X V^{1/2} |Psi0> / <Psi0| V |Psi0> for a fixed plain defect field, with
/// V = prod_i exp(-2 i phi_i (n_{i,L} - n_{i,R})). Dephasing strength of `state` is ignored.
cplx exact_fixed_field_expectation(const ExactDoubledState& state, std::span<const ExactOperator> ops,
                                   const RVector& phi);

/// <Psi0| V |Psi0> for the same V (the charge-neutral defect overlap of all flavors).
cplx exact_fixed_field_overlap(const ExactDoubledState& state, const RVector& phi);

struct ExactCorrelator {
  cplx full;
  cplx connected;
  cplx mean_a;
  cplx mean_b;
};

ExactCorrelator exact_renyi2_correlator(const ExactDoubledState& state, const TightBindingModel& model,
                                        const BilinearSpec& a, const BilinearSpec& b,
                                        Insertion insertion = Insertion::two_sided);

cplx exact_fourpoint(const ExactDoubledState& state, const TightBindingModel& model,
                     std::span<const BilinearSpec, 4> ops, Insertion insertion = Insertion::two_sided);

}  // namespace dephaselab
