// Copyright 2026 The dephaselab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "dephaselab/linalg.hpp"
#include "dephaselab/model.hpp"

namespace dephaselab {

/// Charge-neutral reference density per site per flavor coupled to by the plain defect.
inline constexpr double kReferenceDensity = 1.0;

inline constexpr double kRealityTol = 1e-10;      // |Im| / |amp| reported as a violation
inline constexpr double kIntegrityTol = 1e-8;     // |Im| / |amp| that aborts as a convention bug
inline constexpr double kMarginTol = 1e-10;       // inequality margins
inline constexpr double kPositivityTol = 1e-12;   // C* and weight signs
inline constexpr double kSigma1Tol = 1e-8;        // sigma^1 conjugation residual

/// Fixed data for one model: orbitals (with colors folded in), generators and flavor power.
///
/// Mode layout of every matrix here: ((2 site + spin) N_c + color).
struct DefectKernel {
  int n_sites = 0;
  int n_colors = 1;
  int n_flavor_species = 1;  // N_f; equals N when N_c = 1
  int flavor_power = 1;      // power of the per-flavor amplitude in the weight
  double g = 0.0;
  CMatrix p;                          // (2 n N_c) x (n N_c)
  std::vector<CMatrix> generators;    // T^I for N_c > 1; empty for plain dephasing
  Lattice lattice;

  bool colored() const { return n_colors > 1; }
  int channels() const { return colored() ? static_cast<int>(generators.size()) : 1; }
  int dim() const { return 2 * n_sites * n_colors; }
  int block() const { return 2 * n_colors; }
};

DefectKernel make_kernel(const TightBindingModel& model, const SlaterOrbitals& orbitals, double g);

/// Auxiliary field on the tau = 0 slice: one row per channel (1 plain, N_c^2 - 1 colored).
struct DefectField {
  RMatrix phi;
  double g = 0.0;

  static DefectField zeros(const DefectKernel& kernel);
};

/// Site-diagonal unitary blocks of the defect, identical on both pseudo-spins.
struct DefectMatrices {
  int n_colors = 1;
  std::vector<CMatrix> v;      // per site, N_c x N_c: exp(-2 i phi.T)
  std::vector<CMatrix> vhalf;  // principal square root, exp(-i phi.T)
  cplx compensation{1.0, 0.0};  // per-flavor neutralizing phase, exp(+2 i d Sum_i phi_i)

  /// Dense matrices in the kernel layout (for tests and diagnostics).
  CMatrix dense_v() const;
  CMatrix dense_vhalf() const;
};

DefectMatrices defect_matrices(const DefectField& field, const DefectKernel& kernel);

struct DefectWeight {
  double log_magnitude = 0.0;  // log |weight| including the Gaussian part
  cplx phase{1.0, 0.0};        // unit phase of the full weight, from the unprojected amplitude
  bool compensated = false;
  bool node = false;           // P^dag V P singular: weight exactly zero
  double gaussian_part = 0.0;  // -Sum phi^2 / g
  double amplitude = 0.0;      // real per-flavor amplitude (0 at a node)
  double amplitude_imag_ratio = 0.0;  // |Im| / |amp| of the per-flavor amplitude
  int flavor_power = 1;

  /// Signed weight value; may underflow to 0 for large fields.
  double value() const;
  int sign() const;
};

/// Weight of one field. Throws IntegrityError if the per-flavor amplitude is not real
/// to kIntegrityTol.
DefectWeight config_weight(const DefectKernel& kernel, const DefectField& field, const DefectMatrices& mats);

/// <c^dag_b c_a> (less) and <c_a c^dag_b> (greater) across the defect at tau = 0.
struct DefectGreens {
  CMatrix less;
  CMatrix greater;
  int block = 2;

  auto less_block(int a, int b) const { return less.block(a * block, b * block, block, block); }
  auto greater_block(int a, int b) const { return greater.block(a * block, b * block, block, block); }
};

/// Nullopt at a node (singular overlap), where no measurement is possible.
std::optional<DefectGreens> defect_greens(const DefectKernel& kernel, const DefectMatrices& mats);

/// Weight and Green's functions from one decomposition.
struct DefectEvaluation {
  DefectMatrices mats;
  DefectWeight weight;
  std::optional<DefectGreens> greens;
};

DefectEvaluation evaluate_field(const DefectKernel& kernel, const DefectField& field, bool with_greens = true);

/// Wick-contracted correlators of one field configuration.
struct FieldCorrelator {
  cplx connected;
  cplx mean_a;
  cplx mean_b;
  cplx full() const { return connected + mean_a * mean_b; }
};

FieldCorrelator correlator_fixed_field(const DefectGreens& greens, const DefectKernel& kernel,
                                       const BilinearSpec& a, const BilinearSpec& b);

/// tr(Omega^2) * tr[(s1) G>_{x,y} (s1) G<_{y,x}]: connected correlator of c^dag s1 Omega c.
/// Real part returned; `imag_residual` receives |Im| when given.
double cstar_fixed_field(const DefectGreens& greens, const DefectKernel& kernel, int x, int y,
                         const CMatrix& omega, double* imag_residual = nullptr);

/// max |(1 (x) s1) G< (1 (x) s1) - (G>)^dag|
double sigma1_residual(const DefectGreens& greens, const DefectKernel& kernel);

struct PairCheck {
  std::size_t index = 0;  // position in the checked pair list
  bool bond = false;
  double abs_c = 0.0;
  double bound = 0.0;
  double margin = 0.0;
  /// Matrix-level Cauchy-Schwarz pieces: |tr(UV)| and sqrt(tr UU^dag) sqrt(tr VV^dag).
  double cs_lhs = 0.0;
  double cs_rhs = 0.0;
};

struct ConfigReport {
  std::vector<PairCheck> pairs;
  double weight_imag_ratio = 0.0;
  double weight_value = 0.0;
  double weight_real_part = 1.0;  // Re(phase): -1 or +1 up to rounding, 0 at a node
  double min_cstar = 0.0;
  double sigma1_residual = 0.0;
  double min_margin = 0.0;
  int violations = 0;
  bool node = false;

  nlohmann::json to_json() const;
};

/// A pair of operators with identical spin, flavor matrix and offset whose correlator is
/// checked against its C* bound.
struct CheckedPair {
  BilinearSpec a;
  BilinearSpec b;
};

ConfigReport check_config(const DefectGreens& greens, const DefectWeight& weight, const DefectKernel& kernel,
                          std::span<const CheckedPair> pairs);

/// All onsite pairs (x, y) for every mu in {0..3} and every SU(N_f) generator, plus bonds with
/// the given offsets when `bond_offsets` is non-empty.
std::vector<CheckedPair> all_checked_pairs(const DefectKernel& kernel,
                                           std::span<const std::array<int, 2>> bond_offsets);

}  // namespace dephaselab
