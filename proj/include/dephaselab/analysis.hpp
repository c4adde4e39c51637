// Copyright 2026 The dephaselab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dephaselab/linalg.hpp"
#include "dephaselab/model.hpp"

namespace dephaselab {

/// One correlator value between sites x and y.
struct PairValue {
  int x = 0;
  int y = 0;
  double value = 0.0;
  double error = 0.0;
};

struct ProfilePoint {
  double r = 0.0;
  double value = 0.0;
  double error = 0.0;
  int count = 0;
};

struct Profile {
  std::vector<ProfilePoint> points;
  std::vector<std::string> notices;

  nlohmann::json to_json() const;
  /// Plot-ready "r,value,error" rows.
  std::string to_csv() const;
};

/// Averages pair values by lattice distance (minimal image on periodic lattices). Errors
/// are propagated as independent: sqrt(Sum e^2) / count.
Profile distance_profile(const std::vector<PairValue>& table, const Lattice& lattice);

/// Mean over realizations at each distance. The error is the standard error of the
/// realization spread when at least two realizations share a distance, otherwise the
/// propagated statistical error.
Profile combine_profiles(const std::vector<Profile>& realizations);

struct CoarseGrained {
  CMatrix values;  // averaged C(x, y); entries without data are NaN
  Profile profile;
  std::vector<std::string> notices;
};

/// Averages C(x, y) over x' and y' within `delta` lattice steps (per axis) of each end,
/// independently at both ends. `values` is n x n with NaN marking missing entries.
/// Pairs closer than 2 delta + 1 are flagged in the notices.
CoarseGrained coarse_grain(const CMatrix& values, const Lattice& lattice, int delta);

enum class DecayForm { power, exponential };
std::string to_string(DecayForm f);

struct DecayFit {
  DecayForm preferred = DecayForm::power;
  // power law A / r^(2 Delta)
  double delta = 0.0;
  double delta_error = 0.0;
  double power_prefactor = 0.0;
  double power_residual = 0.0;
  // exponential A exp(-r / xi)
  double xi = 0.0;
  double xi_error = 0.0;
  double exp_prefactor = 0.0;
  double exp_residual = 0.0;
  double r_min = 0.0;
  double r_max = 0.0;
  int n_points = 0;
  std::vector<std::string> notices;

  nlohmann::json to_json() const;
};

struct FitWindow {
  double r_min = 2.0;
  std::optional<double> r_max;  // default: linear system size / 3
};

/// Log-log and log-linear least squares on the profile within the window. Throws
/// InvalidInput with fewer than four usable points.
DecayFit fit_decay(const Profile& profile, double system_size, const FitWindow& window = {});

/// Values on the separations of a periodic lx x ly lattice, index dx + lx * dy.
struct SeparationTable {
  int lx = 1;
  int ly = 1;
  std::vector<cplx> values;
};

/// Momentum-space table on the mesh k = 2 pi (mx / lx, my / ly), same index layout.
struct MomentumTable {
  int lx = 1;
  int ly = 1;
  std::vector<cplx> values;

  std::array<double, 2> momentum(int index) const;
};

/// S(k) = Sum_d exp(-i k.d) C(d).
MomentumTable structure_factor(const SeparationTable& table);
/// C(d) = (1 / N) Sum_k exp(i k.d) S(k).
SeparationTable inverse_structure_factor(const MomentumTable& table);

/// Average of C(x, y) over all pairs with displacement y - x (periodic lattices).
SeparationTable translation_average(const CMatrix& values, const Lattice& lattice);

/// Sum_{x,y} exp(-i k (x - y)) C(x, y) along the first axis, without normalization. Positions
/// are given per row of `values`.
cplx pair_structure_factor(const CMatrix& values, const std::vector<double>& positions, double k);

struct GoldstoneInput {
  std::vector<double> k;     // momenta in (0, pi]
  std::vector<cplx> jj;      // <J(k) J(-k)>
  std::vector<double> r;     // distance mesh
  std::vector<cplx> oo;      // <O(r) O^dag(0)>
  std::vector<double> fourpoint;  // <(O(r) O^dag(0))^dag O(r) O^dag(0)>
  int q = 1;
};

struct GoldstonePoint {
  double k = 0.0;
  double r_target = 0.0;
  double r_used = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;
  bool skipped = false;
};

struct GoldstoneReport {
  std::vector<GoldstonePoint> points;
  double min_margin = 0.0;
  std::vector<std::string> notices;

  nlohmann::json to_json() const;
};

/// margin(k) = k^2 JJ(k) - 4 q^2 sin^2(k r / 2) |OO(r)|^2 / fourpoint(r) at the mesh
/// distance nearest to pi / k.
GoldstoneReport goldstone_bound_check(const GoldstoneInput& input);

}  // namespace dephaselab
