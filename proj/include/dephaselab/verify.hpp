// Copyright 2026 The dephaselab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <json.hpp>

#include "dephaselab/model.hpp"
#include "dephaselab/sampler.hpp"

namespace dephaselab {

/// Per-configuration sweep of the inequality and positivity checks over random models.
struct VerifyConfig {
  int n_models = 20;
  int configs_per_model = 500;
  int min_sites = 2;
  int max_sites = 12;
  double g_max = 10.0;  // g is drawn uniformly from (0, g_max]
  int n_flavors = 2;
  int n_colors = 1;
  bool bonds = true;  // also check delta = 1 bonds
  int n_burnin = 200;
  int sweeps_between = 2;
  std::uint64_t seed = 7;
  int threads = 1;
  /// One JSON record per configuration when set.
  std::optional<std::filesystem::path> diagnostics_path;
};

struct VerifyModelResult {
  int n_sites = 0;
  std::uint64_t model_seed = 0;
  double g = 0.0;
  int regenerated = 0;  // draws rejected for a degenerate ground state
  ChainDiagnostics diagnostics;
  std::uint64_t onsite_checks = 0;
  std::uint64_t bond_checks = 0;
  std::uint64_t onsite_violations = 0;
  std::uint64_t bond_violations = 0;
  double min_onsite_margin = 0.0;
  double min_bond_margin = 0.0;

  nlohmann::json to_json() const;
};

struct VerifyReport {
  std::vector<VerifyModelResult> models;
  std::uint64_t configs = 0;
  std::uint64_t onsite_checks = 0;
  std::uint64_t bond_checks = 0;
  std::uint64_t violations = 0;  // every kind: margins, reality, positivity, sigma^1
  std::uint64_t onsite_violations = 0;
  std::uint64_t bond_violations = 0;
  double min_onsite_margin = 0.0;
  double min_bond_margin = 0.0;
  double min_cstar = 0.0;
  double min_weight_real = 1.0;
  double max_weight_imag = 0.0;
  double max_amplitude_imag_ratio = 0.0;
  double max_sigma1_residual = 0.0;

  bool passed() const { return violations == 0; }
  nlohmann::json to_json() const;
};

/// Random Hermitian model of `n_sites` sites on an open chain layout.
ModelSpec random_model_spec(int n_sites, std::uint64_t seed, int n_flavors, int n_colors);

VerifyReport run_verify(const VerifyConfig& config);

}  // namespace dephaselab
