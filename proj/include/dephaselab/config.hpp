// Copyright 2026 The dephaselab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dephaselab/model.hpp"
#include "dephaselab/sampler.hpp"
#include "dephaselab/verify.hpp"

namespace dephaselab {

enum class Route { exact, mc, both };
Route parse_route(std::string_view tag);
std::string to_string(Route r);

struct AnalyzeConfig {
  std::optional<std::filesystem::path> input;  // results.json of an earlier run
  double fit_r_min = 2.0;
  std::optional<double> fit_r_max;
  int coarse_delta = 0;
  bool goldstone = true;  // Goldstone report from the exact oracle
  int goldstone_q = 2;
};

/// A fully validated run description. Keys outside any section belong to [run].
///
///   [model]    geometry L Ly boundary t twist mass disorder_seed disorder_strength N N_c h_file
///   [run]      g route output chains exact_budget filling
///   [sampler]  sweeps burnin bins measure_every sigma auto_tune seed
///   [measure]  pair (repeatable): "x y mu omega [offset=dx,dy] [current] [label=name]"
///              profile (repeatable): "x0 mu[,mu...] omega [offset=dx,dy]", pairs (x0, y) for all y
///   [verify]   models configs min_sites max_sites g_max bonds colors burnin sweeps_between seed diagnostics
///   [analyze]  input fit_rmin fit_rmax coarse_delta goldstone q
struct RunConfig {
  ModelSpec model;
  std::optional<std::filesystem::path> h_file;
  double g = 1.0;
  Route route = Route::both;
  std::filesystem::path output_dir = "out";
  int n_chains = 2;
  double exact_budget = 1e7;
  std::optional<int> filling;
  SamplerConfig sampler;
  VerifyConfig verify;
  AnalyzeConfig analyze;
  std::vector<std::string> pair_lines;     // as written, for the echo
  std::vector<std::string> profile_lines;

  /// Resolved configuration with defaults filled in.
  nlohmann::json to_json() const;
  /// FNV-1a hash of to_json().dump(), hex encoded.
  std::string hash() const;
};

/// Parses and validates the configuration text. Relative paths resolve against `base_dir`.
/// Throws ConfigError with the offending line on any problem.
RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});

RunConfig load_config(const std::filesystem::path& path);

/// Edit distance used for "did you mean" suggestions.
std::size_t levenshtein(std::string_view a, std::string_view b);

/// Parses one [measure] pair line against a built model.
PairSpec parse_pair(std::string_view line, const TightBindingModel& model);

std::uint64_t fnv1a(std::string_view data);

}  // namespace dephaselab
