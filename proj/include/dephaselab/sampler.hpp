// Copyright 2026 The dephaselab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "dephaselab/defect.hpp"

namespace dephaselab {

/// A measured operator pair <O_a O_b>. `distance` is only used to label output rows.
struct PairSpec {
  std::string label;
  BilinearSpec a;
  BilinearSpec b;
  double distance = 0.0;
};

/// Whether a pair can be bounded by C*: same spin, flavor matrix and offset, traceless
/// flavor matrix, no antisymmetrization.
bool pair_checkable(const PairSpec& p);

struct SamplerConfig {
  int n_sweeps = 10000;  // retained sweeps
  int n_burnin = 1000;
  int n_bins = 50;
  int measure_every = 1;
  double proposal_sigma = 0.0;  // 0 selects sqrt(g/2)
  bool auto_tune = false;       // adapts sigma during burn-in only
  std::uint64_t seed = 1;
  std::vector<PairSpec> pairs;
  /// Extra per-configuration inequality checks beyond the measured pairs.
  std::vector<CheckedPair> checks;
};

/// Validates the sampler settings; throws InvalidInput.
void validate(const SamplerConfig& config);

/// Chain state: the field and its weight.
struct ChainState {
  DefectField field;
  DefectWeight weight;
  double sigma = 0.0;
  std::uint64_t proposals = 0;
  std::uint64_t accepted = 0;
  std::uint64_t nodes_rejected = 0;
  double max_amplitude_imag_ratio = 0.0;
};

ChainState initial_state(const DefectKernel& kernel, double sigma);

/// One sweep of single-site Gaussian proposals over every (channel, site).
/// Throws SignProblem when an odd flavor power produces a negative weight.
void metropolis_step(ChainState& state, const DefectKernel& kernel, std::mt19937_64& rng);

/// Standard errors of the mean at block sizes 1, 2, 4, ... while at least 16 blocks remain.
struct BinningLevel {
  int block_size = 1;
  int n_blocks = 0;
  double error_re = 0.0;
  double error_im = 0.0;
};

std::vector<BinningLevel> binning_analysis(const std::vector<cplx>& series);

/// Diagnostics aggregated over every checked configuration of a run.
struct ChainDiagnostics {
  std::uint64_t configs_checked = 0;
  std::uint64_t pair_checks = 0;
  std::uint64_t violations = 0;
  double min_margin = 0.0;
  double min_cstar = 0.0;
  double min_weight_real = 1.0;
  double max_weight_imag = 0.0;
  double max_sigma1_residual = 0.0;
  double max_amplitude_imag_ratio = 0.0;
  std::uint64_t nodes_rejected = 0;
  double acceptance = 0.0;
  double sigma = 0.0;

  void absorb(const ConfigReport& report);
  nlohmann::json to_json() const;
};

struct MeasurementSet {
  std::vector<std::string> labels;   // observable names, "<pair>/<quantity>"
  std::vector<double> distances;
  std::vector<std::vector<cplx>> bins;          // [observable][bin]
  std::vector<std::vector<BinningLevel>> binning;  // [observable]
  std::vector<std::uint64_t> pair_violations;  // [pair], margins below tolerance
  std::uint64_t n_measurements = 0;
  bool exact = false;  // g = 0: no sampling, values exact
  ChainDiagnostics diagnostics;
  nlohmann::json metadata;

  nlohmann::json to_json() const;
  static MeasurementSet from_json(const nlohmann::json& j);
  void write_json(const std::filesystem::path& path) const;
  void write_bins_csv(const std::filesystem::path& path) const;
};

/// Called once per checked configuration when given.
using ReportSink = std::function<void(const ConfigReport&, const DefectField&)>;

/// Quantities stored per pair, in order.
inline constexpr std::array<const char*, 5> kPairQuantities = {"C", "abs", "bound", "mean_a", "mean_b"};

MeasurementSet run_chain(const DefectKernel& kernel, const SamplerConfig& config, const ReportSink& sink = {});

/// Independent chains with seeds derived from config.seed, run on up to `threads` threads.
std::vector<MeasurementSet> run_chains(const DefectKernel& kernel, const SamplerConfig& config, int n_chains,
                                       int threads = 1);

struct CorrelatorEstimate {
  std::string label;
  double distance = 0.0;
  cplx mean;
  double error = 0.0;  // standard error, sqrt(var_re + var_im)
  double error_re = 0.0;
  double error_im = 0.0;
  std::uint64_t n_samples = 0;
  std::uint64_t violation_count = 0;
};

/// Binned means of every observable; independent chains are combined by inverse-variance
/// weighting (a plain average when any chain has zero error). Throws InvalidInput on
/// incompatible label sets.
std::vector<CorrelatorEstimate> merge_bins(const std::vector<MeasurementSet>& sets);

/// Looks up an estimate by label; throws InvalidInput when absent.
const CorrelatorEstimate& find_estimate(const std::vector<CorrelatorEstimate>& table, const std::string& label);

/// Connected estimate C - mean_a mean_b of a pair, with linearized error.
CorrelatorEstimate connected_estimate(const std::vector<CorrelatorEstimate>& table, const std::string& pair);

}  // namespace dephaselab
