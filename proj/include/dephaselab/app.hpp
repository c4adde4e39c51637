// Copyright 2026 The dephaselab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <exception>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dephaselab/analysis.hpp"
#include "dephaselab/config.hpp"
#include "dephaselab/exact.hpp"

namespace dephaselab {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitSizeLimit = 3,
  kExitDegenerate = 4,
  kExitSignProblem = 5,
  kExitIntegrity = 6,
  kExitViolations = 7,
};

/// Exit code for an in-flight exception.
int exit_code_for(const std::exception_ptr& error);

/// Thread count from DEPHASELAB_THREADS (default 1).
int threads_from_env();

struct AppOptions {
  int threads = 1;
  std::ostream* log = nullptr;  // progress lines; silent when null
};

inline constexpr std::string_view kCommands[] = {"exact", "sample", "verify", "analyze", "model-info"};

/// Runs one subcommand, writing its artifacts into cfg.output_dir. Returns the exit code;
/// module errors are mapped to their codes and described on the log.
int run(std::string_view command, const RunConfig& cfg, const AppOptions& options = {});

/// Loads the config file and runs the command; configuration errors exit with kExitConfig.
int run_file(std::string_view command, const std::filesystem::path& config_path, const AppOptions& options = {});

/// Model built from the config, including a custom matrix file.
TightBindingModel build_configured_model(const RunConfig& cfg);

/// Exact values of the configured pairs: rows "<pair>/C" (two-sided insertion),
/// "<pair>/single_field" for bonds, "<pair>/connected" and "<pair>/cstar" for checkable
/// onsite pairs.
struct ExactRow {
  std::string label;
  double distance = 0.0;
  cplx value;
};
std::vector<ExactRow> exact_rows(const ExactDoubledState& state, const TightBindingModel& model,
                                 const std::vector<PairSpec>& pairs);

/// Goldstone checker input from the exact oracle on a chain: bond currents of the strong
/// charge, O = c^dag sigma^+ c (charge 2) referenced at site 0.
GoldstoneInput exact_goldstone_input(const ExactDoubledState& state, const TightBindingModel& model);

/// Metadata block embedded in every output file.
nlohmann::json run_metadata(const RunConfig& cfg, std::string_view command);

}  // namespace dephaselab
