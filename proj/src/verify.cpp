// Copyright 2026 The dephaselab Authors
// SPDX-License-Identifier: Apache-2.0

#include "dephaselab/verify.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <thread>

#include "dephaselab/errors.hpp"

namespace dephaselab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kMaxRedraws = 20;

struct ModelRun {
  VerifyModelResult result;
  std::vector<std::string> lines;  // diagnostics records
};

ModelRun verify_one(const VerifyConfig& cfg, int index) {
  std::mt19937_64 rng(cfg.seed + 0x100000001b3ULL * static_cast<std::uint64_t>(index));
  std::uniform_int_distribution<int> size_dist(cfg.min_sites, cfg.max_sites);
  std::uniform_real_distribution<double> g_dist(0.0, cfg.g_max);

  ModelRun run;
  VerifyModelResult& res = run.result;
  std::optional<TightBindingModel> model;
  std::optional<SlaterOrbitals> orbitals;
  for (int attempt = 0; attempt < kMaxRedraws && !orbitals; ++attempt) {
    res.n_sites = size_dist(rng);
    res.model_seed = rng();
    model = build_model(random_model_spec(res.n_sites, res.model_seed, cfg.n_flavors, cfg.n_colors));
    try {
      orbitals = ground_orbitals(double_hamiltonian(*model));
    } catch (const DegenerateGroundState&) {
      ++res.regenerated;
    }
  }
  if (!orbitals) throw DegenerateGroundState("could not draw a gapped random model", {});
  do res.g = cfg.g_max - g_dist(rng);  // (0, g_max]
  while (res.g <= 0.0);

  const DefectKernel kernel = make_kernel(*model, *orbitals, res.g);
  SamplerConfig sc;
  sc.n_burnin = cfg.n_burnin;
  sc.measure_every = cfg.sweeps_between;
  sc.n_sweeps = cfg.configs_per_model * cfg.sweeps_between;
  sc.n_bins = 1;
  sc.seed = rng();
  sc.auto_tune = true;
  const std::array<int, 2> unit_bond{1, 0};
  sc.checks = all_checked_pairs(kernel, cfg.bonds ? std::span<const std::array<int, 2>>(&unit_bond, 1)
                                                 : std::span<const std::array<int, 2>>());

  res.min_onsite_margin = kInf;
  res.min_bond_margin = kInf;
  std::uint64_t config_index = 0;
  auto sink = [&](const ConfigReport& rep, const DefectField& field) {
    for (const auto& pc : rep.pairs) {
      const bool bad = pc.margin < -kMarginTol || pc.cs_lhs > pc.cs_rhs + kMarginTol;
      if (pc.bond) {
        ++res.bond_checks;
        res.bond_violations += bad;
        res.min_bond_margin = std::min(res.min_bond_margin, pc.margin);
      } else {
        ++res.onsite_checks;
        res.onsite_violations += bad;
        res.min_onsite_margin = std::min(res.min_onsite_margin, pc.margin);
      }
    }
    if (cfg.diagnostics_path) {
      nlohmann::json j = rep.to_json();
      j["model"] = index;
      j["config"] = config_index;
      j["g"] = res.g;
      j["phi"] = std::vector<double>(field.phi.data(), field.phi.data() + field.phi.size());
      run.lines.push_back(j.dump());
    }
    ++config_index;
  };
  const MeasurementSet set = run_chain(kernel, sc, sink);
  res.diagnostics = set.diagnostics;
  return run;
}

nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

}  // namespace

ModelSpec random_model_spec(int n_sites, std::uint64_t seed, int n_flavors, int n_colors) {
  ModelSpec spec;
  spec.geometry = Geometry::random;
  spec.lx = n_sites;
  spec.ly = 1;
  spec.disorder_seed = seed;
  spec.n_flavors = n_flavors;
  spec.n_colors = n_colors;
  return spec;
}

nlohmann::json VerifyModelResult::to_json() const {
  return {{"n_sites", n_sites},
          {"model_seed", model_seed},
          {"g", g},
          {"regenerated", regenerated},
          {"onsite_checks", onsite_checks},
          {"bond_checks", bond_checks},
          {"onsite_violations", onsite_violations},
          {"bond_violations", bond_violations},
          {"min_onsite_margin", finite_or_null(min_onsite_margin)},
          {"min_bond_margin", finite_or_null(min_bond_margin)},
          {"diagnostics", diagnostics.to_json()}};
}

nlohmann::json VerifyReport::to_json() const {
  nlohmann::json models_json = nlohmann::json::array();
  for (const auto& m : models) models_json.push_back(m.to_json());
  return {{"passed", passed()},
          {"configs", configs},
          {"onsite_checks", onsite_checks},
          {"bond_checks", bond_checks},
          {"violations", violations},
          {"onsite_violations", onsite_violations},
          {"bond_violations", bond_violations},
          {"min_onsite_margin", finite_or_null(min_onsite_margin)},
          {"min_bond_margin", finite_or_null(min_bond_margin)},
          {"min_cstar", finite_or_null(min_cstar)},
          {"min_weight_real", min_weight_real},
          {"max_weight_imag", max_weight_imag},
          {"max_amplitude_imag_ratio", max_amplitude_imag_ratio},
          {"max_sigma1_residual", max_sigma1_residual},
          {"models", models_json}};
}

VerifyReport run_verify(const VerifyConfig& cfg) {
  if (cfg.n_models <= 0 || cfg.configs_per_model <= 0) throw InvalidInput("verify needs positive model/config counts");
  if (cfg.min_sites < 2 || cfg.max_sites < cfg.min_sites) throw InvalidInput("verify site range must satisfy 2 <= min <= max");
  if (!(cfg.g_max > 0.0)) throw InvalidInput("verify g_max must be > 0");
  if (cfg.sweeps_between <= 0 || cfg.n_burnin < 0) throw InvalidInput("verify sweep settings must be positive");
  if (cfg.n_colors < 1 || cfg.n_flavors % cfg.n_colors != 0) throw InvalidInput("N_c must divide N");
  if ((cfg.n_flavors / cfg.n_colors) < 2) throw InvalidInput("verify needs at least two flavor species for traceless flavor matrices");

  std::vector<ModelRun> runs(static_cast<std::size_t>(cfg.n_models));
  std::vector<std::exception_ptr> errors(runs.size());
  const int threads = std::clamp(cfg.threads, 1, cfg.n_models);
  auto work = [&](int t) {
    for (int k = t; k < cfg.n_models; k += threads) {
      try {
        runs[static_cast<std::size_t>(k)] = verify_one(cfg, k);
      } catch (...) {
        errors[static_cast<std::size_t>(k)] = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(work, t);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  VerifyReport rep;
  rep.min_onsite_margin = rep.min_bond_margin = rep.min_cstar = kInf;
  std::ofstream diag;
  if (cfg.diagnostics_path) {
    diag.open(*cfg.diagnostics_path);
    if (!diag) throw InvalidInput("cannot write " + cfg.diagnostics_path->string());
  }
  for (auto& run : runs) {
    const auto& m = run.result;
    const auto& d = m.diagnostics;
    rep.configs += d.configs_checked;
    rep.onsite_checks += m.onsite_checks;
    rep.bond_checks += m.bond_checks;
    rep.violations += d.violations;
    rep.onsite_violations += m.onsite_violations;
    rep.bond_violations += m.bond_violations;
    rep.min_onsite_margin = std::min(rep.min_onsite_margin, m.min_onsite_margin);
    rep.min_bond_margin = std::min(rep.min_bond_margin, m.min_bond_margin);
    rep.min_cstar = std::min(rep.min_cstar, d.min_cstar);
    rep.min_weight_real = std::min(rep.min_weight_real, d.min_weight_real);
    rep.max_weight_imag = std::max(rep.max_weight_imag, d.max_weight_imag);
    rep.max_amplitude_imag_ratio = std::max(rep.max_amplitude_imag_ratio, d.max_amplitude_imag_ratio);
    rep.max_sigma1_residual = std::max(rep.max_sigma1_residual, d.max_sigma1_residual);
    for (const auto& line : run.lines) diag << line << "\n";
    rep.models.push_back(m);
  }
  return rep;
}

}  // namespace dephaselab
