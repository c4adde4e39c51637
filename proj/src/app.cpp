// Copyright 2026 The dephaselab Authors
// SPDX-License-Identifier: Apache-2.0

#include "dephaselab/app.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

#include "dephaselab/defect.hpp"
#include "dephaselab/errors.hpp"
#include "dephaselab/sampler.hpp"
#include "dephaselab/verify.hpp"

#ifndef DEPHASELAB_VERSION
#define DEPHASELAB_VERSION "unknown"
#endif

namespace dephaselab {

namespace {

void log_line(const AppOptions& opt, const std::string& s) {
  if (opt.log) *opt.log << s << std::endl;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw InvalidInput("cannot write " + path.string());
  f << text;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

nlohmann::json cplx_json(cplx z) { return nlohmann::json::array({z.real(), z.imag()}); }

struct CsvRow {
  std::string label;
  double r;
  cplx mean;
  double error;
};

void write_correlators_csv(const std::filesystem::path& path, const std::vector<CsvRow>& rows,
                           const nlohmann::json& meta) {
  std::ostringstream out;
  out.precision(17);
  out << "# config_hash=" << meta.at("config_hash").get<std::string>() << " seed=" << meta.at("seed").dump()
      << " version=" << meta.at("version").get<std::string>() << "\n";
  out << "label,r,mean_re,mean_im,stderr\n";
  for (const auto& r : rows) out << r.label << "," << r.r << "," << r.mean.real() << "," << r.mean.imag() << "," << r.error << "\n";
  write_text(path, out.str());
}

ExactDoubledState configured_exact_state(const RunConfig& cfg, const TightBindingModel& model) {
  ExactOptions opts;
  opts.budget = cfg.exact_budget;
  opts.filling = cfg.filling;
  return build_exact_state(model, cfg.g, opts);
}

BilinearSpec sigma1_partner(const BilinearSpec& op) {
  BilinearSpec s = op;
  s.spin = PseudoSpin::s1;
  return s;
}

int cmd_model_info(const RunConfig& cfg, const AppOptions& opt) {
  const TightBindingModel model = build_configured_model(cfg);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(model.h, Eigen::EigenvaluesOnly);
  const DoubledModel dm = double_hamiltonian(model);
  nlohmann::json j;
  j["metadata"] = run_metadata(cfg, "model-info");
  j["n_sites"] = model.n_sites();
  const RVector& e = es.eigenvalues();
  j["spectrum"] = std::vector<double>(e.data(), e.data() + e.size());
  j["n_filled_doubled"] = dm.n_filled;
  std::filesystem::create_directories(cfg.output_dir);
  try {
    const SlaterOrbitals orb = ground_orbitals(dm);
    j["gap"] = orb.gap;
    j["doubled_spectrum"] = std::vector<double>(orb.energies.data(), orb.energies.data() + orb.energies.size());
    j["natural_filling"] = natural_filling(model);
  } catch (const DegenerateGroundState& err) {
    j["degenerate"] = err.what();
    j["offending_eigenvalues"] = err.eigenvalues();
    write_json(cfg.output_dir / "results.json", j);
    throw;
  }
  write_json(cfg.output_dir / "results.json", j);
  log_line(opt, "gap = " + std::to_string(j["gap"].get<double>()));
  return kExitOk;
}

nlohmann::json exact_rows_json(const std::vector<ExactRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows) arr.push_back({{"label", r.label}, {"r", r.distance}, {"value", cplx_json(r.value)}});
  return arr;
}

int cmd_exact(const RunConfig& cfg, const AppOptions& opt) {
  if (cfg.route == Route::mc) throw ConfigError("route = mc excludes the exact oracle");
  const TightBindingModel model = build_configured_model(cfg);
  const ExactDoubledState state = configured_exact_state(cfg, model);
  const auto rows = exact_rows(state, model, cfg.sampler.pairs);
  nlohmann::json meta = run_metadata(cfg, "exact");
  std::filesystem::create_directories(cfg.output_dir);
  nlohmann::json j;
  j["metadata"] = meta;
  j["norm"] = state.norm();
  j["configurations"] = state.size();
  j["filling"] = state.filling();
  j["exact"] = exact_rows_json(rows);
  write_json(cfg.output_dir / "results.json", j);
  std::vector<CsvRow> csv;
  for (const auto& r : rows) csv.push_back({r.label, r.distance, r.value, 0.0});
  write_correlators_csv(cfg.output_dir / "correlators.csv", csv, meta);
  log_line(opt, "exact: " + std::to_string(rows.size()) + " values from " + std::to_string(state.size()) +
                    " joint configurations");
  return kExitOk;
}

int cmd_sample(const RunConfig& cfg, const AppOptions& opt) {
  if (cfg.route == Route::exact) throw ConfigError("route = exact excludes sampling");
  const TightBindingModel model = build_configured_model(cfg);
  const SlaterOrbitals orb = ground_orbitals(double_hamiltonian(model));
  const DefectKernel kernel = make_kernel(model, orb, cfg.g);
  const auto sets = run_chains(kernel, cfg.sampler, cfg.n_chains, opt.threads);
  const auto table = merge_bins(sets);

  nlohmann::json meta = run_metadata(cfg, "sample");
  std::filesystem::create_directories(cfg.output_dir);
  nlohmann::json est = nlohmann::json::array();
  std::vector<CsvRow> csv;
  for (const auto& e : table) {
    est.push_back({{"label", e.label}, {"r", e.distance}, {"mean", cplx_json(e.mean)}, {"stderr", e.error},
                   {"stderr_re", e.error_re}, {"stderr_im", e.error_im}, {"n_samples", e.n_samples},
                   {"violations", e.violation_count}});
    csv.push_back({e.label, e.distance, e.mean, e.error});
  }
  for (const auto& p : cfg.sampler.pairs) {
    const auto c = connected_estimate(table, p.label);
    csv.push_back({c.label, c.distance, c.mean, c.error});
    est.push_back({{"label", c.label}, {"r", c.distance}, {"mean", cplx_json(c.mean)}, {"stderr", c.error},
                   {"n_samples", c.n_samples}});
  }
  std::uint64_t violations = 0;
  nlohmann::json chains = nlohmann::json::array();
  for (std::size_t k = 0; k < sets.size(); ++k) {
    violations += sets[k].diagnostics.violations;
    chains.push_back({{"seed", sets[k].metadata.at("seed")}, {"diagnostics", sets[k].diagnostics.to_json()}});
    nlohmann::json cj = sets[k].to_json();
    cj["metadata"]["run"] = meta;
    write_json(cfg.output_dir / ("chain_" + std::to_string(k) + ".json"), cj);
    sets[k].write_bins_csv(cfg.output_dir / ("chain_" + std::to_string(k) + "_bins.csv"));
  }

  nlohmann::json j;
  j["metadata"] = meta;
  j["estimates"] = est;
  j["chains"] = chains;
  j["violations"] = violations;
  write_json(cfg.output_dir / "results.json", j);
  write_correlators_csv(cfg.output_dir / "correlators.csv", csv, meta);

  if (cfg.route == Route::both) {
    const ExactDoubledState state = configured_exact_state(cfg, model);
    const auto rows = exact_rows(state, model, cfg.sampler.pairs);
    nlohmann::json cmp = nlohmann::json::array();
    for (const auto& p : cfg.sampler.pairs) {
      const bool bond = !p.a.onsite() || !p.b.onsite();
      const std::string exact_label = p.label + (bond ? "/single_field" : "/C");
      const auto it = std::find_if(rows.begin(), rows.end(), [&](const ExactRow& r) { return r.label == exact_label; });
      const auto& mc = find_estimate(table, p.label + "/C");
      const double diff = std::abs(mc.mean - it->value);
      cmp.push_back({{"label", p.label}, {"exact", cplx_json(it->value)}, {"exact_convention", bond ? "single_field" : "two_sided"},
                     {"mc", cplx_json(mc.mean)}, {"stderr", mc.error}, {"abs_diff", diff},
                     {"within_3_stderr", diff <= 3.0 * mc.error}});
      if (pair_checkable(p) && !bond) {
        const auto er = std::find_if(rows.begin(), rows.end(), [&](const ExactRow& r) { return r.label == p.label + "/cstar"; });
        const auto& mb = find_estimate(table, p.label + "/bound");
        const double d2 = std::abs(mb.mean - er->value);
        cmp.push_back({{"label", p.label + "/cstar"}, {"exact", cplx_json(er->value)}, {"exact_convention", "two_sided"},
                       {"mc", cplx_json(mb.mean)}, {"stderr", mb.error}, {"abs_diff", d2},
                       {"within_3_stderr", d2 <= 3.0 * mb.error}});
      }
    }
    write_json(cfg.output_dir / "comparison.json", {{"metadata", meta}, {"comparison", cmp}});
  }
  log_line(opt, "sample: " + std::to_string(sets.size()) + " chains, " + std::to_string(violations) + " violations");
  return violations == 0 ? kExitOk : kExitViolations;
}

int cmd_verify(const RunConfig& cfg, const AppOptions& opt) {
  VerifyConfig vc = cfg.verify;
  vc.threads = opt.threads;
  std::filesystem::create_directories(cfg.output_dir);
  const VerifyReport rep = run_verify(vc);
  nlohmann::json j = rep.to_json();
  j["metadata"] = run_metadata(cfg, "verify");
  write_json(cfg.output_dir / "report.json", j);
  log_line(opt, "verify: " + std::to_string(rep.configs) + " configurations, " + std::to_string(rep.violations) +
                    " violations");
  return rep.passed() ? kExitOk : kExitViolations;
}

int cmd_analyze(const RunConfig& cfg, const AppOptions& opt) {
  const TightBindingModel model = build_configured_model(cfg);
  nlohmann::json report;
  report["metadata"] = run_metadata(cfg, "analyze");
  std::filesystem::create_directories(cfg.output_dir);

  if (cfg.analyze.input) {
    std::ifstream in(*cfg.analyze.input);
    if (!in) throw InvalidInput("cannot read " + cfg.analyze.input->string());
    const nlohmann::json results = nlohmann::json::parse(in);
    std::map<std::string, std::pair<int, int>> sites;
    for (const auto& p : cfg.sampler.pairs) sites[p.label] = {p.a.site, p.b.site};
    std::vector<PairValue> abs_table, bound_table;
    const int n = model.n_sites();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    CMatrix grid = CMatrix::Constant(n, n, cplx(nan, nan));
    for (const auto& e : results.at("estimates")) {
      const std::string label = e.at("label");
      const auto slash = label.rfind('/');
      const std::string pair = label.substr(0, slash), quantity = label.substr(slash + 1);
      const auto it = sites.find(pair);
      if (it == sites.end()) continue;
      const double v = e.at("mean").at(0).get<double>();
      const double err = e.at("stderr").get<double>();
      if (quantity == "abs") abs_table.push_back({it->second.first, it->second.second, v, err});
      if (quantity == "bound") bound_table.push_back({it->second.first, it->second.second, v, err});
      if (quantity == "C") grid(it->second.first, it->second.second) = cplx(v, e.at("mean").at(1).get<double>());
    }
    const Profile abs_prof = distance_profile(abs_table, model.lattice);
    const Profile bound_prof = distance_profile(bound_table, model.lattice);
    report["profile_abs"] = abs_prof.to_json();
    report["profile_bound"] = bound_prof.to_json();
    write_text(cfg.output_dir / "profile_abs.csv", abs_prof.to_csv());
    write_text(cfg.output_dir / "profile_bound.csv", bound_prof.to_csv());
    const double size = std::max(model.lattice.lx, model.lattice.ly);
    FitWindow win{cfg.analyze.fit_r_min, cfg.analyze.fit_r_max};
    for (const auto& [name, prof] : {std::pair{"fit_abs", &abs_prof}, std::pair{"fit_bound", &bound_prof}}) {
      try {
        report[name] = fit_decay(*prof, size, win).to_json();
      } catch (const InvalidInput& e) {
        report[name] = {{"error", e.what()}};
      }
    }
    if (cfg.analyze.coarse_delta > 0) {
      const CoarseGrained cg = coarse_grain(grid, model.lattice, cfg.analyze.coarse_delta);
      report["coarse_grained"] = cg.profile.to_json();
      report["coarse_grained"]["notices"] = cg.notices;
      write_text(cfg.output_dir / "profile_coarse.csv", cg.profile.to_csv());
    }
  }

  if (cfg.analyze.goldstone) {
    if (model.lattice.ly != 1) {
      report["goldstone"] = {{"error", "the Goldstone report needs a chain"}};
    } else {
      const ExactDoubledState state = configured_exact_state(cfg, model);
      GoldstoneInput gi = exact_goldstone_input(state, model);
      gi.q = cfg.analyze.goldstone_q;
      const GoldstoneReport gr = goldstone_bound_check(gi);
      report["goldstone"] = gr.to_json();
      std::ostringstream csv;
      csv.precision(17);
      csv << "k,r_used,lhs,rhs,margin\n";
      for (const auto& p : gr.points) csv << p.k << "," << p.r_used << "," << p.lhs << "," << p.rhs << "," << p.margin << "\n";
      write_text(cfg.output_dir / "goldstone.csv", csv.str());
    }
  }
  write_json(cfg.output_dir / "report.json", report);
  log_line(opt, "analyze: report written to " + (cfg.output_dir / "report.json").string());
  return kExitOk;
}

}  // namespace

int exit_code_for(const std::exception_ptr& error) {
  try {
    std::rethrow_exception(error);
  } catch (const ConfigError&) {
    return kExitConfig;
  } catch (const SizeLimit&) {
    return kExitSizeLimit;
  } catch (const DegenerateGroundState&) {
    return kExitDegenerate;
  } catch (const SignProblem&) {
    return kExitSignProblem;
  } catch (const IntegrityError&) {
    return kExitIntegrity;
  } catch (...) {
    return kExitFailure;
  }
}

int threads_from_env() {
  const char* v = std::getenv("DEPHASELAB_THREADS");
  if (!v || !*v) return 1;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 1) throw ConfigError("DEPHASELAB_THREADS must be a positive integer");
  return static_cast<int>(std::min<long>(n, 256));
}

TightBindingModel build_configured_model(const RunConfig& cfg) {
  ModelSpec spec = cfg.model;
  if (cfg.h_file) spec.custom_h = read_matrix_file(*cfg.h_file);
  return build_model(spec);
}

nlohmann::json run_metadata(const RunConfig& cfg, std::string_view command) {
  return {{"command", command},
          {"config_hash", cfg.hash()},
          {"seed", cfg.sampler.seed},
          {"version", DEPHASELAB_VERSION},
          {"config", cfg.to_json()}};
}

std::vector<ExactRow> exact_rows(const ExactDoubledState& state, const TightBindingModel& model,
                                 const std::vector<PairSpec>& pairs) {
  std::vector<ExactRow> rows;
  for (const auto& p : pairs) {
    const ExactCorrelator c = exact_renyi2_correlator(state, model, p.a, p.b, Insertion::two_sided);
    rows.push_back({p.label + "/C", p.distance, c.full});
    rows.push_back({p.label + "/connected", p.distance, c.connected});
    const bool bond = !p.a.onsite() || !p.b.onsite();
    if (bond) {
      const ExactCorrelator s = exact_renyi2_correlator(state, model, p.a, p.b, Insertion::single_field);
      rows.push_back({p.label + "/single_field", p.distance, s.full});
    } else if (pair_checkable(p)) {
      const ExactCorrelator s = exact_renyi2_correlator(state, model, sigma1_partner(p.a), sigma1_partner(p.b));
      rows.push_back({p.label + "/cstar", p.distance, s.connected});
    }
  }
  return rows;
}

GoldstoneInput exact_goldstone_input(const ExactDoubledState& state, const TightBindingModel& model) {
  const Lattice& lat = model.lattice;
  if (lat.ly != 1) throw InvalidInput("the exact Goldstone input is defined on chains");
  const int n = model.n_sites();
  const CMatrix id = CMatrix::Identity(model.n_flavor_species(), model.n_flavor_species());
  GoldstoneInput gi;
  gi.q = 2;

  std::vector<ExactOperator> currents;
  std::vector<double> positions;
  for (int x = 0; x < n; ++x) {
    if (!lat.shifted(x, {1, 0})) continue;
    currents.push_back(exact_operator(current_operator(x, {1, 0}, id), model));
    positions.push_back(x + 0.5);
  }
  const auto nb = static_cast<Eigen::Index>(currents.size());
  CMatrix jj(nb, nb);
  for (Eigen::Index a = 0; a < nb; ++a)
    for (Eigen::Index b = 0; b < nb; ++b) {
      const ExactOperator pair[2] = {currents[static_cast<std::size_t>(a)], currents[static_cast<std::size_t>(b)]};
      jj(a, b) = exact_expectation(state, pair);
    }
  for (int m = 1; 2 * m <= lat.lx; ++m) {
    const double k = 2.0 * std::numbers::pi * m / lat.lx;
    gi.k.push_back(k);
    gi.jj.push_back(pair_structure_factor(jj, positions, k));
  }

  const BilinearSpec o0 = onsite_bilinear(0, PseudoSpin::raise, id);
  const ExactOperator o0d = exact_operator(adjoint(o0, lat), model);
  const ExactOperator o0e = exact_operator(o0, model);
  for (int r = 1; r < n; ++r) {
    const BilinearSpec orr = onsite_bilinear(r, PseudoSpin::raise, id);
    const ExactOperator ore = exact_operator(orr, model);
    const ExactOperator ord = exact_operator(adjoint(orr, lat), model);
    const ExactOperator two[2] = {ore, o0d};
    const ExactOperator four[4] = {o0e, ord, ore, o0d};  // (O(r) O^dag(0))^dag O(r) O^dag(0)
    gi.r.push_back(lat.distance(0, r));
    gi.oo.push_back(exact_expectation(state, two));
    gi.fourpoint.push_back(exact_expectation(state, four).real());
  }
  return gi;
}

int run(std::string_view command, const RunConfig& cfg, const AppOptions& options) {
  try {
    if (command == "exact") return cmd_exact(cfg, options);
    if (command == "sample") return cmd_sample(cfg, options);
    if (command == "verify") return cmd_verify(cfg, options);
    if (command == "analyze") return cmd_analyze(cfg, options);
    if (command == "model-info") return cmd_model_info(cfg, options);
    throw ConfigError("unknown command '" + std::string(command) + "'");
  } catch (const std::exception& e) {
    const int code = exit_code_for(std::current_exception());
    log_line(options, std::string("error: ") + e.what());
    return code;
  }
}

int run_file(std::string_view command, const std::filesystem::path& config_path, const AppOptions& options) {
  try {
    const RunConfig cfg = load_config(config_path);
    AppOptions opt = options;
    return run(command, cfg, opt);
  } catch (const std::exception& e) {
    log_line(options, std::string("error: ") + e.what());
    return exit_code_for(std::current_exception());
  }
}

}  // namespace dephaselab
