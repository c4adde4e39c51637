// Copyright 2026 The dephaselab Authors
// SPDX-License-Identifier: Apache-2.0

#include "dephaselab/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

#include "dephaselab/errors.hpp"

namespace dephaselab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// standard error of the mean of `v` treated as independent samples
double sem(const std::vector<double>& v) {
  const std::size_t n = v.size();
  if (n < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
}

nlohmann::json cplx_json(cplx z) { return nlohmann::json::array({z.real(), z.imag()}); }
cplx json_cplx(const nlohmann::json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

}  // namespace

bool pair_checkable(const PairSpec& p) {
  return p.a.spin == p.b.spin && p.a.offset == p.b.offset && !p.a.antisymmetric && !p.b.antisymmetric &&
         p.a.omega.rows() == p.b.omega.rows() && p.a.omega.isApprox(p.b.omega, 1e-14) &&
         std::abs(p.a.omega.trace()) <= 1e-12 && p.a.spin != PseudoSpin::raise && p.a.spin != PseudoSpin::lower;
}

void validate(const SamplerConfig& c) {
  if (c.n_sweeps <= 0 || c.n_burnin < 0 || c.n_bins <= 0 || c.measure_every <= 0)
    throw InvalidInput("sampler sweeps, bins and measure_every must be positive");
  if (c.n_sweeps % c.measure_every != 0) throw InvalidInput("measure_every must divide n_sweeps");
  if ((c.n_sweeps / c.measure_every) % c.n_bins != 0)
    throw InvalidInput("n_bins must divide the number of measurements (n_sweeps / measure_every)");
  if (!std::isfinite(c.proposal_sigma) || c.proposal_sigma < 0.0)
    throw InvalidInput("proposal_sigma must be finite and > 0 (0 selects the default)");
}

ChainState initial_state(const DefectKernel& kernel, double sigma) {
  ChainState s;
  s.field = DefectField::zeros(kernel);
  s.weight = evaluate_field(kernel, s.field, false).weight;
  s.sigma = sigma;
  s.max_amplitude_imag_ratio = s.weight.amplitude_imag_ratio;
  return s;
}

void metropolis_step(ChainState& state, const DefectKernel& kernel, std::mt19937_64& rng) {
  std::normal_distribution<double> step(0.0, state.sigma);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const bool odd = kernel.flavor_power % 2 != 0;
  DefectField trial = state.field;
  for (int c = 0; c < kernel.channels(); ++c) {
    for (int i = 0; i < kernel.n_sites; ++i) {
      const double old = trial.phi(c, i);
      trial.phi(c, i) = old + step(rng);
      const double u = unit(rng);
      ++state.proposals;
      const DefectWeight w = evaluate_field(kernel, trial, false).weight;
      state.max_amplitude_imag_ratio = std::max(state.max_amplitude_imag_ratio, w.amplitude_imag_ratio);
      if (w.node) {
        ++state.nodes_rejected;
        trial.phi(c, i) = old;
        continue;
      }
      if (odd && w.sign() < 0) {
        std::ostringstream msg;
        msg << "negative weight at odd flavor power " << kernel.flavor_power
            << "; use the exact route or an even number of flavors";
        throw SignProblem(msg.str());
      }
      const double log_ratio = w.log_magnitude - state.weight.log_magnitude;
      if (state.weight.node || log_ratio >= 0.0 || u < std::exp(log_ratio)) {
        state.weight = w;
        ++state.accepted;
      } else {
        trial.phi(c, i) = old;
      }
    }
  }
  state.field = std::move(trial);
}

std::vector<BinningLevel> binning_analysis(const std::vector<cplx>& series) {
  std::vector<BinningLevel> out;
  std::vector<double> re(series.size()), im(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) {
    re[i] = series[i].real();
    im[i] = series[i].imag();
  }
  for (int block = 1; series.size() / block >= 16; block *= 2) {
    BinningLevel lvl;
    lvl.block_size = block;
    lvl.n_blocks = static_cast<int>(re.size());
    lvl.error_re = sem(re);
    lvl.error_im = sem(im);
    out.push_back(lvl);
    std::vector<double> r2(re.size() / 2), i2(im.size() / 2);
    for (std::size_t k = 0; k < r2.size(); ++k) {
      r2[k] = 0.5 * (re[2 * k] + re[2 * k + 1]);
      i2[k] = 0.5 * (im[2 * k] + im[2 * k + 1]);
    }
    re.swap(r2);
    im.swap(i2);
  }
  return out;
}

void ChainDiagnostics::absorb(const ConfigReport& r) {
  if (configs_checked == 0) {
    min_margin = kInf;
    min_cstar = kInf;
  }
  ++configs_checked;
  pair_checks += r.pairs.size();
  violations += static_cast<std::uint64_t>(r.violations);
  if (!r.pairs.empty()) {
    min_margin = std::min(min_margin, r.min_margin);
    min_cstar = std::min(min_cstar, r.min_cstar);
  }
  min_weight_real = std::min(min_weight_real, r.weight_real_part);
  max_weight_imag = std::max(max_weight_imag, r.weight_imag_ratio);
  max_sigma1_residual = std::max(max_sigma1_residual, r.sigma1_residual);
}

nlohmann::json ChainDiagnostics::to_json() const {
  auto finite_or_null = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); };
  return {{"configs_checked", configs_checked},
          {"pair_checks", pair_checks},
          {"violations", violations},
          {"min_margin", finite_or_null(min_margin)},
          {"min_cstar", finite_or_null(min_cstar)},
          {"min_weight_real", min_weight_real},
          {"max_weight_imag", max_weight_imag},
          {"max_sigma1_residual", max_sigma1_residual},
          {"max_amplitude_imag_ratio", max_amplitude_imag_ratio},
          {"nodes_rejected", nodes_rejected},
          {"acceptance", acceptance},
          {"sigma", sigma}};
}

namespace {

struct Measurer {
  const DefectKernel& kernel;
  const SamplerConfig& config;
  std::vector<CheckedPair> checks;   // checkable measured pairs first
  std::vector<int> check_index;      // [pair] -> index in checks, or -1

  Measurer(const DefectKernel& k, const SamplerConfig& c) : kernel(k), config(c) {
    for (const auto& p : c.pairs) {
      if (p.a.omega.rows() != k.n_flavor_species || p.b.omega.rows() != k.n_flavor_species)
        throw InvalidInput("pair " + p.label + ": flavor matrix dimension does not match N_f");
      if (pair_checkable(p)) {
        check_index.push_back(static_cast<int>(checks.size()));
        checks.push_back({p.a, p.b});
      } else {
        check_index.push_back(-1);
      }
    }
    checks.insert(checks.end(), c.checks.begin(), c.checks.end());
  }

  std::size_t n_observables() const { return config.pairs.size() * kPairQuantities.size(); }

  // writes one value per observable; returns the report
  ConfigReport measure(const DefectGreens& greens, const DefectWeight& weight, cplx* out,
                       std::vector<std::uint64_t>& pair_violations) const {
    ConfigReport report = check_config(greens, weight, kernel, checks);
    for (std::size_t p = 0; p < config.pairs.size(); ++p) {
      const auto& spec = config.pairs[p];
      const FieldCorrelator fc = correlator_fixed_field(greens, kernel, spec.a, spec.b);
      cplx* o = out + p * kPairQuantities.size();
      o[0] = fc.full();
      o[1] = std::abs(fc.connected);
      o[2] = 0.0;
      if (check_index[p] >= 0) {
        const PairCheck& pc = report.pairs[static_cast<std::size_t>(check_index[p])];
        o[2] = pc.bound;
        if (pc.margin < -kMarginTol) ++pair_violations[p];
      }
      o[3] = fc.mean_a;
      o[4] = fc.mean_b;
    }
    return report;
  }
};

MeasurementSet prepare_set(const SamplerConfig& config) {
  MeasurementSet set;
  for (const auto& p : config.pairs)
    for (const char* q : kPairQuantities) {
      set.labels.push_back(p.label + "/" + q);
      set.distances.push_back(p.distance);
    }
  set.pair_violations.assign(config.pairs.size(), 0);
  return set;
}

}  // namespace

MeasurementSet run_chain(const DefectKernel& kernel, const SamplerConfig& config, const ReportSink& sink) {
  validate(config);
  Measurer measurer(kernel, config);
  MeasurementSet set = prepare_set(config);
  const std::size_t n_obs = measurer.n_observables();
  set.metadata = {{"seed", config.seed},
                  {"n_sweeps", config.n_sweeps},
                  {"n_burnin", config.n_burnin},
                  {"n_bins", config.n_bins},
                  {"measure_every", config.measure_every},
                  {"g", kernel.g},
                  {"flavor_power", kernel.flavor_power}};

  if (kernel.g == 0.0) {
    // the defect is absent: one exact evaluation at phi = 0
    const DefectField zero = DefectField::zeros(kernel);
    const DefectEvaluation ev = evaluate_field(kernel, zero, true);
    std::vector<cplx> row(n_obs);
    const ConfigReport rep = measurer.measure(*ev.greens, ev.weight, row.data(), set.pair_violations);
    set.diagnostics.absorb(rep);
    set.diagnostics.max_amplitude_imag_ratio = ev.weight.amplitude_imag_ratio;
    if (sink) sink(rep, zero);
    set.bins.resize(n_obs);
    set.binning.resize(n_obs);
    for (std::size_t k = 0; k < n_obs; ++k) set.bins[k] = {row[k]};
    set.n_measurements = 1;
    set.exact = true;
    set.metadata["proposal_sigma"] = 0.0;
    return set;
  }

  double sigma = config.proposal_sigma > 0.0 ? config.proposal_sigma : std::sqrt(kernel.g / 2.0);
  ChainState state = initial_state(kernel, sigma);
  std::mt19937_64 rng(config.seed);

  constexpr int kTuneWindow = 50;
  std::uint64_t window_p = 0, window_a = 0;
  for (int sweep = 0; sweep < config.n_burnin; ++sweep) {
    metropolis_step(state, kernel, rng);
    if (config.auto_tune && (sweep + 1) % kTuneWindow == 0) {
      const double acc = static_cast<double>(state.accepted - window_a) /
                         static_cast<double>(std::max<std::uint64_t>(state.proposals - window_p, 1));
      if (acc < 0.3) state.sigma *= 0.8;
      if (acc > 0.6) state.sigma *= 1.25;
      window_p = state.proposals;
      window_a = state.accepted;
    }
  }
  // acceptance is reported over the retained part of the chain
  state.proposals = state.accepted = state.nodes_rejected = 0;
  set.metadata["proposal_sigma"] = state.sigma;

  const int n_meas = config.n_sweeps / config.measure_every;
  std::vector<std::vector<cplx>> series(n_obs, std::vector<cplx>(static_cast<std::size_t>(n_meas)));
  std::vector<cplx> row(n_obs);
  int m = 0;
  for (int sweep = 1; sweep <= config.n_sweeps; ++sweep) {
    metropolis_step(state, kernel, rng);
    if (sweep % config.measure_every != 0) continue;
    const DefectEvaluation ev = evaluate_field(kernel, state.field, true);
    if (!ev.greens) throw IntegrityError("chain reached a weight node");
    const ConfigReport rep = measurer.measure(*ev.greens, ev.weight, row.data(), set.pair_violations);
    for (std::size_t k = 0; k < n_obs; ++k) {
      if (!std::isfinite(row[k].real()) || !std::isfinite(row[k].imag())) {
        std::ostringstream msg;
        msg << "non-finite observable " << set.labels[k] << " at field " << state.field.phi.transpose();
        throw IntegrityError(msg.str());
      }
      series[k][static_cast<std::size_t>(m)] = row[k];
    }
    set.diagnostics.absorb(rep);
    if (sink) sink(rep, state.field);
    ++m;
  }
  set.n_measurements = static_cast<std::uint64_t>(n_meas);
  set.diagnostics.acceptance = static_cast<double>(state.accepted) / static_cast<double>(state.proposals);
  set.diagnostics.nodes_rejected = state.nodes_rejected;
  set.diagnostics.max_amplitude_imag_ratio = state.max_amplitude_imag_ratio;
  set.diagnostics.sigma = state.sigma;

  const int per_bin = n_meas / config.n_bins;
  set.bins.assign(n_obs, std::vector<cplx>(static_cast<std::size_t>(config.n_bins)));
  set.binning.resize(n_obs);
  for (std::size_t k = 0; k < n_obs; ++k) {
    for (int b = 0; b < config.n_bins; ++b) {
      cplx s(0.0);
      for (int j = 0; j < per_bin; ++j) s += series[k][static_cast<std::size_t>(b * per_bin + j)];
      set.bins[k][static_cast<std::size_t>(b)] = s / static_cast<double>(per_bin);
    }
    set.binning[k] = binning_analysis(series[k]);
  }
  return set;
}

std::vector<MeasurementSet> run_chains(const DefectKernel& kernel, const SamplerConfig& config, int n_chains,
                                       int threads) {
  if (n_chains <= 0) throw InvalidInput("n_chains must be positive");
  std::vector<MeasurementSet> out(static_cast<std::size_t>(n_chains));
  std::vector<std::exception_ptr> errors(out.size());
  auto work = [&](std::size_t k) {
    try {
      SamplerConfig c = config;
      c.seed = k == 0 ? config.seed : splitmix64(config.seed + k);
      out[k] = run_chain(kernel, c);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  };
  threads = std::clamp(threads, 1, n_chains);
  if (threads == 1) {
    for (std::size_t k = 0; k < out.size(); ++k) work(k);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t k = static_cast<std::size_t>(t); k < out.size(); k += static_cast<std::size_t>(threads))
          work(k);
      });
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

namespace {

struct BinStats {
  cplx mean;
  double err_re = 0.0;
  double err_im = 0.0;
  double err() const { return std::sqrt(err_re * err_re + err_im * err_im); }
};

BinStats bin_stats(const std::vector<cplx>& bins) {
  std::vector<double> re, im;
  for (auto z : bins) {
    re.push_back(z.real());
    im.push_back(z.imag());
  }
  return {cplx(mean_of(re), mean_of(im)), sem(re), sem(im)};
}

}  // namespace

std::vector<CorrelatorEstimate> merge_bins(const std::vector<MeasurementSet>& sets) {
  if (sets.empty()) throw InvalidInput("merge_bins needs at least one measurement set");
  for (const auto& s : sets)
    if (s.labels != sets.front().labels) throw InvalidInput("measurement sets have incompatible observable labels");

  std::vector<CorrelatorEstimate> out;
  const auto& labels = sets.front().labels;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    std::vector<BinStats> st;
    CorrelatorEstimate est;
    est.label = labels[k];
    est.distance = sets.front().distances[k];
    for (const auto& s : sets) {
      st.push_back(bin_stats(s.bins[k]));
      est.n_samples += s.n_measurements;
      const std::size_t pair = k / kPairQuantities.size();
      if (pair < s.pair_violations.size()) est.violation_count += s.pair_violations[pair];
    }
    const bool any_zero = std::any_of(st.begin(), st.end(), [](const BinStats& b) { return b.err() == 0.0; });
    std::vector<double> w(st.size(), 1.0);
    if (!any_zero)
      for (std::size_t j = 0; j < st.size(); ++j) w[j] = 1.0 / (st[j].err() * st[j].err());
    double wsum = 0.0, vre = 0.0, vim = 0.0;
    cplx mean(0.0);
    for (std::size_t j = 0; j < st.size(); ++j) {
      wsum += w[j];
      mean += w[j] * st[j].mean;
      vre += w[j] * w[j] * st[j].err_re * st[j].err_re;
      vim += w[j] * w[j] * st[j].err_im * st[j].err_im;
    }
    est.mean = mean / wsum;
    est.error_re = std::sqrt(vre) / wsum;
    est.error_im = std::sqrt(vim) / wsum;
    est.error = std::sqrt(est.error_re * est.error_re + est.error_im * est.error_im);
    out.push_back(est);
  }
  return out;
}

const CorrelatorEstimate& find_estimate(const std::vector<CorrelatorEstimate>& table, const std::string& label) {
  for (const auto& e : table)
    if (e.label == label) return e;
  throw InvalidInput("no estimate labelled " + label);
}

CorrelatorEstimate connected_estimate(const std::vector<CorrelatorEstimate>& table, const std::string& pair) {
  const auto& c = find_estimate(table, pair + "/C");
  const auto& a = find_estimate(table, pair + "/mean_a");
  const auto& b = find_estimate(table, pair + "/mean_b");
  CorrelatorEstimate out = c;
  out.label = pair + "/connected";
  out.mean = c.mean - a.mean * b.mean;
  const double sa = std::abs(b.mean) * a.error, sb = std::abs(a.mean) * b.error;
  out.error = std::sqrt(c.error * c.error + sa * sa + sb * sb);
  const double scale = c.error > 0.0 ? out.error / c.error : 1.0;
  out.error_re = c.error_re * scale;
  out.error_im = c.error_im * scale;
  return out;
}

nlohmann::json MeasurementSet::to_json() const {
  nlohmann::json j;
  j["metadata"] = metadata;
  j["exact"] = exact;
  j["n_measurements"] = n_measurements;
  j["diagnostics"] = diagnostics.to_json();
  j["pair_violations"] = pair_violations;
  nlohmann::json obs = nlohmann::json::array();
  for (std::size_t k = 0; k < labels.size(); ++k) {
    nlohmann::json o;
    o["label"] = labels[k];
    o["distance"] = distances[k];
    nlohmann::json b = nlohmann::json::array();
    for (auto z : bins[k]) b.push_back(cplx_json(z));
    o["bins"] = b;
    nlohmann::json lv = nlohmann::json::array();
    for (const auto& l : binning[k])
      lv.push_back({{"block_size", l.block_size}, {"n_blocks", l.n_blocks}, {"error_re", l.error_re},
                    {"error_im", l.error_im}});
    o["binning"] = lv;
    obs.push_back(o);
  }
  j["observables"] = obs;
  return j;
}

MeasurementSet MeasurementSet::from_json(const nlohmann::json& j) {
  MeasurementSet s;
  s.metadata = j.value("metadata", nlohmann::json::object());
  s.exact = j.value("exact", false);
  s.n_measurements = j.at("n_measurements").get<std::uint64_t>();
  s.pair_violations = j.value("pair_violations", std::vector<std::uint64_t>{});
  const auto& d = j.at("diagnostics");
  s.diagnostics.configs_checked = d.value("configs_checked", std::uint64_t{0});
  s.diagnostics.violations = d.value("violations", std::uint64_t{0});
  s.diagnostics.acceptance = d.value("acceptance", 0.0);
  for (const auto& o : j.at("observables")) {
    s.labels.push_back(o.at("label").get<std::string>());
    s.distances.push_back(o.at("distance").get<double>());
    std::vector<cplx> b;
    for (const auto& z : o.at("bins")) b.push_back(json_cplx(z));
    s.bins.push_back(std::move(b));
    std::vector<BinningLevel> lv;
    for (const auto& l : o.value("binning", nlohmann::json::array()))
      lv.push_back({l.at("block_size").get<int>(), l.at("n_blocks").get<int>(), l.at("error_re").get<double>(),
                    l.at("error_im").get<double>()});
    s.binning.push_back(std::move(lv));
  }
  return s;
}

void MeasurementSet::write_json(const std::filesystem::path& path) const {
  std::ofstream f(path);
  if (!f) throw InvalidInput("cannot write " + path.string());
  f << to_json().dump(2) << "\n";
}

void MeasurementSet::write_bins_csv(const std::filesystem::path& path) const {
  std::ofstream f(path);
  if (!f) throw InvalidInput("cannot write " + path.string());
  f.precision(17);
  f << "label,r,bin,value_re,value_im\n";
  for (std::size_t k = 0; k < labels.size(); ++k)
    for (std::size_t b = 0; b < bins[k].size(); ++b)
      f << labels[k] << "," << distances[k] << "," << b << "," << bins[k][b].real() << "," << bins[k][b].imag()
        << "\n";
}

}  // namespace dephaselab
