// Copyright 2026 The dephaselab Authors
// SPDX-License-Identifier: Apache-2.0

#include "dephaselab/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "dephaselab/errors.hpp"
#include "dephaselab/exact.hpp"

namespace dephaselab {

namespace {

using KeyTable = std::map<std::string, std::set<std::string>>;

const KeyTable& known_keys() {
  static const KeyTable keys = {
      {"model",
       {"geometry", "L", "Ly", "boundary", "t", "twist", "mass", "disorder_seed", "disorder_strength", "N", "N_c",
        "h_file"}},
      {"run", {"g", "route", "output", "chains", "exact_budget", "filling"}},
      {"sampler", {"sweeps", "burnin", "bins", "measure_every", "sigma", "auto_tune", "seed"}},
      {"measure", {"pair", "profile"}},
      {"verify",
       {"models", "configs", "min_sites", "max_sites", "g_max", "bonds", "colors", "burnin", "sweeps_between", "seed",
        "diagnostics"}},
      {"analyze", {"input", "fit_rmin", "fit_rmax", "coarse_delta", "goldstone", "q"}},
  };
  return keys;
}

const std::set<std::string> kRepeatable = {"pair", "profile"};

struct Entry {
  std::string value;
  int line = 0;
};

using Sections = std::map<std::string, std::multimap<std::string, Entry>>;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void fail(int line, const std::string& what) {
  throw ConfigError(line > 0 ? "line " + std::to_string(line) + ": " + what : what);
}

// closest known key within edit distance 2, or empty
std::string suggestion(const std::string& key) {
  std::string best;
  std::size_t best_d = 3;
  for (const auto& [section, keys] : known_keys())
    for (const auto& k : keys)
      if (const std::size_t d = levenshtein(key, k); d < best_d) {
        best_d = d;
        best = k;
      }
  return best;
}

Sections split_sections(std::string_view text) {
  Sections out;
  std::string section = "run";
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(line_no, "malformed section header '" + line + "'");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (!known_keys().count(section)) fail(line_no, "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(line_no, "expected key = value, got '" + line + "'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    const auto& allowed = known_keys().at(section);
    if (!allowed.count(key)) {
      std::string msg = "unknown key '" + key + "' in [" + section + "]";
      const std::string s = suggestion(key);
      if (!s.empty()) msg += "; did you mean '" + s + "'?";
      fail(line_no, msg);
    }
    if (value.empty()) fail(line_no, "key '" + key + "' has an empty value");
    auto& sec = out[section];
    if (!kRepeatable.count(key) && sec.count(key)) fail(line_no, "duplicate key '" + key + "' in [" + section + "]");
    sec.emplace(key, Entry{value, line_no});
  }
  return out;
}

class Reader {
 public:
  Reader(const Sections& s, std::string section) : m_section(std::move(section)) {
    if (auto it = s.find(m_section); it != s.end()) m_entries = &it->second;
  }

  const Entry* find(const std::string& key) const {
    if (!m_entries) return nullptr;
    auto it = m_entries->find(key);
    return it == m_entries->end() ? nullptr : &it->second;
  }

  std::vector<Entry> all(const std::string& key) const {
    std::vector<Entry> out;
    if (!m_entries) return out;
    auto [b, e] = m_entries->equal_range(key);
    for (auto it = b; it != e; ++it) out.push_back(it->second);
    std::sort(out.begin(), out.end(), [](const Entry& x, const Entry& y) { return x.line < y.line; });
    return out;
  }

  template <typename T>
  void get(const std::string& key, T& target) const {
    if (const Entry* e = find(key)) target = convert<T>(*e, key);
  }

  template <typename T>
  void get(const std::string& key, std::optional<T>& target) const {
    if (const Entry* e = find(key)) target = convert<T>(*e, key);
  }

  template <typename T>
  static T convert(const Entry& e, const std::string& key) {
    const std::string& v = e.value;
    if constexpr (std::is_same_v<T, bool>) {
      if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
      if (v == "false" || v == "no" || v == "0" || v == "off") return false;
      fail(e.line, "key '" + key + "' expects a boolean, got '" + v + "'");
    } else if constexpr (std::is_same_v<T, std::string>) {
      return v;
    } else if constexpr (std::is_same_v<T, std::filesystem::path>) {
      return std::filesystem::path(v);
    } else {
      T out{};
      const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
      if (ec != std::errc() || ptr != v.data() + v.size())
        fail(e.line, "key '" + key + "' expects a number, got '" + v + "'");
      return out;
    }
  }

 private:
  std::string m_section;
  const std::multimap<std::string, Entry>* m_entries = nullptr;
};

// whitespace-separated tokens, keeping bracketed groups together
std::vector<std::string> tokenize(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  for (char c : line) {
    if (c == '[') ++depth;
    if (c == ']') --depth;
    if ((c == ' ' || c == '\t') && depth == 0) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

int parse_int(std::string_view s, const std::string& what) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw InvalidInput(what + ": expected an integer, got '" + std::string(s) + "'");
  return v;
}

int parse_site(std::string_view s, const Lattice& lat) {
  if (const auto colon = s.find(':'); colon != std::string_view::npos) {
    const int x = parse_int(s.substr(0, colon), "site x");
    const int y = parse_int(s.substr(colon + 1), "site y");
    if (x < 0 || y < 0 || x >= lat.lx || y >= lat.ly) throw InvalidInput("site (" + std::string(s) + ") is outside the lattice");
    return x + lat.lx * y;
  }
  const int i = parse_int(s, "site");
  if (i < 0 || i >= lat.n_sites()) throw InvalidInput("site " + std::string(s) + " is outside the lattice");
  return i;
}

PseudoSpin parse_mu(std::string_view s) {
  if (s == "+" || s == "raise") return PseudoSpin::raise;
  if (s == "-" || s == "lower") return PseudoSpin::lower;
  const int mu = parse_int(s, "mu");
  if (mu < 0 || mu > 3) throw InvalidInput("mu must be 0, 1, 2, 3, + or -");
  return pseudo_spin_from_mu(mu);
}

std::array<int, 2> parse_offset(std::string_view s) {
  const auto comma = s.find(',');
  if (comma == std::string_view::npos) return {parse_int(s, "offset"), 0};
  return {parse_int(s.substr(0, comma), "offset"), parse_int(s.substr(comma + 1), "offset")};
}

std::string omega_tag(const std::string& token) { return token.front() == '[' ? "omega" : token; }

std::string spin_tag(PseudoSpin s) { return to_string(s); }

std::vector<PairSpec> parse_profile(std::string_view line, const TightBindingModel& model) {
  const auto tok = tokenize(line);
  if (tok.size() < 3) throw InvalidInput("profile needs: x0 mu[,mu...] omega [offset=dx,dy]");
  const int x0 = parse_site(tok[0], model.lattice);
  std::vector<PseudoSpin> mus;
  std::stringstream ms(tok[1]);
  for (std::string m; std::getline(ms, m, ',');) mus.push_back(parse_mu(m));
  const CMatrix omega = flavor_matrix(tok[2], model.n_flavor_species());
  std::array<int, 2> offset{0, 0};
  for (std::size_t i = 3; i < tok.size(); ++i) {
    if (tok[i].rfind("offset=", 0) == 0) offset = parse_offset(std::string_view(tok[i]).substr(7));
    else throw InvalidInput("unknown profile option '" + tok[i] + "'");
  }
  std::vector<PairSpec> out;
  if (!model.lattice.shifted(x0, offset)) throw InvalidInput("profile bond leaves the lattice at the reference site");
  for (PseudoSpin mu : mus)
    for (int y = 0; y < model.n_sites(); ++y) {
      if (!model.lattice.shifted(y, offset)) continue;
      PairSpec p;
      p.a = BilinearSpec{x0, offset, mu, omega, false};
      p.b = BilinearSpec{y, offset, mu, omega, false};
      validate_bilinear(p.a, model);
      p.distance = model.lattice.distance(x0, y);
      std::ostringstream label;
      label << spin_tag(mu) << "." << omega_tag(tok[2]) << "." << x0 << "-" << y;
      if (offset != std::array<int, 2>{0, 0}) label << ".d" << offset[0] << ":" << offset[1];
      p.label = label.str();
      out.push_back(std::move(p));
    }
  return out;
}

}  // namespace

std::size_t levenshtein(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    prev.swap(cur);
  }
  return prev[b.size()];
}

std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Route parse_route(std::string_view tag) {
  if (tag == "exact") return Route::exact;
  if (tag == "mc") return Route::mc;
  if (tag == "both") return Route::both;
  throw InvalidInput("unknown route '" + std::string(tag) + "' (expected exact, mc or both)");
}

std::string to_string(Route r) {
  switch (r) {
    case Route::exact: return "exact";
    case Route::mc: return "mc";
    case Route::both: return "both";
  }
  return "both";
}

PairSpec parse_pair(std::string_view line, const TightBindingModel& model) {
  const auto tok = tokenize(line);
  if (tok.size() < 4) throw InvalidInput("pair needs: x y mu omega [offset=dx,dy] [current] [label=name]");
  PairSpec p;
  const int x = parse_site(tok[0], model.lattice);
  const int y = parse_site(tok[1], model.lattice);
  const PseudoSpin mu = parse_mu(tok[2]);
  const CMatrix omega = flavor_matrix(tok[3], model.n_flavor_species());
  std::array<int, 2> offset{0, 0};
  bool current = false;
  std::string label;
  for (std::size_t i = 4; i < tok.size(); ++i) {
    if (tok[i].rfind("offset=", 0) == 0) offset = parse_offset(std::string_view(tok[i]).substr(7));
    else if (tok[i] == "current") current = true;
    else if (tok[i].rfind("label=", 0) == 0) label = tok[i].substr(6);
    else throw InvalidInput("unknown pair option '" + tok[i] + "'");
  }
  if (current && offset == std::array<int, 2>{0, 0}) throw InvalidInput("a current needs a nonzero offset");
  if (current && mu != PseudoSpin::s0) throw InvalidInput("currents use mu = 0");
  p.a = BilinearSpec{x, offset, mu, omega, current};
  p.b = BilinearSpec{y, offset, mu, omega, current};
  validate_bilinear(p.a, model);
  validate_bilinear(p.b, model);
  resolve_terms(p.a, model.lattice);
  resolve_terms(p.b, model.lattice);
  p.distance = model.lattice.distance(x, y);
  if (label.empty()) {
    std::ostringstream ls;
    ls << (current ? "J" : spin_tag(mu)) << "." << omega_tag(tok[3]) << "." << x << "-" << y;
    if (offset != std::array<int, 2>{0, 0}) ls << ".d" << offset[0] << ":" << offset[1];
    label = ls.str();
  }
  if (label.find_first_of(",/\"") != std::string::npos) throw InvalidInput("labels may not contain ',', '/' or quotes");
  p.label = label;
  return p;
}

RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  const Sections sections = split_sections(text);
  RunConfig cfg;
  auto resolve = [&](const std::filesystem::path& p) { return p.is_absolute() || base_dir.empty() ? p : base_dir / p; };

  // [model]
  const Reader model(sections, "model");
  std::string geometry = "chain", boundary = "open";
  model.get("geometry", geometry);
  model.get("boundary", boundary);
  try {
    cfg.model.geometry = parse_geometry(geometry);
    cfg.model.boundary = parse_boundary(boundary);
  } catch (const InvalidInput& e) {
    fail(0, e.what());
  }
  model.get("L", cfg.model.lx);
  model.get("Ly", cfg.model.ly);
  model.get("t", cfg.model.hopping);
  model.get("twist", cfg.model.twist);
  model.get("mass", cfg.model.mass);
  model.get("disorder_seed", cfg.model.disorder_seed);
  model.get("disorder_strength", cfg.model.disorder_strength);
  model.get("N", cfg.model.n_flavors);
  model.get("N_c", cfg.model.n_colors);
  std::optional<std::filesystem::path> h_file;
  model.get("h_file", h_file);
  if (h_file) {
    if (cfg.model.geometry != Geometry::custom) fail(model.find("h_file")->line, "h_file needs geometry = custom");
    cfg.h_file = resolve(*h_file);
  }
  if (cfg.model.geometry == Geometry::custom && !cfg.h_file) fail(0, "geometry = custom needs h_file");
  if (cfg.model.geometry == Geometry::chain && model.find("Ly")) fail(model.find("Ly")->line, "a chain has no Ly");

  // [run]
  const Reader run(sections, "run");
  run.get("g", cfg.g);
  std::string route = "both";
  run.get("route", route);
  try {
    cfg.route = parse_route(route);
  } catch (const InvalidInput& e) {
    fail(run.find("route")->line, e.what());
  }
  std::filesystem::path output = cfg.output_dir;
  run.get("output", output);
  cfg.output_dir = resolve(output);
  run.get("chains", cfg.n_chains);
  run.get("exact_budget", cfg.exact_budget);
  run.get("filling", cfg.filling);
  if (!(cfg.g >= 0.0) || !std::isfinite(cfg.g)) fail(0, "g must be finite and >= 0");
  if (cfg.n_chains < 1) fail(0, "chains must be >= 1");
  if (!(cfg.exact_budget > 0.0)) fail(0, "exact_budget must be > 0");

  // [sampler]
  const Reader sampler(sections, "sampler");
  sampler.get("sweeps", cfg.sampler.n_sweeps);
  sampler.get("burnin", cfg.sampler.n_burnin);
  sampler.get("bins", cfg.sampler.n_bins);
  sampler.get("measure_every", cfg.sampler.measure_every);
  sampler.get("sigma", cfg.sampler.proposal_sigma);
  sampler.get("auto_tune", cfg.sampler.auto_tune);
  sampler.get("seed", cfg.sampler.seed);
  try {
    validate(cfg.sampler);
  } catch (const InvalidInput& e) {
    fail(0, std::string("[sampler] ") + e.what());
  }

  // [verify]
  const Reader verify(sections, "verify");
  verify.get("models", cfg.verify.n_models);
  verify.get("configs", cfg.verify.configs_per_model);
  verify.get("min_sites", cfg.verify.min_sites);
  verify.get("max_sites", cfg.verify.max_sites);
  verify.get("g_max", cfg.verify.g_max);
  verify.get("bonds", cfg.verify.bonds);
  verify.get("burnin", cfg.verify.n_burnin);
  verify.get("sweeps_between", cfg.verify.sweeps_between);
  verify.get("seed", cfg.verify.seed);
  bool colors = false;
  verify.get("colors", colors);
  if (colors) {
    cfg.verify.n_flavors = 4;
    cfg.verify.n_colors = 2;
  }
  std::optional<std::filesystem::path> diag;
  verify.get("diagnostics", diag);
  if (diag) cfg.verify.diagnostics_path = resolve(*diag);

  // [analyze]
  const Reader analyze(sections, "analyze");
  std::optional<std::filesystem::path> input;
  analyze.get("input", input);
  if (input) cfg.analyze.input = resolve(*input);
  analyze.get("fit_rmin", cfg.analyze.fit_r_min);
  analyze.get("fit_rmax", cfg.analyze.fit_r_max);
  analyze.get("coarse_delta", cfg.analyze.coarse_delta);
  analyze.get("goldstone", cfg.analyze.goldstone);
  analyze.get("q", cfg.analyze.goldstone_q);
  if (cfg.analyze.coarse_delta < 0) fail(0, "coarse_delta must be >= 0");

  // model-dependent checks
  ModelSpec spec = cfg.model;
  TightBindingModel built;
  try {
    if (cfg.h_file) spec.custom_h = read_matrix_file(*cfg.h_file);
    built = build_model(spec);
  } catch (const InvalidInput& e) {
    fail(0, std::string("[model] ") + e.what());
  }
  const int nf = built.n_flavor_species();
  if (cfg.route != Route::exact && nf % 2 != 0) {
    fail(0, "route = " + to_string(cfg.route) + " samples the determinant weight, which is sign-free only for an even "
            "number of flavors: N/N_c = " + std::to_string(nf) + " is odd (use route = exact or even N)");
  }
  if (cfg.route != Route::mc) {
    if (built.n_colors() > 1) fail(0, "route = " + to_string(cfg.route) + ": the exact oracle does not support N_c > 1");
    std::optional<int> m = cfg.filling;
    if (!m) {
      try {
        m = natural_filling(built);
      } catch (const DegenerateGroundState&) {
        // reported by the run itself
      }
    }
    if (m) {
      const double count = exact_configuration_count(built.n_sites(), *m, built.n_flavors());
      if (count > cfg.exact_budget) {
        std::ostringstream msg;
        msg << "route = " << to_string(cfg.route) << " needs " << count << " joint configurations, above exact_budget = "
            << cfg.exact_budget << " (use route = mc or a smaller model)";
        fail(0, msg.str());
      }
    }
  } else if (cfg.filling) {
    fail(run.find("filling")->line, "filling only applies to the exact oracle");
  }

  // [measure]
  const Reader measure(sections, "measure");
  for (const auto& e : measure.all("pair")) {
    try {
      cfg.sampler.pairs.push_back(parse_pair(e.value, built));
    } catch (const InvalidInput& ex) {
      fail(e.line, ex.what());
    }
    cfg.pair_lines.push_back(e.value);
  }
  for (const auto& e : measure.all("profile")) {
    try {
      for (auto& p : parse_profile(e.value, built)) cfg.sampler.pairs.push_back(std::move(p));
    } catch (const InvalidInput& ex) {
      fail(e.line, ex.what());
    }
    cfg.profile_lines.push_back(e.value);
  }
  std::set<std::string> labels;
  for (const auto& p : cfg.sampler.pairs)
    if (!labels.insert(p.label).second) fail(0, "duplicate pair label '" + p.label + "'");
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path());
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  j["model"] = {{"geometry", to_string(model.geometry)},
                {"L", model.lx},
                {"Ly", model.ly},
                {"boundary", to_string(model.boundary)},
                {"t", model.hopping},
                {"twist", model.twist},
                {"mass", model.mass},
                {"disorder_seed", model.disorder_seed},
                {"disorder_strength", model.disorder_strength},
                {"N", model.n_flavors},
                {"N_c", model.n_colors},
                {"h_file", h_file ? h_file->string() : ""}};
  j["run"] = {{"g", g},
              {"route", to_string(route)},
              {"output", output_dir.string()},
              {"chains", n_chains},
              {"exact_budget", exact_budget},
              {"filling", filling ? nlohmann::json(*filling) : nlohmann::json()}};
  j["sampler"] = {{"sweeps", sampler.n_sweeps},
                  {"burnin", sampler.n_burnin},
                  {"bins", sampler.n_bins},
                  {"measure_every", sampler.measure_every},
                  {"sigma", sampler.proposal_sigma},
                  {"auto_tune", sampler.auto_tune},
                  {"seed", sampler.seed}};
  j["measure"] = {{"pair", pair_lines}, {"profile", profile_lines}};
  j["verify"] = {{"models", verify.n_models},
                 {"configs", verify.configs_per_model},
                 {"min_sites", verify.min_sites},
                 {"max_sites", verify.max_sites},
                 {"g_max", verify.g_max},
                 {"bonds", verify.bonds},
                 {"colors", verify.n_colors > 1},
                 {"burnin", verify.n_burnin},
                 {"sweeps_between", verify.sweeps_between},
                 {"seed", verify.seed},
                 {"diagnostics", verify.diagnostics_path ? verify.diagnostics_path->string() : ""}};
  j["analyze"] = {{"input", analyze.input ? analyze.input->string() : ""},
                  {"fit_rmin", analyze.fit_r_min},
                  {"fit_rmax", analyze.fit_r_max ? nlohmann::json(*analyze.fit_r_max) : nlohmann::json()},
                  {"coarse_delta", analyze.coarse_delta},
                  {"goldstone", analyze.goldstone},
                  {"q", analyze.goldstone_q}};
  return j;
}

std::string RunConfig::hash() const {
  std::ostringstream out;
  out << std::hex;
  out.width(16);
  out.fill('0');
  out << fnv1a(to_json().dump());
  return out.str();
}

}  // namespace dephaselab
