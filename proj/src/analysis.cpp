// Copyright 2026 The dephaselab Authors
// SPDX-License-Identifier: Apache-2.0

#include "dephaselab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

#include "dephaselab/errors.hpp"

namespace dephaselab {

namespace {

constexpr double kDistanceKey = 1e9;  // distances are grouped after rounding to 1e-9

long long distance_key(double r) { return std::llround(r * kDistanceKey); }

struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
  double slope_error = 0.0;
  double rms = 0.0;
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - f.intercept - f.slope * x[i];
    ss += e * e;
  }
  f.rms = std::sqrt(ss / n);
  f.slope_error = x.size() > 2 ? std::sqrt(ss / (n - 2.0) / sxx) : 0.0;
  return f;
}

}  // namespace

nlohmann::json Profile::to_json() const {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : points) pts.push_back({{"r", p.r}, {"value", p.value}, {"error", p.error}, {"count", p.count}});
  return {{"points", pts}, {"notices", notices}};
}

std::string Profile::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "r,value,error\n";
  for (const auto& p : points) out << p.r << "," << p.value << "," << p.error << "\n";
  return out.str();
}

Profile distance_profile(const std::vector<PairValue>& table, const Lattice& lattice) {
  std::map<long long, std::vector<const PairValue*>> groups;
  Profile out;
  for (const auto& pv : table) {
    if (pv.x < 0 || pv.y < 0 || pv.x >= lattice.n_sites() || pv.y >= lattice.n_sites())
      throw InvalidInput("profile entry has a site outside the lattice");
    if (!std::isfinite(pv.value)) {
      out.notices.push_back("skipped non-finite entry (" + std::to_string(pv.x) + "," + std::to_string(pv.y) + ")");
      continue;
    }
    groups[distance_key(lattice.distance(pv.x, pv.y))].push_back(&pv);
  }
  for (const auto& [key, members] : groups) {
    ProfilePoint p;
    p.r = static_cast<double>(key) / kDistanceKey;
    double ss = 0.0;
    for (const auto* m : members) {
      p.value += m->value;
      ss += m->error * m->error;
    }
    p.count = static_cast<int>(members.size());
    p.value /= p.count;
    p.error = std::sqrt(ss) / p.count;
    out.points.push_back(p);
  }
  if (out.points.empty()) out.notices.push_back("profile is empty");
  return out;
}

Profile combine_profiles(const std::vector<Profile>& realizations) {
  std::map<long long, std::vector<ProfilePoint>> groups;
  Profile out;
  for (const auto& prof : realizations)
    for (const auto& p : prof.points) groups[distance_key(p.r)].push_back(p);
  for (const auto& [key, pts] : groups) {
    ProfilePoint c;
    c.r = static_cast<double>(key) / kDistanceKey;
    const double n = static_cast<double>(pts.size());
    double ss = 0.0;
    for (const auto& p : pts) {
      c.value += p.value;
      c.count += p.count;
      ss += p.error * p.error;
    }
    c.value /= n;
    if (pts.size() >= 2) {
      double var = 0.0;
      for (const auto& p : pts) var += (p.value - c.value) * (p.value - c.value);
      c.error = std::sqrt(var / (n - 1.0) / n);
    } else {
      c.error = std::sqrt(ss) / n;
      out.notices.push_back("single realization at r = " + std::to_string(c.r));
    }
    out.points.push_back(c);
  }
  return out;
}

CoarseGrained coarse_grain(const CMatrix& values, const Lattice& lattice, int delta) {
  const int n = lattice.n_sites();
  if (values.rows() != n || values.cols() != n) throw InvalidInput("correlator table does not match the lattice");
  if (delta < 0) throw InvalidInput("coarse-graining size must be >= 0");
  CoarseGrained out;
  // neighbourhood of each site: sites reachable with |dx|, |dy| <= delta
  std::vector<std::vector<int>> hood(static_cast<std::size_t>(n));
  for (int x = 0; x < n; ++x)
    for (int dy = -delta; dy <= delta; ++dy)
      for (int dx = -delta; dx <= delta; ++dx)
        if (auto s = lattice.shifted(x, {dx, dy}); s && (lattice.ly > 1 || dy == 0))
          hood[static_cast<std::size_t>(x)].push_back(*s);

  const double nan = std::numeric_limits<double>::quiet_NaN();
  out.values = CMatrix::Constant(n, n, cplx(nan, nan));
  std::vector<PairValue> table;
  int close_pairs = 0;
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y) {
      cplx s(0.0);
      int count = 0;
      for (int xp : hood[static_cast<std::size_t>(x)])
        for (int yp : hood[static_cast<std::size_t>(y)]) {
          const cplx v = values(xp, yp);
          if (std::isnan(v.real()) || std::isnan(v.imag())) continue;
          s += v;
          ++count;
        }
      if (count == 0) continue;
      out.values(x, y) = s / static_cast<double>(count);
      if (delta > 0 && lattice.distance(x, y) < 2 * delta + 1) ++close_pairs;
      table.push_back({x, y, out.values(x, y).real(), 0.0});
    }
  if (close_pairs > 0)
    out.notices.push_back(std::to_string(close_pairs) + " pairs are closer than 2 delta + 1; their neighbourhoods overlap");
  out.profile = distance_profile(table, lattice);
  return out;
}

std::string to_string(DecayForm f) { return f == DecayForm::power ? "power" : "exponential"; }

nlohmann::json DecayFit::to_json() const {
  return {{"preferred", to_string(preferred)},
          {"power", {{"Delta", delta}, {"Delta_error", delta_error}, {"prefactor", power_prefactor},
                     {"residual", power_residual}}},
          {"exponential", {{"xi", xi}, {"xi_error", xi_error}, {"prefactor", exp_prefactor},
                           {"residual", exp_residual}}},
          {"window", {r_min, r_max}},
          {"n_points", n_points},
          {"notices", notices}};
}

DecayFit fit_decay(const Profile& profile, double system_size, const FitWindow& window) {
  DecayFit fit;
  fit.r_min = window.r_min;
  fit.r_max = window.r_max ? *window.r_max : system_size / 3.0;
  std::vector<double> r, logv;
  for (const auto& p : profile.points) {
    if (p.r < fit.r_min - 1e-12 || p.r > fit.r_max + 1e-12) continue;
    if (!(p.value > 0.0)) {
      fit.notices.push_back("excluded non-positive value at r = " + std::to_string(p.r));
      continue;
    }
    r.push_back(p.r);
    logv.push_back(std::log(p.value));
  }
  fit.n_points = static_cast<int>(r.size());
  if (r.size() < 4) {
    throw InvalidInput("too few points for a decay fit: " + std::to_string(r.size()) + " usable in window [" +
                       std::to_string(fit.r_min) + ", " + std::to_string(fit.r_max) + "], need 4");
  }
  std::vector<double> logr(r.size());
  std::transform(r.begin(), r.end(), logr.begin(), [](double v) { return std::log(v); });

  const LineFit pw = least_squares(logr, logv);
  fit.delta = -pw.slope / 2.0;
  fit.delta_error = pw.slope_error / 2.0;
  fit.power_prefactor = std::exp(pw.intercept);
  fit.power_residual = pw.rms;

  const LineFit ex = least_squares(r, logv);
  fit.xi = -1.0 / ex.slope;
  fit.xi_error = ex.slope_error / (ex.slope * ex.slope);
  fit.exp_prefactor = std::exp(ex.intercept);
  fit.exp_residual = ex.rms;

  if (fit.delta <= 0.0) fit.notices.push_back("power fit does not decay (Delta <= 0)");
  if (fit.xi <= 0.0) fit.notices.push_back("exponential fit does not decay (xi <= 0)");
  fit.preferred = fit.exp_residual < fit.power_residual ? DecayForm::exponential : DecayForm::power;
  return fit;
}

std::array<double, 2> MomentumTable::momentum(int index) const {
  const double two_pi = 2.0 * std::numbers::pi;
  return {two_pi * (index % lx) / lx, two_pi * (index / lx) / ly};
}

MomentumTable structure_factor(const SeparationTable& t) {
  const int n = t.lx * t.ly;
  if (static_cast<int>(t.values.size()) != n) throw InvalidInput("separation table size does not match lx * ly");
  MomentumTable out{t.lx, t.ly, std::vector<cplx>(static_cast<std::size_t>(n))};
  for (int k = 0; k < n; ++k) {
    const auto q = out.momentum(k);
    cplx s(0.0);
    for (int d = 0; d < n; ++d) s += std::polar(1.0, -(q[0] * (d % t.lx) + q[1] * (d / t.lx))) * t.values[d];
    out.values[static_cast<std::size_t>(k)] = s;
  }
  return out;
}

SeparationTable inverse_structure_factor(const MomentumTable& t) {
  const int n = t.lx * t.ly;
  if (static_cast<int>(t.values.size()) != n) throw InvalidInput("momentum table size does not match lx * ly");
  SeparationTable out{t.lx, t.ly, std::vector<cplx>(static_cast<std::size_t>(n))};
  for (int d = 0; d < n; ++d) {
    cplx s(0.0);
    for (int k = 0; k < n; ++k) {
      const auto q = t.momentum(k);
      s += std::polar(1.0, q[0] * (d % t.lx) + q[1] * (d / t.lx)) * t.values[static_cast<std::size_t>(k)];
    }
    out.values[static_cast<std::size_t>(d)] = s / static_cast<double>(n);
  }
  return out;
}

SeparationTable translation_average(const CMatrix& values, const Lattice& lattice) {
  const int n = lattice.n_sites();
  if (values.rows() != n || values.cols() != n) throw InvalidInput("correlator table does not match the lattice");
  if (!lattice.periodic) throw InvalidInput("translation average needs a periodic lattice");
  SeparationTable out{lattice.lx, lattice.ly, std::vector<cplx>(static_cast<std::size_t>(n), cplx(0.0))};
  std::vector<int> count(static_cast<std::size_t>(n), 0);
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y) {
      const auto d = lattice.displacement(x, y);
      const std::size_t idx = static_cast<std::size_t>(d[0] + lattice.lx * d[1]);
      out.values[idx] += values(x, y);
      ++count[idx];
    }
  for (std::size_t i = 0; i < out.values.size(); ++i)
    if (count[i] > 0) out.values[i] /= static_cast<double>(count[i]);
  return out;
}

cplx pair_structure_factor(const CMatrix& values, const std::vector<double>& positions, double k) {
  const auto n = static_cast<Eigen::Index>(positions.size());
  if (values.rows() != n || values.cols() != n) throw InvalidInput("correlator table does not match positions");
  cplx s(0.0);
  for (Eigen::Index x = 0; x < n; ++x)
    for (Eigen::Index y = 0; y < n; ++y)
      s += std::polar(1.0, -k * (positions[static_cast<std::size_t>(x)] - positions[static_cast<std::size_t>(y)])) *
           values(x, y);
  return s;
}

nlohmann::json GoldstoneReport::to_json() const {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : points)
    pts.push_back({{"k", p.k}, {"r_target", p.r_target}, {"r_used", p.r_used}, {"lhs", p.lhs},
                   {"rhs", p.rhs}, {"margin", p.margin}, {"skipped", p.skipped}});
  return {{"points", pts}, {"min_margin", min_margin}, {"notices", notices}};
}

GoldstoneReport goldstone_bound_check(const GoldstoneInput& in) {
  if (in.k.size() != in.jj.size()) throw InvalidInput("JJ(k) mesh size mismatch");
  if (in.r.size() != in.oo.size() || in.r.size() != in.fourpoint.size())
    throw InvalidInput("OO(r) and fourpoint(r) meshes must match");
  if (in.r.empty()) throw InvalidInput("distance mesh is empty");
  GoldstoneReport rep;
  rep.min_margin = std::numeric_limits<double>::infinity();
  const double q2 = static_cast<double>(in.q) * in.q;
  for (std::size_t i = 0; i < in.k.size(); ++i) {
    GoldstonePoint p;
    p.k = in.k[i];
    if (!(p.k > 0.0)) throw InvalidInput("Goldstone check needs k > 0");
    p.r_target = std::numbers::pi / p.k;
    std::size_t best = 0;
    for (std::size_t j = 1; j < in.r.size(); ++j)
      if (std::abs(in.r[j] - p.r_target) < std::abs(in.r[best] - p.r_target)) best = j;
    p.r_used = in.r[best];
    p.lhs = p.k * p.k * in.jj[i].real();
    if (std::abs(in.jj[i].imag()) > 1e-10 * std::max(1.0, std::abs(in.jj[i].real())))
      rep.notices.push_back("JJ(k) has an imaginary part at k = " + std::to_string(p.k));
    const double fp = in.fourpoint[best];
    if (!(fp > 0.0)) {
      p.skipped = true;
      rep.notices.push_back("fourpoint(r) <= 0 at r = " + std::to_string(p.r_used) + "; point skipped");
      rep.points.push_back(p);
      continue;
    }
    const double s = std::sin(p.k * p.r_used / 2.0);
    p.rhs = 4.0 * q2 * s * s * std::norm(in.oo[best]) / fp;
    p.margin = p.lhs - p.rhs;
    rep.min_margin = std::min(rep.min_margin, p.margin);
    rep.points.push_back(p);
  }
  return rep;
}

}  // namespace dephaselab
