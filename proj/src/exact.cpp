// Copyright 2026 The dephaselab Authors
// SPDX-License-Identifier: Apache-2.0

#include "dephaselab/exact.hpp"

#include <bit>
#include <cmath>
#include <sstream>

#include "dephaselab/errors.hpp"

namespace dephaselab {

namespace {

constexpr int kLeft = 0;
constexpr int kRight = 1;

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double out = 1.0;
  for (int i = 1; i <= k; ++i) out = out * (n - k + i) / i;
  return std::round(out);
}

/// Elementary creation/annihilation on one global mode.
struct Elementary {
  bool create;
  int mode;
};

/// coef * first * second, applied to a ket as first(second(|b>)).
struct ElementaryPair {
  cplx coef;
  Elementary first;
  Elementary second;
};

bool apply(std::uint64_t& bits, Elementary e, double& sign) {
  const std::uint64_t m = std::uint64_t{1} << e.mode;
  if (e.create == ((bits & m) != 0)) return false;
  if (std::popcount(bits & (m - 1)) & 1) sign = -sign;
  bits ^= m;
  return true;
}

// c^dag_{site,spin,f} and c_{site,spin,f} in the left/right basis: the down pseudo-spin is
// the particle-hole transformed right layer, c_{i,down} = c^dag_{i,R}.
Elementary creator(const ExactDoubledState& s, int site, int spin, int flavor) {
  if (spin == kUp) return {true, s.global_mode(flavor, kLeft, site)};
  return {false, s.global_mode(flavor, kRight, site)};
}

Elementary annihilator(const ExactDoubledState& s, int site, int spin, int flavor) {
  if (spin == kUp) return {false, s.global_mode(flavor, kLeft, site)};
  return {true, s.global_mode(flavor, kRight, site)};
}

std::vector<ElementaryPair> expand(const ExactDoubledState& state, const ExactOperator& op) {
  std::vector<ElementaryPair> out;
  const int nf = static_cast<int>(op.omega.rows());
  for (const auto& term : op.terms) {
    for (int s = 0; s < 2; ++s)
      for (int sp = 0; sp < 2; ++sp) {
        if (term.spin(s, sp) == cplx(0.0)) continue;
        for (int f = 0; f < nf; ++f)
          for (int fp = 0; fp < nf; ++fp) {
            if (op.omega(f, fp) == cplx(0.0)) continue;
            out.push_back({term.coef * term.spin(s, sp) * op.omega(f, fp), creator(state, term.from, s, f),
                           annihilator(state, term.to, sp, fp)});
          }
      }
  }
  return out;
}

using Branch = std::vector<std::pair<std::uint64_t, cplx>>;

Branch apply_string(const std::vector<std::vector<ElementaryPair>>& expanded, std::uint64_t ket) {
  Branch cur{{ket, cplx(1.0)}};
  for (auto it = expanded.rbegin(); it != expanded.rend(); ++it) {
    Branch next;
    next.reserve(cur.size() * it->size());
    for (const auto& [bits, amp] : cur) {
      for (const auto& t : *it) {
        std::uint64_t b = bits;
        double sign = 1.0;
        if (!apply(b, t.second, sign)) continue;
        if (!apply(b, t.first, sign)) continue;
        next.emplace_back(b, amp * t.coef * sign);
      }
    }
    cur = std::move(next);
    if (cur.empty()) break;
  }
  return cur;
}

template <typename PairWeight>
cplx weighted_sum(const ExactDoubledState& state, std::span<const ExactOperator> ops, PairWeight weight) {
  std::vector<std::vector<ElementaryPair>> expanded;
  expanded.reserve(ops.size());
  for (const auto& op : ops) expanded.push_back(expand(state, op));

  const auto keys = state.keys();
  const auto amps = state.base_amplitudes();
  cplx total(0.0);
  for (std::size_t j = 0; j < keys.size(); ++j) {
    if (amps[j] == cplx(0.0)) continue;
    for (const auto& [bra, coef] : apply_string(expanded, keys[j])) {
      const auto idx = state.find(bra);
      if (idx < 0) continue;
      total += std::conj(amps[idx]) * coef * amps[j] * weight(bra, keys[j]);
    }
  }
  return total;
}

}  // namespace

FockAmplitudeTable slater_fock_amplitudes(const CMatrix& orbitals, int n_particles, double budget) {
  const int n = static_cast<int>(orbitals.rows());
  if (n > 63) throw InvalidInput("Fock tables support at most 63 sites");
  if (n_particles < 0 || n_particles > n || orbitals.cols() < n_particles)
    throw InvalidInput("orbital matrix does not provide the requested number of particles");
  const double count = binomial(n, n_particles);
  if (count > budget) {
    std::ostringstream msg;
    msg << "Fock table of " << count << " bitstrings exceeds the budget " << budget;
    throw SizeLimit(msg.str(), count);
  }

  FockAmplitudeTable table;
  table.n_sites = n;
  table.n_particles = n_particles;
  if (n_particles == 0) {
    table.keys.push_back(0);
    table.amplitudes.push_back(cplx(1.0));
    return table;
  }

  std::uint64_t key = (std::uint64_t{1} << n_particles) - 1;
  const std::uint64_t limit = std::uint64_t{1} << n;
  CMatrix minor(n_particles, n_particles);
  while (key < limit) {
    int row = 0;
    for (int i = 0; i < n; ++i)
      if (key >> i & 1) minor.row(row++) = orbitals.row(i).head(n_particles);
    table.keys.push_back(key);
    table.amplitudes.push_back(minor.determinant());
    // next bitstring with the same popcount (Gosper)
    const std::uint64_t c = key & (~key + 1);
    const std::uint64_t r = key + c;
    key = (((r ^ key) >> 2) / c) | r;
  }
  return table;
}

double exact_configuration_count(int n_sites, int filling, int n_flavors) {
  return std::pow(binomial(n_sites, filling), 2.0 * n_flavors);
}

ExactDoubledState::ExactDoubledState(const TightBindingModel& model, int filling, double g, double budget)
    : m_n_sites(model.n_sites()), m_n_flavors(model.n_flavors()), m_filling(filling), m_g(g) {
  if (model.n_colors() != 1) throw InvalidInput("the exact oracle supports plain density dephasing only (N_c = 1)");
  if (g < 0.0) throw InvalidInput("dephasing strength g must be >= 0");
  const int n = m_n_sites;
  if (2 * m_n_flavors * n > 64) {
    throw SizeLimit("exact oracle needs 2 N n_sites <= 64 modes", 2.0 * m_n_flavors * n);
  }
  const double count = exact_configuration_count(n, filling, m_n_flavors);
  if (count > budget) {
    std::ostringstream msg;
    msg << "exact oracle would enumerate " << count << " joint configurations (budget " << budget << ")";
    throw SizeLimit(msg.str(), count);
  }

  const CMatrix u = single_layer_orbitals(model, filling);
  const FockAmplitudeTable left = slater_fock_amplitudes(u, filling, budget);
  const FockAmplitudeTable right = slater_fock_amplitudes(u.conjugate(), filling, budget);

  const int blocks = 2 * m_n_flavors;
  const std::size_t per_block = left.keys.size();
  const auto total = static_cast<std::size_t>(count);
  m_keys.reserve(total);
  m_base.reserve(total);

  // mixed-radix counter over blocks; block 0 varies slowest
  std::vector<std::size_t> digit(blocks, 0);
  for (std::size_t c = 0; c < total; ++c) {
    std::uint64_t key = 0;
    cplx amp(1.0);
    for (int b = 0; b < blocks; ++b) {
      const FockAmplitudeTable& t = (b % 2 == kLeft) ? left : right;
      key |= t.keys[digit[b]] << (b * n);
      amp *= t.amplitudes[digit[b]];
    }
    m_keys.push_back(key);
    m_base.push_back(amp);
    for (int b = blocks - 1; b >= 0; --b) {
      if (++digit[b] < per_block) break;
      digit[b] = 0;
    }
  }
  m_index.reserve(m_keys.size());
  for (std::size_t i = 0; i < m_keys.size(); ++i) m_index.emplace(m_keys[i], i);

  m_left_mask.assign(n, 0);
  m_right_mask.assign(n, 0);
  m_layer_mask.assign(2, 0);
  for (int f = 0; f < m_n_flavors; ++f)
    for (int i = 0; i < n; ++i) {
      m_left_mask[i] |= std::uint64_t{1} << global_mode(f, kLeft, i);
      m_right_mask[i] |= std::uint64_t{1} << global_mode(f, kRight, i);
      m_layer_mask[kLeft] |= std::uint64_t{1} << global_mode(f, kLeft, i);
      m_layer_mask[kRight] |= std::uint64_t{1} << global_mode(f, kRight, i);
    }

  m_norm = 0.0;
  for (std::size_t i = 0; i < m_keys.size(); ++i) m_norm += std::norm(m_base[i]) * dephasing_weight(m_keys[i]);
}

std::vector<int> ExactDoubledState::imbalance(std::uint64_t key) const {
  std::vector<int> out(m_n_sites);
  for (int i = 0; i < m_n_sites; ++i)
    out[i] = std::popcount(key & m_left_mask[i]) - std::popcount(key & m_right_mask[i]);
  return out;
}

int ExactDoubledState::squared_imbalance(std::uint64_t key) const {
  int total = 0;
  for (int i = 0; i < m_n_sites; ++i) {
    const int d = std::popcount(key & m_left_mask[i]) - std::popcount(key & m_right_mask[i]);
    total += d * d;
  }
  return total;
}

double ExactDoubledState::dephasing_weight(std::uint64_t key) const {
  return std::exp(-m_g * squared_imbalance(key));
}

int ExactDoubledState::layer_charge(std::uint64_t key, int layer) const {
  return std::popcount(key & m_layer_mask.at(layer));
}

std::ptrdiff_t ExactDoubledState::find(std::uint64_t key) const {
  const auto it = m_index.find(key);
  return it == m_index.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
}

ExactDoubledState build_exact_state(const TightBindingModel& model, double g, const ExactOptions& options) {
  const int filling = options.filling ? *options.filling : natural_filling(model);
  return ExactDoubledState(model, filling, g, options.budget);
}

ExactOperator exact_operator(const BilinearSpec& op, const TightBindingModel& model) {
  validate_bilinear(op, model);
  return ExactOperator{resolve_terms(op, model.lattice), op.omega};
}

cplx exact_expectation(const ExactDoubledState& state, std::span<const ExactOperator> ops, Insertion insertion) {
  const double g = state.g();
  if (state.norm() <= 0.0) throw IntegrityError("exact state has zero norm");
  if (insertion == Insertion::two_sided) {
    const cplx total = weighted_sum(state, ops, [&](std::uint64_t a, std::uint64_t b) {
      return std::exp(-0.5 * g * (state.squared_imbalance(a) + state.squared_imbalance(b)));
    });
    return total / state.norm();
  }
  const cplx total = weighted_sum(state, ops, [&](std::uint64_t a, std::uint64_t b) {
    const auto da = state.imbalance(a);
    const auto db = state.imbalance(b);
    double s = 0.0;
    for (std::size_t i = 0; i < da.size(); ++i) s += (da[i] + db[i]) * (da[i] + db[i]);
    return std::exp(-0.25 * g * s);
  });
  return total / state.norm();
}

cplx exact_fixed_field_overlap(const ExactDoubledState& state, const RVector& phi) {
  if (phi.size() != state.n_sites()) throw InvalidInput("field length does not match the model");
  const auto keys = state.keys();
  const auto amps = state.base_amplitudes();
  cplx total(0.0);
  for (std::size_t j = 0; j < keys.size(); ++j) {
    const auto d = state.imbalance(keys[j]);
    double arg = 0.0;
    for (int i = 0; i < state.n_sites(); ++i) arg += phi(i) * d[i];
    total += std::norm(amps[j]) * std::polar(1.0, -2.0 * arg);
  }
  return total;
}

cplx exact_fixed_field_expectation(const ExactDoubledState& state, std::span<const ExactOperator> ops,
                                   const RVector& phi) {
  if (phi.size() != state.n_sites()) throw InvalidInput("field length does not match the model");
  const cplx overlap = exact_fixed_field_overlap(state, phi);
  if (std::abs(overlap) == 0.0) throw IntegrityError("defect overlap vanishes at this field");
  const cplx total = weighted_sum(state, ops, [&](std::uint64_t a, std::uint64_t b) {
    const auto da = state.imbalance(a);
    const auto db = state.imbalance(b);
    double arg = 0.0;
    for (int i = 0; i < state.n_sites(); ++i) arg += phi(i) * (da[i] + db[i]);
    return std::polar(1.0, -arg);
  });
  return total / overlap;
}

ExactCorrelator exact_renyi2_correlator(const ExactDoubledState& state, const TightBindingModel& model,
                                        const BilinearSpec& a, const BilinearSpec& b, Insertion insertion) {
  const ExactOperator oa = exact_operator(a, model);
  const ExactOperator ob = exact_operator(b, model);
  ExactCorrelator out;
  const ExactOperator pair[2] = {oa, ob};
  out.full = exact_expectation(state, pair, insertion);
  out.mean_a = exact_expectation(state, std::span<const ExactOperator>(&oa, 1), insertion);
  out.mean_b = exact_expectation(state, std::span<const ExactOperator>(&ob, 1), insertion);
  out.connected = out.full - out.mean_a * out.mean_b;
  return out;
}

cplx exact_fourpoint(const ExactDoubledState& state, const TightBindingModel& model,
                     std::span<const BilinearSpec, 4> ops, Insertion insertion) {
  std::vector<ExactOperator> converted;
  for (const auto& op : ops) converted.push_back(exact_operator(op, model));
  return exact_expectation(state, converted, insertion);
}

}  // namespace dephaselab
