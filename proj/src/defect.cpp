// Copyright 2026 The dephaselab Authors
// SPDX-License-Identifier: Apache-2.0

#include "dephaselab/defect.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "dephaselab/errors.hpp"

namespace dephaselab {

namespace {

// rows of `m` grouped by site (2 N_c rows each) multiplied by the site block on both spins
CMatrix apply_site_blocks(const std::vector<CMatrix>& blocks, const CMatrix& m, int n_colors, bool adjoint) {
  CMatrix out(m.rows(), m.cols());
  const int nc = n_colors;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const CMatrix b = adjoint ? CMatrix(blocks[i].adjoint()) : blocks[i];
    for (int s = 0; s < 2; ++s) {
      const Eigen::Index row = (2 * static_cast<Eigen::Index>(i) + s) * nc;
      out.middleRows(row, nc).noalias() = b * m.middleRows(row, nc);
    }
  }
  return out;
}

CMatrix dense_from_blocks(const std::vector<CMatrix>& blocks, int nc) {
  const auto n = static_cast<Eigen::Index>(blocks.size());
  CMatrix out = CMatrix::Zero(2 * n * nc, 2 * n * nc);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int s = 0; s < 2; ++s) out.block((2 * i + s) * nc, (2 * i + s) * nc, nc, nc) = blocks[i];
  return out;
}

CMatrix spin_block(const Matrix2c& s, int nc) {
  return kron(CMatrix(s), CMatrix::Identity(nc, nc));
}

// tr(A B C D) for small square blocks
template <typename A, typename B, typename C, typename D>
cplx trace4(const A& a, const B& b, const C& c, const D& d) {
  return (a * b * c * d).trace();
}

}  // namespace

DefectKernel make_kernel(const TightBindingModel& model, const SlaterOrbitals& orbitals, double g) {
  if (g < 0.0 || !std::isfinite(g)) throw InvalidInput("dephasing strength g must be finite and >= 0");
  if (orbitals.p.rows() != 2 * model.n_sites()) throw InvalidInput("orbitals do not match the model");
  DefectKernel k;
  k.n_sites = model.n_sites();
  k.n_colors = model.n_colors();
  k.n_flavor_species = model.n_flavor_species();
  k.flavor_power = k.n_flavor_species;
  k.g = g;
  k.lattice = model.lattice;
  k.p = k.n_colors == 1 ? orbitals.p : kron(orbitals.p, CMatrix::Identity(k.n_colors, k.n_colors));
  if (k.colored()) k.generators = su_generators(k.n_colors);
  return k;
}

DefectField DefectField::zeros(const DefectKernel& kernel) {
  return DefectField{RMatrix::Zero(kernel.channels(), kernel.n_sites), kernel.g};
}

CMatrix DefectMatrices::dense_v() const { return dense_from_blocks(v, n_colors); }
CMatrix DefectMatrices::dense_vhalf() const { return dense_from_blocks(vhalf, n_colors); }

DefectMatrices defect_matrices(const DefectField& field, const DefectKernel& kernel) {
  if (field.phi.rows() != kernel.channels() || field.phi.cols() != kernel.n_sites)
    throw InvalidInput("defect field shape does not match the model");
  if (!field.phi.allFinite()) throw InvalidInput("defect field has non-finite entries");

  DefectMatrices out;
  out.n_colors = kernel.n_colors;
  out.v.reserve(kernel.n_sites);
  out.vhalf.reserve(kernel.n_sites);
  if (!kernel.colored()) {
    double total = 0.0;
    for (int i = 0; i < kernel.n_sites; ++i) {
      const double phi = field.phi(0, i);
      out.v.push_back(CMatrix::Constant(1, 1, std::polar(1.0, -2.0 * phi)));
      out.vhalf.push_back(CMatrix::Constant(1, 1, std::polar(1.0, -phi)));
      total += phi;
    }
    out.compensation = std::polar(1.0, 2.0 * kReferenceDensity * total);
    return out;
  }

  const int nc = kernel.n_colors;
  for (int i = 0; i < kernel.n_sites; ++i) {
    CMatrix a = CMatrix::Zero(nc, nc);
    for (int c = 0; c < kernel.channels(); ++c) a += field.phi(c, i) * kernel.generators[c];
    Eigen::SelfAdjointEigenSolver<CMatrix> es(a);
    const RVector& lam = es.eigenvalues();
    const CMatrix& u = es.eigenvectors();
    CVector full(nc), half(nc);
    for (int k = 0; k < nc; ++k) {
      full(k) = std::polar(1.0, -2.0 * lam(k));
      half(k) = std::polar(1.0, -lam(k));
    }
    out.v.push_back(u * full.asDiagonal() * u.adjoint());
    out.vhalf.push_back(u * half.asDiagonal() * u.adjoint());
  }
  return out;
}

double DefectWeight::value() const {
  if (node) return 0.0;
  return sign() * std::exp(log_magnitude);
}

int DefectWeight::sign() const {
  if (node) return 0;
  const int s = amplitude < 0.0 ? -1 : 1;
  return (flavor_power % 2 == 0) ? 1 : s;
}

namespace {

double gaussian_part(const DefectField& field, const DefectKernel& kernel) {
  const double sq = field.phi.squaredNorm();
  if (kernel.g == 0.0) return sq == 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
  return -sq / kernel.g;
}

DefectWeight weight_from_logdet(const DefectKernel& kernel, const DefectField& field, const DefectMatrices& mats,
                                const LogDet& ld) {
  DefectWeight w;
  w.flavor_power = kernel.flavor_power;
  w.compensated = !kernel.colored();
  w.gaussian_part = gaussian_part(field, kernel);
  if (ld.singular) {
    w.node = true;
    w.log_magnitude = -std::numeric_limits<double>::infinity();
    w.phase = cplx(0.0);
    w.amplitude = 0.0;
    return w;
  }
  const cplx amp_phase = mats.compensation * ld.phase;
  w.amplitude_imag_ratio = std::abs(amp_phase.imag());
  if (!(w.amplitude_imag_ratio <= kIntegrityTol)) {
    std::ostringstream msg;
    msg << "per-flavor defect amplitude is not real: |Im|/|amp| = " << w.amplitude_imag_ratio;
    throw IntegrityError(msg.str());
  }
  const double sign = amp_phase.real() < 0.0 ? -1.0 : 1.0;
  w.amplitude = sign * std::exp(ld.log_abs);
  w.log_magnitude = kernel.flavor_power * ld.log_abs + w.gaussian_part;
  w.phase = std::pow(amp_phase, kernel.flavor_power);
  if (std::isnan(w.log_magnitude)) throw IntegrityError("NaN defect weight");
  return w;
}

}  // namespace

DefectEvaluation evaluate_field(const DefectKernel& kernel, const DefectField& field, bool with_greens) {
  DefectEvaluation out;
  out.mats = defect_matrices(field, kernel);
  const CMatrix ur = apply_site_blocks(out.mats.vhalf, kernel.p, kernel.n_colors, false);
  const CMatrix ul = apply_site_blocks(out.mats.vhalf, kernel.p, kernel.n_colors, true);
  const CMatrix overlap = ul.adjoint() * ur;  // P^dag V P
  Eigen::PartialPivLU<CMatrix> lu(overlap);
  const LogDet ld = log_determinant(lu);
  out.weight = weight_from_logdet(kernel, field, out.mats, ld);
  if (with_greens && !ld.singular) {
    DefectGreens g;
    g.block = kernel.block();
    g.less = ur * lu.solve(CMatrix(ul.adjoint()));
    g.greater = CMatrix::Identity(kernel.dim(), kernel.dim()) - g.less;
    out.greens = std::move(g);
  }
  return out;
}

DefectWeight config_weight(const DefectKernel& kernel, const DefectField& field, const DefectMatrices& mats) {
  const CMatrix ur = apply_site_blocks(mats.vhalf, kernel.p, kernel.n_colors, false);
  const CMatrix ul = apply_site_blocks(mats.vhalf, kernel.p, kernel.n_colors, true);
  return weight_from_logdet(kernel, field, mats, log_determinant(CMatrix(ul.adjoint() * ur)));
}

std::optional<DefectGreens> defect_greens(const DefectKernel& kernel, const DefectMatrices& mats) {
  const CMatrix ur = apply_site_blocks(mats.vhalf, kernel.p, kernel.n_colors, false);
  const CMatrix ul = apply_site_blocks(mats.vhalf, kernel.p, kernel.n_colors, true);
  Eigen::PartialPivLU<CMatrix> lu(CMatrix(ul.adjoint() * ur));
  if (log_determinant(lu).singular) return std::nullopt;
  DefectGreens g;
  g.block = kernel.block();
  g.less = ur * lu.solve(CMatrix(ul.adjoint()));
  g.greater = CMatrix::Identity(kernel.dim(), kernel.dim()) - g.less;
  return g;
}

FieldCorrelator correlator_fixed_field(const DefectGreens& greens, const DefectKernel& kernel,
                                       const BilinearSpec& a, const BilinearSpec& b) {
  const int nf = kernel.n_flavor_species;
  if (a.omega.rows() != nf || b.omega.rows() != nf || a.omega.cols() != nf || b.omega.cols() != nf)
    throw InvalidInput("flavor matrix dimension does not match N_f");
  const auto ta = resolve_terms(a, kernel.lattice);
  const auto tb = resolve_terms(b, kernel.lattice);
  const cplx flavor_ab = (a.omega * b.omega).trace();
  const int nc = kernel.n_colors;

  FieldCorrelator out{cplx(0.0), cplx(0.0), cplx(0.0)};
  for (const auto& x : ta) {
    const CMatrix sx = spin_block(x.spin, nc);
    for (const auto& y : tb) {
      const CMatrix sy = spin_block(y.spin, nc);
      out.connected += x.coef * y.coef *
                       trace4(sx, greens.greater_block(x.to, y.from), sy, greens.less_block(y.to, x.from));
    }
    out.mean_a += x.coef * (sx * greens.less_block(x.to, x.from)).trace();
  }
  for (const auto& y : tb) out.mean_b += y.coef * (spin_block(y.spin, nc) * greens.less_block(y.to, y.from)).trace();
  out.connected *= flavor_ab;
  out.mean_a *= a.omega.trace();
  out.mean_b *= b.omega.trace();
  return out;
}

namespace {

cplx cstar_kinematic(const DefectGreens& greens, const CMatrix& s1, int x, int y) {
  return trace4(s1, greens.greater_block(x, y), s1, greens.less_block(y, x));
}

}  // namespace

double cstar_fixed_field(const DefectGreens& greens, const DefectKernel& kernel, int x, int y,
                         const CMatrix& omega, double* imag_residual) {
  if (x < 0 || y < 0 || x >= kernel.n_sites || y >= kernel.n_sites) throw InvalidInput("site index out of range");
  const CMatrix s1 = spin_block(pseudo_spin_matrix(PseudoSpin::s1), kernel.n_colors);
  const cplx value = (omega * omega).trace() * cstar_kinematic(greens, s1, x, y);
  if (imag_residual) *imag_residual = std::abs(value.imag());
  return value.real();
}

double sigma1_residual(const DefectGreens& greens, const DefectKernel& kernel) {
  const int n = kernel.n_sites;
  const CMatrix s1 = spin_block(pseudo_spin_matrix(PseudoSpin::s1), kernel.n_colors);
  const CMatrix sig = kron(CMatrix::Identity(n, n), s1);
  return (sig * greens.less * sig - greens.greater.adjoint()).cwiseAbs().maxCoeff();
}

nlohmann::json ConfigReport::to_json() const {
  nlohmann::json j;
  j["node"] = node;
  j["weight_value"] = weight_value;
  j["weight_real_part"] = weight_real_part;
  j["weight_imag_ratio"] = weight_imag_ratio;
  j["min_cstar"] = min_cstar;
  j["sigma1_residual"] = sigma1_residual;
  j["min_margin"] = min_margin;
  j["violations"] = violations;
  j["n_pairs"] = pairs.size();
  return j;
}

ConfigReport check_config(const DefectGreens& greens, const DefectWeight& weight, const DefectKernel& kernel,
                          std::span<const CheckedPair> pairs) {
  ConfigReport report;
  report.node = weight.node;
  report.weight_value = weight.value();
  report.weight_real_part = weight.phase.real();
  report.weight_imag_ratio = std::abs(weight.phase.imag());
  report.sigma1_residual = sigma1_residual(greens, kernel);
  report.min_cstar = std::numeric_limits<double>::infinity();
  report.min_margin = std::numeric_limits<double>::infinity();

  if (report.weight_imag_ratio > kRealityTol) ++report.violations;
  if (weight.flavor_power % 2 == 0 && report.weight_real_part < -kPositivityTol) ++report.violations;
  if (!(report.sigma1_residual <= kSigma1Tol)) ++report.violations;

  const int n = kernel.n_sites;
  const int nc = kernel.n_colors;
  const CMatrix s1 = spin_block(pseudo_spin_matrix(PseudoSpin::s1), nc);

  // kinematic part of C*(x, y), flavor factor stripped; filled lazily
  std::vector<cplx> cstar_cache(static_cast<std::size_t>(n) * n);
  std::vector<char> cached(static_cast<std::size_t>(n) * n, 0);
  auto cstar = [&](int x, int y, double flavor) {
    const std::size_t k = static_cast<std::size_t>(x) * n + y;
    if (!cached[k]) {
      cstar_cache[k] = cstar_kinematic(greens, s1, x, y);
      cached[k] = 1;
    }
    const double v = flavor * cstar_cache[k].real();
    report.min_cstar = std::min(report.min_cstar, v);
    if (v < -kPositivityTol || std::abs(flavor * cstar_cache[k].imag()) > kRealityTol * std::max(1.0, std::abs(v)))
      ++report.violations;
    return v;
  };

  report.pairs.reserve(pairs.size());
  for (std::size_t idx = 0; idx < pairs.size(); ++idx) {
    const auto& [a, b] = pairs[idx];
    if (a.spin != b.spin || a.offset != b.offset || a.antisymmetric || b.antisymmetric ||
        !a.omega.isApprox(b.omega, 1e-14))
      throw InvalidInput("checked pairs need identical spin, flavor matrix and offset");
    if (std::abs(a.omega.trace()) > 1e-12) throw InvalidInput("inequality checks require a traceless flavor matrix");

    const auto xa = kernel.lattice.shifted(a.site, a.offset);
    const auto yb = kernel.lattice.shifted(b.site, b.offset);
    if (!xa || !yb) throw InvalidInput("bond operator leaves the lattice");
    const int x = a.site, y = b.site, xd = *xa, yd = *yb;

    const double flavor = (a.omega * a.omega).trace().real();
    const CMatrix s = spin_block(pseudo_spin_matrix(a.spin), nc);
    const CMatrix u = s * greens.greater_block(xd, y);
    const CMatrix v = s * greens.less_block(yd, x);
    const cplx c = flavor * (u * v).trace();

    PairCheck pc;
    pc.index = idx;
    pc.bond = !a.onsite();
    pc.abs_c = std::abs(c);
    pc.cs_lhs = pc.abs_c;
    pc.cs_rhs = flavor * u.norm() * v.norm();
    if (pc.bond) {
      pc.bound = std::sqrt(std::max(cstar(xd, y, flavor), 0.0) * std::max(cstar(x, yd, flavor), 0.0));
    } else {
      pc.bound = cstar(x, y, flavor);
    }
    pc.margin = pc.bound - pc.abs_c;
    report.min_margin = std::min(report.min_margin, pc.margin);
    if (pc.margin < -kMarginTol || pc.cs_lhs > pc.cs_rhs + kMarginTol) ++report.violations;
    report.pairs.push_back(pc);
  }
  if (pairs.empty()) {
    report.min_cstar = 0.0;
    report.min_margin = 0.0;
  }
  return report;
}

std::vector<CheckedPair> all_checked_pairs(const DefectKernel& kernel,
                                           std::span<const std::array<int, 2>> bond_offsets) {
  std::vector<CheckedPair> out;
  if (kernel.n_flavor_species < 2) return out;
  const auto gens = su_generators(kernel.n_flavor_species);
  const int n = kernel.n_sites;
  for (const auto& omega : gens)
    for (int mu = 0; mu < 4; ++mu) {
      const PseudoSpin s = pseudo_spin_from_mu(mu);
      for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y) out.push_back({onsite_bilinear(x, s, omega), onsite_bilinear(y, s, omega)});
      for (const auto& d : bond_offsets)
        for (int x = 0; x < n; ++x) {
          if (!kernel.lattice.shifted(x, d)) continue;
          for (int y = 0; y < n; ++y) {
            if (!kernel.lattice.shifted(y, d)) continue;
            out.push_back({bond_bilinear(x, d, s, omega), bond_bilinear(y, d, s, omega)});
          }
        }
    }
  return out;
}

}  // namespace dephaselab
