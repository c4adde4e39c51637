// Copyright 2026 The dephaselab Authors
// SPDX-License-Identifier: Apache-2.0

#include "dephaselab/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "dephaselab/errors.hpp"

namespace dephaselab {

namespace {

constexpr double kHermitianTol = 1e-12;

int wrap(int v, int n) { return ((v % n) + n) % n; }

Lattice make_lattice(int lx, int ly, bool periodic) {
  Lattice lat;
  lat.lx = lx;
  lat.ly = ly;
  lat.periodic = periodic;
  lat.coords.reserve(static_cast<std::size_t>(lx) * ly);
  for (int y = 0; y < ly; ++y)
    for (int x = 0; x < lx; ++x) lat.coords.push_back({x, y});
  return lat;
}

void add_bond(CMatrix& h, int i, int j, cplx amp) {
  h(i, j) += amp;
  h(j, i) += std::conj(amp);
}

// Nearest-neighbour bonds of an lx x ly grid; `y_sign(x)` multiplies the y hopping.
template <typename YSign>
CMatrix grid_hamiltonian(const ModelSpec& spec, const Lattice& lat, YSign y_sign) {
  const int n = lat.n_sites();
  CMatrix h = CMatrix::Zero(n, n);
  const bool periodic = spec.boundary == Boundary::periodic;
  const cplx twist = std::polar(1.0, spec.twist);
  auto site = [&](int x, int y) { return x + lat.lx * y; };

  std::mt19937_64 rng(spec.disorder_seed);
  std::uniform_real_distribution<double> unit(-0.5, 0.5);

  for (int y = 0; y < lat.ly; ++y) {
    for (int x = 0; x < lat.lx; ++x) {
      if (lat.lx > 1 && (x + 1 < lat.lx || periodic)) {
        const bool wraps = x + 1 == lat.lx;
        cplx amp = -spec.hopping * (wraps ? twist : cplx(1.0));
        add_bond(h, site(x, y), site(wrap(x + 1, lat.lx), y), amp);
      }
      if (lat.ly > 1 && (y + 1 < lat.ly || periodic)) {
        add_bond(h, site(x, y), site(x, wrap(y + 1, lat.ly)), -spec.hopping * y_sign(x));
      }
    }
  }
  if (spec.mass != 0.0) {
    for (int y = 0; y < lat.ly; ++y)
      for (int x = 0; x < lat.lx; ++x) h(site(x, y), site(x, y)) += spec.mass * (((x + y) % 2 == 0) ? 1.0 : -1.0);
  }
  if (spec.disorder_strength > 0.0) {
    for (int i = 0; i < n; ++i) h(i, i) += spec.disorder_strength * unit(rng);
  }
  return h;
}

CMatrix random_hamiltonian(const ModelSpec& spec, int n) {
  std::mt19937_64 rng(spec.disorder_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  CMatrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = cplx(normal(rng), normal(rng)) / std::sqrt(2.0);
  CMatrix h = spec.hopping * (a + a.adjoint()) / 2.0;
  for (int i = 0; i < n; ++i) h(i, i) = h(i, i).real();
  return h;
}

void check_hermitian(const CMatrix& h, const char* what) {
  if (h.rows() != h.cols()) throw InvalidInput(std::string(what) + ": matrix is not square");
  const double defect = hermiticity_defect(h);
  if (defect > kHermitianTol) {
    std::ostringstream msg;
    msg << what << ": matrix is not Hermitian (max |h_ij - conj(h_ji)| = " << defect << ")";
    throw InvalidInput(msg.str());
  }
}

struct Level {
  double energy;
  int spin;
  int index;  // column of the block eigenvector matrix
};

}  // namespace

Geometry parse_geometry(std::string_view tag) {
  if (tag == "chain") return Geometry::chain;
  if (tag == "square") return Geometry::square;
  if (tag == "pi_flux") return Geometry::pi_flux;
  if (tag == "random") return Geometry::random;
  if (tag == "custom") return Geometry::custom;
  throw InvalidInput("unknown geometry '" + std::string(tag) +
                     "' (expected chain, square, pi_flux, random or custom)");
}

Boundary parse_boundary(std::string_view tag) {
  if (tag == "open") return Boundary::open;
  if (tag == "periodic") return Boundary::periodic;
  throw InvalidInput("unknown boundary '" + std::string(tag) + "' (expected open or periodic)");
}

std::string to_string(Geometry g) {
  switch (g) {
    case Geometry::chain: return "chain";
    case Geometry::square: return "square";
    case Geometry::pi_flux: return "pi_flux";
    case Geometry::random: return "random";
    case Geometry::custom: return "custom";
  }
  return "?";
}

std::string to_string(Boundary b) { return b == Boundary::open ? "open" : "periodic"; }

std::optional<int> Lattice::shifted(int site, std::array<int, 2> offset) const {
  if (site < 0 || site >= n_sites()) return std::nullopt;
  int x = coords[site][0] + offset[0];
  int y = coords[site][1] + offset[1];
  if (periodic) {
    x = wrap(x, lx);
    y = wrap(y, ly);
  } else if (x < 0 || x >= lx || y < 0 || y >= ly) {
    return std::nullopt;
  }
  return x + lx * y;
}

std::array<int, 2> Lattice::displacement(int a, int b) const {
  int dx = coords[b][0] - coords[a][0];
  int dy = coords[b][1] - coords[a][1];
  if (periodic) {
    dx = wrap(dx, lx);
    dy = wrap(dy, ly);
  }
  return {dx, dy};
}

double Lattice::distance(int a, int b) const {
  int dx = std::abs(coords[b][0] - coords[a][0]);
  int dy = std::abs(coords[b][1] - coords[a][1]);
  if (periodic) {
    dx = std::min(dx, lx - dx);
    dy = std::min(dy, ly - dy);
  }
  return std::sqrt(static_cast<double>(dx * dx + dy * dy));
}

TightBindingModel build_model(const ModelSpec& spec) {
  if (spec.n_flavors < 1) throw InvalidInput("number of flavors N must be >= 1");
  if (spec.n_colors < 1 || spec.n_flavors % spec.n_colors != 0)
    throw InvalidInput("number of colors N_c must be >= 1 and divide N");
  if (spec.disorder_strength < 0.0) throw InvalidInput("disorder strength must be >= 0");

  TightBindingModel model;
  model.spec = spec;
  const bool periodic = spec.boundary == Boundary::periodic;

  switch (spec.geometry) {
    case Geometry::chain: {
      if (spec.lx < 2) throw InvalidInput("chain length L must be >= 2");
      model.lattice = make_lattice(spec.lx, 1, periodic);
      model.h = grid_hamiltonian(spec, model.lattice, [](int) { return 1.0; });
      break;
    }
    case Geometry::square:
    case Geometry::pi_flux: {
      if (spec.lx < 1 || spec.ly < 1 || spec.lx * spec.ly < 2)
        throw InvalidInput("square lattice dimensions must be positive with at least 2 sites");
      if (spec.geometry == Geometry::pi_flux && periodic && spec.lx % 2 != 0)
        throw InvalidInput("periodic pi_flux lattice needs even Lx for the flux gauge");
      model.lattice = make_lattice(spec.lx, spec.ly, periodic);
      if (spec.geometry == Geometry::pi_flux) {
        model.h = grid_hamiltonian(spec, model.lattice, [](int x) { return x % 2 == 0 ? 1.0 : -1.0; });
      } else {
        model.h = grid_hamiltonian(spec, model.lattice, [](int) { return 1.0; });
      }
      break;
    }
    case Geometry::random: {
      if (spec.lx < 2) throw InvalidInput("random model needs n_sites >= 2");
      if (spec.mass != 0.0) throw InvalidInput("mass is only defined for lattice geometries");
      model.lattice = make_lattice(spec.lx, 1, false);
      model.h = random_hamiltonian(spec, spec.lx);
      break;
    }
    case Geometry::custom: {
      if (!spec.custom_h) throw InvalidInput("custom geometry requires a matrix");
      if (spec.mass != 0.0) throw InvalidInput("mass is only defined for lattice geometries");
      check_hermitian(*spec.custom_h, "custom Hamiltonian");
      if (spec.custom_h->rows() < 2) throw InvalidInput("custom Hamiltonian needs n_sites >= 2");
      model.lattice = make_lattice(static_cast<int>(spec.custom_h->rows()), 1, false);
      model.h = *spec.custom_h;
      model.spec.lx = static_cast<int>(spec.custom_h->rows());
      model.spec.ly = 1;
      break;
    }
  }
  check_hermitian(model.h, "model Hamiltonian");
  return model;
}

CMatrix read_matrix_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open matrix file " + path.string());
  std::vector<double> values{std::istream_iterator<double>(in), std::istream_iterator<double>()};
  if (!in.eof()) throw InvalidInput("matrix file " + path.string() + " contains non-numeric data");
  if (values.size() % 2 != 0) throw InvalidInput("matrix file must contain 're im' pairs");
  const std::size_t count = values.size() / 2;
  const auto n = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(count))));
  if (n * n != count || n == 0)
    throw InvalidInput("matrix file " + path.string() + " does not hold a square matrix");
  CMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m(i, j) = cplx(values[2 * (i * n + j)], values[2 * (i * n + j) + 1]);
  return m;
}

DoubledModel double_hamiltonian(const TightBindingModel& model) {
  check_hermitian(model.h, "model Hamiltonian");
  const int n = model.n_sites();
  DoubledModel dm;
  dm.parent = model;
  dm.hd = CMatrix::Zero(2 * n, 2 * n);
  dm.spin_charge = RVector::Zero(2 * n);
  dm.number_charge = RVector::Ones(2 * n);
  for (int i = 0; i < n; ++i) {
    dm.spin_charge(doubled_index(i, kUp)) = 1.0;
    dm.spin_charge(doubled_index(i, kDown)) = -1.0;
    for (int j = 0; j < n; ++j) {
      dm.hd(doubled_index(i, kUp), doubled_index(j, kUp)) = model.h(i, j);
      dm.hd(doubled_index(i, kDown), doubled_index(j, kDown)) = -model.h(i, j);
    }
  }
  dm.n_filled = n;
  return dm;
}

SlaterOrbitals ground_orbitals(const DoubledModel& dm) {
  const int n2 = static_cast<int>(dm.hd.rows());
  const int n = n2 / 2;
  const int m = dm.n_filled;
  if (m < 0 || m > n2) throw InvalidInput("filling outside [0, 2 n_sites]");

  // hd is block diagonal in pseudo-spin; diagonalize each block separately so the
  // orbitals never mix the two layers.
  std::array<CMatrix, 2> vecs;
  std::array<RVector, 2> vals;
  for (int s = 0; s < 2; ++s) {
    CMatrix block(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) block(i, j) = dm.hd(doubled_index(i, s), doubled_index(j, s));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (std::abs(dm.hd(doubled_index(i, s), doubled_index(j, 1 - s))) > kHermitianTol)
          throw InvalidInput("doubled Hamiltonian mixes pseudo-spin sectors");
    Eigen::SelfAdjointEigenSolver<CMatrix> es(block);
    vals[s] = es.eigenvalues();
    vecs[s] = es.eigenvectors();
  }

  std::vector<Level> levels;
  levels.reserve(n2);
  for (int s = 0; s < 2; ++s)
    for (int k = 0; k < n; ++k) levels.push_back({vals[s](k), s, k});
  std::stable_sort(levels.begin(), levels.end(), [](const Level& a, const Level& b) {
    if (a.energy != b.energy) return a.energy < b.energy;
    if (a.spin != b.spin) return a.spin < b.spin;
    return a.index < b.index;
  });

  SlaterOrbitals out;
  out.energies.resize(n2);
  for (int k = 0; k < n2; ++k) out.energies(k) = levels[k].energy;
  if (m > 0 && m < n2) {
    out.gap = levels[m].energy - levels[m - 1].energy;
    if (out.gap <= kMinGap) {
      std::ostringstream msg;
      msg << "degenerate doubled ground state: eigenvalues " << levels[m - 1].energy << " and "
          << levels[m].energy << " straddle the filling M=" << m
          << " (use twisted boundaries or a mass term)";
      throw DegenerateGroundState(msg.str(), {levels[m - 1].energy, levels[m].energy});
    }
  }

  out.p = CMatrix::Zero(n2, m);
  for (int k = 0; k < m; ++k) {
    CVector v = vecs[levels[k].spin].col(levels[k].index);
    fix_phase(v);
    for (int i = 0; i < n; ++i) out.p(doubled_index(i, levels[k].spin), k) = v(i);
  }
  return out;
}

int natural_filling(const TightBindingModel& model) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(model.h, Eigen::EigenvaluesOnly);
  const RVector& e = es.eigenvalues();
  int count = 0;
  for (Eigen::Index k = 0; k < e.size(); ++k) {
    if (std::abs(e(k)) <= kMinGap / 2) {
      throw DegenerateGroundState("single-layer spectrum has a zero mode at the doubled Fermi level",
                                  {e(k)});
    }
    if (e(k) < 0) ++count;
  }
  return count;
}

CMatrix single_layer_orbitals(const TightBindingModel& model, int filling) {
  const int n = model.n_sites();
  if (filling < 0 || filling > n) throw InvalidInput("filling outside [0, n_sites]");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(model.h);
  const RVector& e = es.eigenvalues();
  if (filling > 0 && filling < n && e(filling) - e(filling - 1) <= kMinGap) {
    throw DegenerateGroundState("single-layer ground state is degenerate at the requested filling",
                                {e(filling - 1), e(filling)});
  }
  CMatrix u = es.eigenvectors().leftCols(filling);
  for (int k = 0; k < filling; ++k) {
    CVector v = u.col(k);
    fix_phase(v);
    u.col(k) = v;
  }
  return u;
}

std::vector<CMatrix> su_generators(int n) {
  if (n < 2) throw InvalidInput("su_generators needs n >= 2");
  std::vector<CMatrix> out;
  out.reserve(static_cast<std::size_t>(n * n - 1));
  for (int j = 0; j < n; ++j) {
    for (int k = j + 1; k < n; ++k) {
      CMatrix sym = CMatrix::Zero(n, n);
      sym(j, k) = 0.5;
      sym(k, j) = 0.5;
      out.push_back(sym);
      CMatrix anti = CMatrix::Zero(n, n);
      anti(j, k) = cplx(0.0, -0.5);
      anti(k, j) = cplx(0.0, 0.5);
      out.push_back(anti);
    }
  }
  for (int l = 1; l < n; ++l) {
    CMatrix d = CMatrix::Zero(n, n);
    const double norm = std::sqrt(1.0 / (2.0 * l * (l + 1)));
    for (int j = 0; j < l; ++j) d(j, j) = norm;
    d(l, l) = -l * norm;
    out.push_back(d);
  }
  return out;
}

CMatrix flavor_matrix(std::string_view name, int n_flavor_species) {
  const int nf = n_flavor_species;
  if (name == "identity") return CMatrix::Identity(nf, nf);
  if (name.rfind("su2-", 0) == 0) {
    if (nf != 2) throw InvalidInput("flavor matrix '" + std::string(name) + "' needs N_f = 2");
    const auto gens = su_generators(2);
    if (name == "su2-x") return gens[0];
    if (name == "su2-y") return gens[1];
    if (name == "su2-z") return gens[2];
    throw InvalidInput("unknown flavor matrix '" + std::string(name) + "'");
  }
  if (name.rfind("suN-", 0) == 0) {
    int index = 0;
    const auto digits = name.substr(4);
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), index);
    if (ec != std::errc() || ptr != digits.data() + digits.size())
      throw InvalidInput("bad generator index in '" + std::string(name) + "'");
    const auto gens = su_generators(nf);
    if (index < 1 || index > static_cast<int>(gens.size()))
      throw InvalidInput("generator index out of range in '" + std::string(name) + "'");
    return gens[index - 1];
  }
  if (!name.empty() && name.front() == '[') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(name);
    } catch (const nlohmann::json::exception& e) {
      throw InvalidInput("cannot parse inline flavor matrix: " + std::string(e.what()));
    }
    if (!j.is_array() || static_cast<int>(j.size()) != nf)
      throw InvalidInput("inline flavor matrix must have N_f rows");
    CMatrix m(nf, nf);
    for (int r = 0; r < nf; ++r) {
      if (!j[r].is_array() || static_cast<int>(j[r].size()) != nf)
        throw InvalidInput("inline flavor matrix must be N_f x N_f");
      for (int c = 0; c < nf; ++c) {
        const auto& e = j[r][c];
        if (e.is_number()) {
          m(r, c) = e.get<double>();
        } else if (e.is_array() && e.size() == 2) {
          m(r, c) = cplx(e[0].get<double>(), e[1].get<double>());
        } else {
          throw InvalidInput("inline flavor matrix entries must be numbers or [re, im]");
        }
      }
    }
    if (hermiticity_defect(m) > 1e-12) throw InvalidInput("inline flavor matrix is not Hermitian");
    return m;
  }
  throw InvalidInput("unknown flavor matrix '" + std::string(name) + "'");
}

PseudoSpin pseudo_spin_from_mu(int mu) {
  switch (mu) {
    case 0: return PseudoSpin::s0;
    case 1: return PseudoSpin::s1;
    case 2: return PseudoSpin::s2;
    case 3: return PseudoSpin::s3;
    default: throw InvalidInput("pseudo-spin index mu must be in {0,1,2,3}");
  }
}

Matrix2c pseudo_spin_matrix(PseudoSpin s) {
  Matrix2c m = Matrix2c::Zero();
  switch (s) {
    case PseudoSpin::s0: m << 1, 0, 0, 1; break;
    case PseudoSpin::s1: m << 0, 1, 1, 0; break;
    case PseudoSpin::s2: m << 0, -kI, kI, 0; break;
    case PseudoSpin::s3: m << 1, 0, 0, -1; break;
    case PseudoSpin::raise: m << 0, 1, 0, 0; break;
    case PseudoSpin::lower: m << 0, 0, 1, 0; break;
  }
  return m;
}

std::string to_string(PseudoSpin s) {
  switch (s) {
    case PseudoSpin::s0: return "0";
    case PseudoSpin::s1: return "1";
    case PseudoSpin::s2: return "2";
    case PseudoSpin::s3: return "3";
    case PseudoSpin::raise: return "+";
    case PseudoSpin::lower: return "-";
  }
  return "?";
}

std::string BilinearSpec::label() const {
  std::ostringstream out;
  out << (antisymmetric ? "J" : "O") << "(x=" << site;
  if (!onsite()) out << ",d=" << offset[0] << ":" << offset[1];
  out << ",mu=" << to_string(spin) << ")";
  return out.str();
}

BilinearSpec onsite_bilinear(int site, PseudoSpin spin, CMatrix omega) {
  return BilinearSpec{site, {0, 0}, spin, std::move(omega), false};
}

BilinearSpec bond_bilinear(int site, std::array<int, 2> offset, PseudoSpin spin, CMatrix omega) {
  return BilinearSpec{site, offset, spin, std::move(omega), false};
}

BilinearSpec current_operator(int site, std::array<int, 2> offset, CMatrix omega) {
  return BilinearSpec{site, offset, PseudoSpin::s0, std::move(omega), true};
}

BilinearSpec adjoint(const BilinearSpec& op, const Lattice& lattice) {
  BilinearSpec out = op;
  out.omega = op.omega.adjoint();
  if (op.spin == PseudoSpin::raise) out.spin = PseudoSpin::lower;
  if (op.spin == PseudoSpin::lower) out.spin = PseudoSpin::raise;
  if (!op.antisymmetric && !op.onsite()) {
    const auto target = lattice.shifted(op.site, op.offset);
    if (!target) throw InvalidInput("operator " + op.label() + " leaves the lattice");
    out.site = *target;
    out.offset = {-op.offset[0], -op.offset[1]};
  }
  return out;
}

std::vector<BilinearTerm> resolve_terms(const BilinearSpec& op, const Lattice& lattice) {
  if (op.site < 0 || op.site >= lattice.n_sites())
    throw InvalidInput("operator site " + std::to_string(op.site) + " out of range");
  const auto target = lattice.shifted(op.site, op.offset);
  if (!target) throw InvalidInput("operator " + op.label() + " leaves the lattice");
  const Matrix2c s = pseudo_spin_matrix(op.spin);
  if (op.antisymmetric) {
    return {BilinearTerm{kI, op.site, *target, s}, BilinearTerm{-kI, *target, op.site, s}};
  }
  return {BilinearTerm{cplx(1.0), op.site, *target, s}};
}

void validate_bilinear(const BilinearSpec& op, const TightBindingModel& model) {
  const int nf = model.n_flavor_species();
  if (op.omega.rows() != nf || op.omega.cols() != nf)
    throw InvalidInput("flavor matrix of " + op.label() + " must be " + std::to_string(nf) + "x" +
                       std::to_string(nf));
  if (hermiticity_defect(op.omega) > kHermitianTol)
    throw InvalidInput("flavor matrix of " + op.label() + " is not Hermitian");
  (void)resolve_terms(op, model.lattice);
}

}  // namespace dephaselab
