// Copyright 2026 The dephaselab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dephaselab/linalg.hpp"

namespace dephaselab {

enum class Geometry { chain, square, pi_flux, random, custom };
enum class Boundary { open, periodic };

Geometry parse_geometry(std::string_view tag);
Boundary parse_boundary(std::string_view tag);
std::string to_string(Geometry g);
std::string to_string(Boundary b);

/// Everything needed to rebuild a single-layer model deterministically.
struct ModelSpec {
  Geometry geometry = Geometry::chain;
  int lx = 2;
  int ly = 1;
  Boundary boundary = Boundary::open;
  double hopping = 1.0;
  double twist = 0.0;  // phase on x-wrapping bonds (periodic only)
  double mass = 0.0;   // staggered onsite mass on bipartite lattices
  std::uint64_t disorder_seed = 0;
  double disorder_strength = 0.0;
  int n_flavors = 2;
  int n_colors = 1;
  std::optional<CMatrix> custom_h;
};

/// Site coordinates and boundary data used for offsets and distances.
struct Lattice {
  int lx = 1;
  int ly = 1;
  bool periodic = false;
  std::vector<std::array<int, 2>> coords;

  int n_sites() const { return static_cast<int>(coords.size()); }
  /// Site reached from `site` by `offset`, or nullopt when it leaves an open lattice.
  std::optional<int> shifted(int site, std::array<int, 2> offset) const;
  /// Euclidean distance, minimal image when periodic.
  double distance(int a, int b) const;
  /// Displacement b - a, wrapped into [0, L) on periodic lattices.
  std::array<int, 2> displacement(int a, int b) const;
};

struct TightBindingModel {
  ModelSpec spec;
  Lattice lattice;
  CMatrix h;

  int n_sites() const { return static_cast<int>(h.rows()); }
  int n_flavors() const { return spec.n_flavors; }
  int n_colors() const { return spec.n_colors; }
  /// Flavors that the flavor matrix Omega acts on (N / N_c).
  int n_flavor_species() const { return spec.n_flavors / spec.n_colors; }
};

TightBindingModel build_model(const ModelSpec& spec);

/// Reads a square complex matrix from whitespace-separated "re im" pairs, row-major.
CMatrix read_matrix_file(const std::filesystem::path& path);

// Doubled index layout: mode = 2 * site + spin, spin 0 = up (left layer), 1 = down
// (particle-hole transformed right layer). Flavor is kept outside the matrices.
inline constexpr int kUp = 0;
inline constexpr int kDown = 1;
inline int doubled_index(int site, int spin) { return 2 * site + spin; }

struct DoubledModel {
  TightBindingModel parent;
  CMatrix hd;         // h (x) sigma^3
  int n_filled = 0;   // occupied doubled orbitals per flavor
  RVector spin_charge;    // diagonal of Q_s
  RVector number_charge;  // diagonal of Q_w
};

DoubledModel double_hamiltonian(const TightBindingModel& model);

struct SlaterOrbitals {
  CMatrix p;         // (2 n_sites) x M, orthonormal columns
  RVector energies;  // full doubled spectrum, ascending
  double gap = 0.0;
};

inline constexpr double kMinGap = 1e-8;

/// Lowest M orbitals of hd; throws DegenerateGroundState when the gap is <= kMinGap.
SlaterOrbitals ground_orbitals(const DoubledModel& dm);

/// Number of negative eigenvalues of h: the left-layer filling selected by the doubled
/// half-filled ground state.
int natural_filling(const TightBindingModel& model);

/// Lowest `filling` eigenvectors of h as columns, phase-fixed.
CMatrix single_layer_orbitals(const TightBindingModel& model, int filling);

/// Generalized Gell-Mann basis, tr(T^a T^b) = delta_ab / 2. Order: for each j<k the
/// symmetric then antisymmetric generator, followed by the diagonal ones.
std::vector<CMatrix> su_generators(int n);

/// Named flavor matrix: "identity", "su2-x|y|z", "suN-<I>" (1-based), or an inline
/// JSON matrix of [re, im] pairs or reals.
CMatrix flavor_matrix(std::string_view name, int n_flavor_species);

enum class PseudoSpin { s0, s1, s2, s3, raise, lower };

PseudoSpin pseudo_spin_from_mu(int mu);
Matrix2c pseudo_spin_matrix(PseudoSpin s);
std::string to_string(PseudoSpin s);

/// c^dag_x (sigma (x) Omega) c_{x+offset}; with `antisymmetric`, the current-like
/// combination i c^dag_x S c_{x+d} - i c^dag_{x+d} S c_x.
struct BilinearSpec {
  int site = 0;
  std::array<int, 2> offset{0, 0};
  PseudoSpin spin = PseudoSpin::s0;
  CMatrix omega;
  bool antisymmetric = false;

  bool onsite() const { return offset[0] == 0 && offset[1] == 0; }
  cplx omega_trace() const { return omega.trace(); }
  std::string label() const;
};

BilinearSpec onsite_bilinear(int site, PseudoSpin spin, CMatrix omega);
BilinearSpec bond_bilinear(int site, std::array<int, 2> offset, PseudoSpin spin, CMatrix omega);
BilinearSpec current_operator(int site, std::array<int, 2> offset, CMatrix omega);

/// Hermitian conjugate operator (swaps ends, daggers the spin and flavor matrices).
BilinearSpec adjoint(const BilinearSpec& op, const Lattice& lattice);

/// One term coef * c^dag_from (spin (x) omega) c_to.
struct BilinearTerm {
  cplx coef;
  int from;
  int to;
  Matrix2c spin;
};

/// Expands a spec into its terms on the given lattice; throws on out-of-range sites.
std::vector<BilinearTerm> resolve_terms(const BilinearSpec& op, const Lattice& lattice);

/// Validates dimensions and Hermiticity of omega.
void validate_bilinear(const BilinearSpec& op, const TightBindingModel& model);

}  // namespace dephaselab
