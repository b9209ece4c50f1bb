// Free Schrodinger flow and friends. Sign convention: i u_t + Lap u = 0, so
// the propagator is the multiplier exp(-i t |xi|^2).
#pragma once

#include "modnls/grid.hpp"

#include <span>
#include <vector>

namespace modnls {

struct TimeGrid {
  TimeGrid(Real t0, Real t1, int m);

  Real t0, t1;
  int m;

  Real step() const noexcept { return (t1 - t0) / (m - 1); }
  Real node(int j) const noexcept { return j == m - 1 ? t1 : t0 + j * step(); }
  std::vector<Real> nodes() const;
};

CArray free_symbol(const Grid& g, Real t);
SpectralField free_evolve(const SpectralField& F, Real t);
Field free_evolve(const Field& f, Real t);

// e^{i x.xi0} f with xi0 = k0 dxi. The spectral form is an exact cyclic
// permutation of coefficients.
Field galilean_shift(const Field& f, const Lattice& k0);
SpectralField galilean_shift(const SpectralField& F, const Lattice& k0);
// xi0 given in frequency units; must lie on the lattice.
Field galilean_shift(const Field& f, const Point& xi0);

// int_{t_0}^{t_j} e^{i(t_j - s) Lap} F(s) ds by the trapezoid rule applied in
// the interaction picture (the integrand U(-s) F(s) is smooth in s for smooth
// forcing, and each node costs one transform pair).
Field duhamel(std::span<const Real> times, std::span<const Field> forcing, std::size_t node);
std::vector<Field> duhamel_all(std::span<const Real> times, std::span<const Field> forcing);
std::vector<SpectralField> duhamel_all(std::span<const Real> times, std::span<const SpectralField> forcing);

Real mass(const Field& f);
// int |grad f|^2 dx, spectrally
Real gradient_sq(const Field& f);
// int |grad f|^2 / 2 + sign/(kappa+2) |f|^{kappa+2} dx
Real energy(const Field& f, Real kappa, int sign);
// energy-critical case kappa = 4/(d-2), d in {3,4}
Real energy(const Field& f, int sign);

// --- paraboloid extension operator, d in {1,2} ---

// Quadrature nodes in the open unit ball, each carrying weight `cell`^d.
struct FrequencyMesh {
  int dim = 1;
  Real cell = 0;
  std::vector<Point> nodes;
  Real weight() const;
};

// Midpoints of a uniform per_axis^d partition of [-1,1]^d.
FrequencyMesh unit_ball_mesh(int d, int per_axis);
// Lattice frequencies of g with |xi| < 1, weight dxi^d, in storage order.
FrequencyMesh unit_ball_mesh(const Grid& g);
std::vector<Complex> restrict_profile(const SpectralField& F, const FrequencyMesh& mesh);

Complex extension_at(const FrequencyMesh& mesh, std::span<const Complex> profile, Real t, const Point& x);

// Samples of Ef on {(t,x) in spacing * Z^{1+d} : t^2 + |x|^2 < R^2}.
struct ExtensionSamples {
  int dim = 1;
  Real spacing = 0;
  std::vector<Real> t;
  std::vector<Point> x;
  std::vector<Complex> values;
  Real cell_volume() const;  // spacing^{1+d}
};
ExtensionSamples extension_operator(const FrequencyMesh& mesh, std::span<const Complex> profile, Real R,
                                    Real spacing);
ExtensionSamples extension_operator(const SpectralField& profile, Real R, Real spacing);

// Caps: the uniform partition of [-1,1]^d into cubes of side 2/count,
// count = ceil(2 sqrt(R)) per axis (side <= R^{-1/2}). Empty caps dropped.
struct CapPartition {
  int per_axis = 0;
  int count = 0;
  std::vector<int> cap_of_node;
};
CapPartition partition_caps(const FrequencyMesh& mesh, Real R);

// Riemann-sum L^p powers over B(0,R) of Ef and of every Ef_cap, streamed
// without storing samples.
struct ExtensionPowers {
  Real total = 0;
  std::vector<Real> caps;
  std::size_t samples = 0;
};
ExtensionPowers extension_lp_powers(const FrequencyMesh& mesh, std::span<const Complex> profile,
                                    const CapPartition& caps, Real R, Real spacing, Real p);

}  // namespace modnls
