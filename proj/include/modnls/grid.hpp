// Periodic sampling of R^d: grid geometry, fields, unitary transforms and
// Lebesgue quadrature.
//
// Conventions (fixed once, used everywhere):
//   x_m   = (m - n/2) h,          m = 0..n-1 per axis, h = L/n
//   xi_k  = k dxi,                k in [-n/2, n/2), dxi = 2 pi / L
//   F(xi) = (2 pi)^{-d/2} h^d sum_x f(x) e^{-i x.xi}
// so that h^d sum |f|^2 = dxi^d sum |F|^2 exactly. Spectra are stored in FFT
// order along each axis (storage slot j holds k = j for j < n/2, j - n else);
// storage is row-major with the last axis fastest.
#pragma once

#include <Eigen/Core>

#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

namespace modnls {

using Real = double;
using Complex = std::complex<Real>;
using CArray = Eigen::ArrayXcd;
using RArray = Eigen::ArrayXd;

inline constexpr int kMaxDim = 4;
using Point = Eigen::Matrix<Real, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Lattice = Eigen::Matrix<int, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;

inline constexpr Real kPi = 3.14159265358979323846;

// Precondition violations (bad sizes, out-of-range parameters, grid mismatch).
struct DomainError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

namespace detail {
struct GridTables;
}

class Grid {
 public:
  Grid(int d, int n, Real L);

  int dim() const noexcept { return d_; }
  int n() const noexcept { return n_; }
  Real length() const noexcept { return L_; }
  Real spacing() const noexcept { return L_ / n_; }
  Real freq_spacing() const noexcept { return 2 * kPi / L_; }
  Real nyquist() const noexcept { return kPi * n_ / L_; }
  // largest |xi| on the representable lattice (the corner -xi_max per axis)
  Real max_frequency() const noexcept;
  std::size_t size() const noexcept { return size_; }
  Real cell_volume() const noexcept;       // h^d
  Real freq_cell_volume() const noexcept;  // dxi^d
  Real volume() const noexcept;            // L^d

  int log2n() const noexcept { return log2n_; }
  // FFT storage slot <-> signed frequency index
  int signed_index(int j) const noexcept { return j < n_ / 2 ? j : j - n_; }
  int storage_slot(int k) const noexcept { return k >= 0 ? k : k + n_; }
  bool representable(int k) const noexcept { return k >= -n_ / 2 && k < n_ / 2; }
  Real coordinate(int m) const noexcept { return (m - n_ / 2) * spacing(); }

  std::size_t ravel(const Lattice& slots) const;
  Lattice unravel(std::size_t i) const;
  // flat storage index of a signed frequency multi-index (must be representable)
  std::size_t spectral_index(const Lattice& k) const;
  Lattice frequency_index(std::size_t i) const;  // signed multi-index of slot i
  Point frequency(std::size_t i) const;          // xi of spectral slot i
  Point position(std::size_t i) const;           // x of sample i

  // |xi|^2 per spectral slot, computed once per grid geometry and shared
  const RArray& frequency_sq() const;

  friend bool operator==(const Grid& a, const Grid& b) noexcept {
    return a.d_ == b.d_ && a.n_ == b.n_ && a.L_ == b.L_;
  }

 private:
  int d_, n_, log2n_;
  Real L_;
  std::size_t size_;
  std::shared_ptr<detail::GridTables> tables_;
};

Grid make_grid(int d, int n, Real L);

class Field {
 public:
  explicit Field(Grid grid);
  Field(Grid grid, CArray values);

  const Grid& grid() const noexcept { return grid_; }
  const CArray& values() const noexcept { return values_; }
  CArray& values() noexcept { return values_; }

 private:
  Grid grid_;
  CArray values_;
};

class SpectralField {
 public:
  explicit SpectralField(Grid grid);
  SpectralField(Grid grid, CArray coefficients);

  const Grid& grid() const noexcept { return grid_; }
  const CArray& coefficients() const noexcept { return coeffs_; }
  CArray& coefficients() noexcept { return coeffs_; }

 private:
  Grid grid_;
  CArray coeffs_;
};

void require_same_grid(const Grid& a, const Grid& b);

SpectralField to_spectrum(const Field& f);
Field from_spectrum(const SpectralField& F);

// f(x) sampled from a callable on positions; F(xi) likewise on frequencies.
Field sample(const Grid& g, const std::function<Complex(const Point&)>& fn);
SpectralField sample_spectrum(const Grid& g, const std::function<Complex(const Point&)>& fn);

// Multiplier m(xi) applied in the spectral representation.
Field apply_multiplier(const Field& f, const RArray& m);
Field apply_multiplier(const Field& f, const CArray& m);

Field operator+(const Field& a, const Field& b);
Field operator-(const Field& a, const Field& b);
Field operator*(Complex c, const Field& a);

// h^d sum |f|^p  (p < inf); the max modulus for p = inf.
Real lp_power(const Grid& g, const CArray& values, Real p);
Real lp_norm(const Grid& g, const CArray& values, Real p);
Real lp_norm(const Field& f, Real p);
// <f, g> = int f conj(g) dx
Complex inner(const Field& f, const Field& g);

// Space-time L^p over a time sequence: trapezoid in t of the p-th power.
// Streaming so long runs need not keep every slice.
class SpacetimeNorm {
 public:
  explicit SpacetimeNorm(Real p);
  void add(Real t, const Field& slice);
  void add_power(Real t, Real slice_power);  // slice_power = lp_power (or max for inf)
  Real value() const;
  std::size_t count() const noexcept { return count_; }

 private:
  Real p_;
  Real acc_ = 0, last_t_ = 0, last_pow_ = 0;
  std::size_t count_ = 0;
};

Real spacetime_lp_norm(std::span<const Real> times, std::span<const Field> slices, Real p);

// Translate by an integer number of grid cells per axis (cyclic).
Field lattice_translate(const Field& f, const Lattice& cells);

// max |f| on the outer boundary layer of the torus relative to max |f|
// (zero field -> 0).
Real boundary_ratio(const Field& f);
inline constexpr Real kBoundaryDecay = 1e-10;

}  // namespace modnls
