#include "modnls/grid.hpp"

#include "fft.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <mutex>
#include <string>

namespace modnls {

namespace detail {
struct GridTables {
  std::once_flag once;
  RArray freq_sq;
};
}  // namespace detail

Grid::Grid(int d, int n, Real L) : d_(d), n_(n), L_(L) {
  if (d < 1 || d > kMaxDim) throw DomainError("grid: dimension must be in 1..4, got " + std::to_string(d));
  if (n < 8 || !std::has_single_bit(static_cast<unsigned>(n)))
    throw DomainError("grid: n must be a power of two >= 8, got " + std::to_string(n));
  if (!(L > 0) || !std::isfinite(L)) throw DomainError("grid: period length must be positive");
  log2n_ = std::countr_zero(static_cast<unsigned>(n));
  if (log2n_ * d > 40) throw DomainError("grid: n^d too large");
  size_ = std::size_t{1} << (log2n_ * d);
  tables_ = std::make_shared<detail::GridTables>();
}

Grid make_grid(int d, int n, Real L) { return Grid(d, n, L); }

Real Grid::max_frequency() const noexcept { return std::sqrt(Real(d_)) * nyquist(); }
Real Grid::cell_volume() const noexcept { return std::pow(spacing(), d_); }
Real Grid::freq_cell_volume() const noexcept { return std::pow(freq_spacing(), d_); }
Real Grid::volume() const noexcept { return std::pow(L_, d_); }

std::size_t Grid::ravel(const Lattice& slots) const {
  std::size_t i = 0;
  for (int a = 0; a < d_; ++a) i = (i << log2n_) | static_cast<std::size_t>(slots[a]);
  return i;
}

Lattice Grid::unravel(std::size_t i) const {
  Lattice s(d_);
  const std::size_t mask = static_cast<std::size_t>(n_ - 1);
  for (int a = d_ - 1; a >= 0; --a) {
    s[a] = static_cast<int>(i & mask);
    i >>= log2n_;
  }
  return s;
}

std::size_t Grid::spectral_index(const Lattice& k) const {
  std::size_t i = 0;
  for (int a = 0; a < d_; ++a) {
    if (!representable(k[a])) throw DomainError("frequency index outside the representable lattice");
    i = (i << log2n_) | static_cast<std::size_t>(storage_slot(k[a]));
  }
  return i;
}

Lattice Grid::frequency_index(std::size_t i) const {
  Lattice s = unravel(i);
  for (int a = 0; a < d_; ++a) s[a] = signed_index(s[a]);
  return s;
}

Point Grid::frequency(std::size_t i) const { return frequency_index(i).cast<Real>() * freq_spacing(); }

Point Grid::position(std::size_t i) const {
  Lattice s = unravel(i);
  Point x(d_);
  for (int a = 0; a < d_; ++a) x[a] = coordinate(s[a]);
  return x;
}

const RArray& Grid::frequency_sq() const {
  std::call_once(tables_->once, [this] {
    RArray axis(n_);
    for (int j = 0; j < n_; ++j) {
      Real xi = signed_index(j) * freq_spacing();
      axis[j] = xi * xi;
    }
    RArray out = RArray::Zero(static_cast<Eigen::Index>(size_));
    const std::size_t mask = static_cast<std::size_t>(n_ - 1);
    for (std::size_t i = 0; i < size_; ++i) {
      std::size_t r = i;
      Real acc = 0;
      for (int a = 0; a < d_; ++a) {
        acc += axis[static_cast<Eigen::Index>(r & mask)];
        r >>= log2n_;
      }
      out[static_cast<Eigen::Index>(i)] = acc;
    }
    tables_->freq_sq = std::move(out);
  });
  return tables_->freq_sq;
}

namespace {

void check_values(const Grid& g, const CArray& v, const char* what) {
  if (static_cast<std::size_t>(v.size()) != g.size())
    throw DomainError(std::string(what) + ": value count does not match n^d");
  if (!v.isFinite().all()) throw DomainError(std::string(what) + ": non-finite entries");
}

// (-1)^{sum of per-axis storage slots}: parity of the low bit of each axis.
std::size_t parity_mask(const Grid& g) {
  std::size_t m = 0;
  for (int a = 0; a < g.dim(); ++a) m |= std::size_t{1} << (a * g.log2n());
  return m;
}

void apply_checkerboard(const Grid& g, CArray& v, Real scale) {
  const std::size_t mask = parity_mask(g);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const bool odd = std::popcount(static_cast<std::size_t>(i) & mask) & 1;
    v[i] *= odd ? -scale : scale;
  }
}

}  // namespace

Field::Field(Grid grid) : grid_(grid), values_(CArray::Zero(static_cast<Eigen::Index>(grid.size()))) {}
Field::Field(Grid grid, CArray values) : grid_(grid), values_(std::move(values)) {
  check_values(grid_, values_, "field");
}

SpectralField::SpectralField(Grid grid)
    : grid_(grid), coeffs_(CArray::Zero(static_cast<Eigen::Index>(grid.size()))) {}
SpectralField::SpectralField(Grid grid, CArray coefficients) : grid_(grid), coeffs_(std::move(coefficients)) {
  check_values(grid_, coeffs_, "spectral field");
}

void require_same_grid(const Grid& a, const Grid& b) {
  if (!(a == b)) throw DomainError("grid mismatch");
}

SpectralField to_spectrum(const Field& f) {
  const Grid& g = f.grid();
  CArray c = f.values();
  detail::dft(g.dim(), g.n(), c.data(), detail::FftDir::forward);
  apply_checkerboard(g, c, std::pow(2 * kPi, -0.5 * g.dim()) * g.cell_volume());
  SpectralField out(g);
  out.coefficients() = std::move(c);
  return out;
}

Field from_spectrum(const SpectralField& F) {
  const Grid& g = F.grid();
  CArray c = F.coefficients();
  apply_checkerboard(g, c, std::pow(2 * kPi, -0.5 * g.dim()) * g.freq_cell_volume());
  detail::dft(g.dim(), g.n(), c.data(), detail::FftDir::backward);
  Field out(g);
  out.values() = std::move(c);
  return out;
}

Field sample(const Grid& g, const std::function<Complex(const Point&)>& fn) {
  CArray v(static_cast<Eigen::Index>(g.size()));
  for (std::size_t i = 0; i < g.size(); ++i) v[static_cast<Eigen::Index>(i)] = fn(g.position(i));
  return Field(g, std::move(v));
}

SpectralField sample_spectrum(const Grid& g, const std::function<Complex(const Point&)>& fn) {
  CArray v(static_cast<Eigen::Index>(g.size()));
  for (std::size_t i = 0; i < g.size(); ++i) v[static_cast<Eigen::Index>(i)] = fn(g.frequency(i));
  return SpectralField(g, std::move(v));
}

Field apply_multiplier(const Field& f, const RArray& m) {
  if (static_cast<std::size_t>(m.size()) != f.grid().size()) throw DomainError("multiplier size mismatch");
  SpectralField F = to_spectrum(f);
  F.coefficients() *= m.cast<Complex>();
  return from_spectrum(F);
}

Field apply_multiplier(const Field& f, const CArray& m) {
  if (static_cast<std::size_t>(m.size()) != f.grid().size()) throw DomainError("multiplier size mismatch");
  SpectralField F = to_spectrum(f);
  F.coefficients() *= m;
  return from_spectrum(F);
}

Field operator+(const Field& a, const Field& b) {
  require_same_grid(a.grid(), b.grid());
  Field out(a.grid());
  out.values() = a.values() + b.values();
  return out;
}

Field operator-(const Field& a, const Field& b) {
  require_same_grid(a.grid(), b.grid());
  Field out(a.grid());
  out.values() = a.values() - b.values();
  return out;
}

Field operator*(Complex c, const Field& a) {
  Field out(a.grid());
  out.values() = c * a.values();
  return out;
}

Real lp_power(const Grid& g, const CArray& values, Real p) {
  if (!(p >= 1)) throw DomainError("lp norm: p must be >= 1");
  if (values.size() == 0) return 0;
  if (std::isinf(p)) return values.abs().maxCoeff();
  if (p == 2) return g.cell_volume() * values.abs2().sum();
  if (p == 4) return g.cell_volume() * values.abs2().square().sum();
  return g.cell_volume() * values.abs().pow(p).sum();
}

Real lp_norm(const Grid& g, const CArray& values, Real p) {
  Real pw = lp_power(g, values, p);
  if (std::isinf(p)) return pw;
  if (p == 2) return std::sqrt(pw);
  return std::pow(pw, 1 / p);
}

Real lp_norm(const Field& f, Real p) { return lp_norm(f.grid(), f.values(), p); }

Complex inner(const Field& f, const Field& g) {
  require_same_grid(f.grid(), g.grid());
  return f.grid().cell_volume() * (f.values() * g.values().conjugate()).sum();
}

SpacetimeNorm::SpacetimeNorm(Real p) : p_(p) {
  if (!(p >= 1)) throw DomainError("space-time norm: p must be >= 1");
}

void SpacetimeNorm::add(Real t, const Field& slice) { add_power(t, lp_power(slice.grid(), slice.values(), p_)); }

void SpacetimeNorm::add_power(Real t, Real pw) {
  if (count_ > 0 && !(t > last_t_)) throw DomainError("space-time norm: times must be strictly increasing");
  if (std::isinf(p_)) {
    acc_ = std::max(acc_, pw);
  } else if (count_ > 0) {
    acc_ += 0.5 * (t - last_t_) * (pw + last_pow_);
  }
  last_t_ = t;
  last_pow_ = pw;
  ++count_;
}

Real SpacetimeNorm::value() const { return std::isinf(p_) ? acc_ : std::pow(acc_, 1 / p_); }

Real spacetime_lp_norm(std::span<const Real> times, std::span<const Field> slices, Real p) {
  if (times.size() != slices.size()) throw DomainError("space-time norm: times/slices size mismatch");
  SpacetimeNorm acc(p);
  for (std::size_t j = 0; j < times.size(); ++j) acc.add(times[j], slices[j]);
  return acc.value();
}

Field lattice_translate(const Field& f, const Lattice& cells) {
  const Grid& g = f.grid();
  if (cells.size() != g.dim()) throw DomainError("translate: dimension mismatch");
  Field out(g);
  const int n = g.n();
  for (std::size_t i = 0; i < g.size(); ++i) {
    Lattice s = g.unravel(i);
    for (int a = 0; a < g.dim(); ++a) s[a] = ((s[a] + cells[a]) % n + n) % n;
    out.values()[static_cast<Eigen::Index>(g.ravel(s))] = f.values()[static_cast<Eigen::Index>(i)];
  }
  return out;
}

Real boundary_ratio(const Field& f) {
  const Grid& g = f.grid();
  const Real peak = f.values().abs().maxCoeff();
  if (peak == 0) return 0;
  Real edge = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    Lattice s = g.unravel(i);
    bool on_edge = false;
    for (int a = 0; a < g.dim(); ++a) on_edge = on_edge || s[a] == 0 || s[a] == g.n() - 1;
    if (on_edge) edge = std::max(edge, std::abs(f.values()[static_cast<Eigen::Index>(i)]));
  }
  return edge / peak;
}

}  // namespace modnls
