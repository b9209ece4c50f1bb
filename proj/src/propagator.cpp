#include "modnls/propagator.hpp"

#include <cmath>
#include <string>

namespace modnls {

TimeGrid::TimeGrid(Real t0_, Real t1_, int m_) : t0(t0_), t1(t1_), m(m_) {
  if (!(t0 < t1)) throw DomainError("time grid: need t0 < t1");
  if (m < 2) throw DomainError("time grid: need at least 2 nodes");
}

std::vector<Real> TimeGrid::nodes() const {
  std::vector<Real> out(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) out[static_cast<std::size_t>(j)] = node(j);
  return out;
}

CArray free_symbol(const Grid& g, Real t) {
  const RArray& r2 = g.frequency_sq();
  CArray out(r2.size());
  for (Eigen::Index i = 0; i < r2.size(); ++i) out[i] = std::polar(1.0, -t * r2[i]);
  return out;
}

SpectralField free_evolve(const SpectralField& F, Real t) {
  if (t == 0) return F;
  SpectralField out(F.grid());
  out.coefficients() = F.coefficients() * free_symbol(F.grid(), t);
  return out;
}

Field free_evolve(const Field& f, Real t) {
  if (t == 0) return f;
  return from_spectrum(free_evolve(to_spectrum(f), t));
}

SpectralField galilean_shift(const SpectralField& F, const Lattice& k0) {
  const Grid& g = F.grid();
  if (k0.size() != g.dim()) throw DomainError("galilean shift: dimension mismatch");
  SpectralField out(g);
  const int n = g.n();
  for (std::size_t i = 0; i < g.size(); ++i) {
    Lattice s = g.unravel(i);
    for (int a = 0; a < g.dim(); ++a) s[a] = ((s[a] + k0[a]) % n + n) % n;
    out.coefficients()[static_cast<Eigen::Index>(g.ravel(s))] = F.coefficients()[static_cast<Eigen::Index>(i)];
  }
  return out;
}

Field galilean_shift(const Field& f, const Lattice& k0) {
  const Grid& g = f.grid();
  if (k0.size() != g.dim()) throw DomainError("galilean shift: dimension mismatch");
  if (k0.isZero()) return f;
  const Point xi0 = k0.cast<Real>() * g.freq_spacing();
  Field out(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto j = static_cast<Eigen::Index>(i);
    out.values()[j] = std::polar(1.0, g.position(i).dot(xi0)) * f.values()[j];
  }
  return out;
}

Field galilean_shift(const Field& f, const Point& xi0) {
  const Grid& g = f.grid();
  if (xi0.size() != g.dim()) throw DomainError("galilean shift: dimension mismatch");
  Lattice k0(g.dim());
  for (int a = 0; a < g.dim(); ++a) {
    Real k = xi0[a] / g.freq_spacing();
    k0[a] = static_cast<int>(std::lround(k));
    if (std::abs(k - k0[a]) > 1e-9) throw DomainError("galilean shift: xi0 is not on the frequency lattice");
  }
  return galilean_shift(f, k0);
}

namespace {

void check_forcing(std::span<const Real> times, std::size_t count) {
  if (times.size() != count) throw DomainError("duhamel: times/forcing size mismatch");
  if (times.empty()) throw DomainError("duhamel: empty time grid");
  for (std::size_t j = 1; j < times.size(); ++j)
    if (!(times[j] > times[j - 1])) throw DomainError("duhamel: times must be strictly increasing");
}

}  // namespace

std::vector<SpectralField> duhamel_all(std::span<const Real> times, std::span<const SpectralField> forcing) {
  check_forcing(times, forcing.size());
  const Grid& g = forcing.front().grid();
  std::vector<SpectralField> out;
  out.reserve(times.size());
  out.emplace_back(g);
  CArray acc = CArray::Zero(static_cast<Eigen::Index>(g.size()));
  CArray prev = forcing[0].coefficients() * free_symbol(g, -times[0]);
  for (std::size_t j = 1; j < times.size(); ++j) {
    require_same_grid(forcing[j].grid(), g);
    CArray cur = forcing[j].coefficients() * free_symbol(g, -times[j]);
    acc += (0.5 * (times[j] - times[j - 1])) * (prev + cur);
    SpectralField s(g);
    s.coefficients() = acc * free_symbol(g, times[j]);
    out.push_back(std::move(s));
    prev = std::move(cur);
  }
  return out;
}

std::vector<Field> duhamel_all(std::span<const Real> times, std::span<const Field> forcing) {
  check_forcing(times, forcing.size());
  std::vector<SpectralField> spec;
  spec.reserve(forcing.size());
  for (const auto& f : forcing) spec.push_back(to_spectrum(f));
  auto res = duhamel_all(times, std::span<const SpectralField>(spec));
  std::vector<Field> out;
  out.reserve(res.size());
  for (const auto& r : res) out.push_back(from_spectrum(r));
  return out;
}

Field duhamel(std::span<const Real> times, std::span<const Field> forcing, std::size_t node) {
  check_forcing(times, forcing.size());
  if (node >= times.size()) throw DomainError("duhamel: node " + std::to_string(node) + " is not on the time grid");
  return duhamel_all(times.first(node + 1), forcing.first(node + 1)).back();
}

Real mass(const Field& f) { return lp_power(f.grid(), f.values(), 2); }

Real gradient_sq(const Field& f) {
  const Grid& g = f.grid();
  SpectralField F = to_spectrum(f);
  return g.freq_cell_volume() * (g.frequency_sq() * F.coefficients().abs2()).sum();
}

Real energy(const Field& f, Real kappa, int sign) {
  if (!(kappa > 0)) throw DomainError("energy: kappa must be positive");
  if (sign < -1 || sign > 1) throw DomainError("energy: sign must be -1, 0 or +1");
  Real potential = sign == 0 ? 0 : lp_power(f.grid(), f.values(), kappa + 2) / (kappa + 2);
  return 0.5 * gradient_sq(f) + sign * potential;
}

Real energy(const Field& f, int sign) {
  const int d = f.grid().dim();
  if (d != 3 && d != 4) throw DomainError("energy: energy-critical exponent needs d in {3,4}");
  return energy(f, 4.0 / (d - 2), sign);
}

}  // namespace modnls
