#include "modnls/datagen.hpp"

#include "modnls/propagator.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <stdexcept>

namespace modnls {

DataFamily parse_family(std::string_view name) {
  if (name == "random_phase") return DataFamily::random_phase;
  if (name == "focusing") return DataFamily::focusing;
  if (name == "bump") return DataFamily::bump;
  if (name == "zero") return DataFamily::zero;
  throw DomainError("unknown data family '" + std::string(name) + "'");
}

std::string family_name(DataFamily f) {
  switch (f) {
    case DataFamily::random_phase: return "random_phase";
    case DataFamily::focusing: return "focusing";
    case DataFamily::bump: return "bump";
    case DataFamily::zero: return "zero";
  }
  return "?";
}

namespace {

void check_scale(const Grid& g, int N) {
  if (N < 0) throw DomainError("data: scale must be nonnegative");
  if (N > g.nyquist()) throw DomainError("data: scale " + std::to_string(N) + " beyond the grid band");
}

}  // namespace

Field random_phase_data(const Grid& g, int N, std::uint64_t seed) {
  check_scale(g, N);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<Real> phase(0, 2 * kPi);
  const RArray& r2 = g.frequency_sq();
  SpectralField F(g);
  const Real N2 = Real(N) * N * (1 + 1e-12);
  for (Eigen::Index i = 0; i < r2.size(); ++i)
    if (r2[i] <= N2) F.coefficients()[i] = std::polar(1.0, phase(rng));
  return from_spectrum(F);
}

Field focusing_data(const Grid& g, int N) {
  check_scale(g, N);
  SpectralField F(g);
  const Real tol = 1e-9 * g.freq_spacing();
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g.frequency(i).lpNorm<Eigen::Infinity>() <= N + tol) F.coefficients()[static_cast<Eigen::Index>(i)] = 1;
  return from_spectrum(F);
}

Field bump_data(const Grid& g, int N) {
  check_scale(g, N);
  if (N + 0.5 > g.nyquist()) throw DomainError("data: bump does not fit in the grid band");
  Point c = Point::Zero(g.dim());
  c[0] = N;
  return from_spectrum(sample_spectrum(g, [&](const Point& xi) -> Complex {
    const Real r2 = 4 * (xi - c).squaredNorm();
    return r2 < 1 ? std::exp(-1 / (1 - r2)) : 0.0;
  }));
}

Field make_data(const Grid& g, DataFamily family, int N, std::uint64_t seed) {
  switch (family) {
    case DataFamily::random_phase: return random_phase_data(g, N, seed);
    case DataFamily::focusing: return focusing_data(g, N);
    case DataFamily::bump: return bump_data(g, N);
    case DataFamily::zero: return Field(g);
  }
  throw DomainError("unknown data family");
}

Field mollified_indicator(const Grid& g, Real radius) {
  if (!(radius > 0)) throw DomainError("mollified indicator: radius must be positive");
  // chi is a unit-width Gaussian; its mass within distance 5 covers the tail
  if (radius + 5 > g.length() / 2)
    throw DomainError("mollified indicator: ball of radius " + std::to_string(radius) + " does not fit the torus");
  const int d = g.dim();
  const Real nu = 0.5 * d;
  // hat f = (2pi)^{-d/2} e^{-|xi|^2/4} (2 pi n / |xi|)^{d/2} J_{d/2}(n |xi|)
  const Real ball = std::pow(kPi, nu) * std::pow(radius, d) / std::tgamma(nu + 1);
  const RArray& r2 = g.frequency_sq();
  SpectralField F(g);
  for (Eigen::Index i = 0; i < r2.size(); ++i) {
    const Real r = std::sqrt(r2[i]);
    const Real z = radius * r;
    const Real b = z < 1e-8 ? ball : std::pow(2 * kPi * radius / r, nu) * std::cyl_bessel_j(nu, z);
    F.coefficients()[i] = std::pow(2 * kPi, -nu) * std::exp(-r2[i] / 4) * b;
  }
  Field f = from_spectrum(F);
  f.values() /= lp_norm(f, 4);
  return f;
}

Real h1_norm(const Field& f) { return std::sqrt(mass(f) + gradient_sq(f)); }

IndicatorReport indicator_report(const Field& f, Real radius, Real eps, const Window& w) {
  IndicatorReport r;
  r.radius = radius;
  r.eps = eps;
  r.modulation = modulation_norm(f, {1 + eps, 4, 2}, w);
  r.h1 = h1_norm(f);
  r.l2 = lp_norm(f, 2);
  r.l4 = lp_norm(f, 4);
  r.boundary = boundary_ratio(f);
  return r;
}

namespace {

template <class T>
void put(std::ostream& os, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  os.write(buf, sizeof(T));
}

template <class T>
T get(std::istream& is) {
  char buf[sizeof(T)];
  if (!is.read(buf, sizeof(T))) throw std::runtime_error("field file: truncated");
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

}  // namespace

void write_field(const std::filesystem::path& path, const Field& f) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  const Grid& g = f.grid();
  put<std::int32_t>(os, g.dim());
  put<std::int32_t>(os, g.n());
  put<double>(os, g.length());
  for (const Complex& z : f.values()) {
    put<double>(os, z.real());
    put<double>(os, z.imag());
  }
  if (!os.flush()) throw std::runtime_error("write failed: " + path.string());
}

Field read_field(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  const int d = get<std::int32_t>(is);
  const int n = get<std::int32_t>(is);
  const Real L = get<double>(is);
  Grid g(d, n, L);
  CArray v(static_cast<Eigen::Index>(g.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double re = get<double>(is);
    v[i] = {re, get<double>(is)};
  }
  if (is.peek() != std::char_traits<char>::eof()) throw std::runtime_error("field file: trailing bytes");
  return Field(g, std::move(v));
}

}  // namespace modnls
