#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "modnls/datagen.hpp"
#include "modnls/propagator.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace modnls;

namespace {

Real slope(const std::vector<Real>& x, const std::vector<Real>& y) {
  Real mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]) / x.size();
    my += std::log(y[i]) / y.size();
  }
  Real sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return sxy / sxx;
}

std::size_t center_index(const Grid& g) {
  Lattice m = Lattice::Constant(g.dim(), g.n() / 2);
  return g.ravel(m);
}

}  // namespace

TEST_CASE("families by name") {
  for (auto f : {DataFamily::random_phase, DataFamily::focusing, DataFamily::bump, DataFamily::zero})
    CHECK(parse_family(family_name(f)) == f);
  CHECK_THROWS_AS(parse_family("gaussian"), DomainError);
}

TEST_CASE("random phase data") {
  const Grid g(2, 64, 8 * kPi);
  const Window w(g);
  const Field a = random_phase_data(g, 3, 42);
  const Field b = random_phase_data(g, 3, 42);
  CHECK((a.values() == b.values()).all());
  CHECK(!(random_phase_data(g, 3, 43).values() == a.values()).all());

  const SpectralField F = to_spectrum(a);
  const RArray& r2 = g.frequency_sq();
  Real outside = 0, inside_dev = 0;
  for (Eigen::Index i = 0; i < r2.size(); ++i) {
    if (r2[i] > 9 * (1 + 1e-12))
      outside = std::max(outside, std::abs(F.coefficients()[i]));
    else
      inside_dev = std::max(inside_dev, std::abs(std::abs(F.coefficients()[i]) - 1));
  }
  CHECK(outside <= 1e-13);
  CHECK(inside_dev <= 1e-12);
  CHECK(modulation_norm(a, {0, 2, 2}, w) == doctest::Approx(lp_norm(a, 2)).epsilon(1e-10));
  CHECK_THROWS_AS(random_phase_data(g, 100, 1), DomainError);
}

TEST_CASE("focusing data") {
  for (int d : {1, 2, 3}) {
    const Grid g(d, d == 3 ? 32 : 64, 8 * kPi);
    for (int N : {1, 2}) {
      const Field f = focusing_data(g, N);
      const Real count = std::pow(2 * N / g.freq_spacing() + 1, d);
      const Complex at0 = f.values()[static_cast<Eigen::Index>(center_index(g))];
      CHECK(at0.real() == doctest::Approx(std::pow(2 * kPi, -0.5 * d) * g.freq_cell_volume() * count).epsilon(1e-12));
      CHECK(std::abs(at0.imag()) <= 1e-12 * at0.real());
      CHECK(std::abs(at0) == doctest::Approx(f.values().abs().maxCoeff()).epsilon(1e-12));
    }
  }

  SUBCASE("M_{4,2} follows the cube count") {
    // every cube inside [-N,N] carries the same piece, so the norm grows like
    // sqrt(#cubes) = N^{d/2}
    const Grid g(1, 256, 8 * kPi);
    const Window w(g);
    std::vector<Real> Ns, norms, counts;
    for (int N : {2, 4, 8, 16}) {
      Ns.push_back(N);
      norms.push_back(modulation_norm(focusing_data(g, N), {0, 4, 2}, w));
      counts.push_back(std::sqrt(2.0 * N + 1));
    }
    CHECK(std::abs(slope(Ns, norms) - slope(Ns, counts)) <= 0.1);
    CHECK(std::abs(slope(Ns, norms) - 0.5) <= 0.1);
  }

  SUBCASE("N = 1 is a single-cube bump") {
    const Grid g(1, 128, 8 * kPi);
    const Field f = focusing_data(g, 1);
    const SpectralField F = to_spectrum(f);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (std::abs(g.frequency(i)[0]) > 1 + 1e-12) CHECK(std::abs(F.coefficients()[static_cast<Eigen::Index>(i)]) <= 1e-14);
    // sharp spectral edges: Dirichlet-kernel tails reach the torus edge and get flagged
    CHECK(boundary_ratio(f) > kBoundaryDecay);
  }
}

TEST_CASE("bump data") {
  const Grid g(2, 64, 8 * kPi);
  const Field f = bump_data(g, 4);
  const SpectralField F = to_spectrum(f);
  for (std::size_t i = 0; i < g.size(); ++i) {
    Point xi = g.frequency(i);
    xi[0] -= 4;
    if (xi.norm() >= 0.5) CHECK(std::abs(F.coefficients()[static_cast<Eigen::Index>(i)]) <= 1e-14);
  }
  CHECK(std::abs(f.values()[static_cast<Eigen::Index>(center_index(g))]) ==
        doctest::Approx(f.values().abs().maxCoeff()).epsilon(1e-12));
  CHECK(make_data(g, DataFamily::zero, 4, 0).values().isZero(0));
  CHECK_THROWS_AS(bump_data(g, 8), DomainError);
}

TEST_CASE("mollified indicator") {
  const Grid g(1, 2048, 64 * kPi);
  const Window w(g);
  std::vector<Real> radii, h1, mod;
  for (Real n : {2.0, 4.0, 8.0, 16.0}) {
    const Field f = mollified_indicator(g, n);
    const auto rep = indicator_report(f, n, 0.1, w);
    CHECK(rep.l4 == doctest::Approx(1).epsilon(1e-12));
    CHECK(rep.boundary <= kBoundaryDecay);
    radii.push_back(n);
    h1.push_back(rep.h1);
    mod.push_back(rep.modulation);
  }
  CHECK(*std::max_element(mod.begin(), mod.end()) <= 2 * *std::min_element(mod.begin(), mod.end()));
  CHECK(std::abs(slope(radii, h1) - 0.25) <= 0.1);  // d/4

  SUBCASE("shape") {
    // inside the ball, away from the edge, the profile is flat
    const Field f = mollified_indicator(g, 16);
    const Real at0 = std::abs(f.values()[static_cast<Eigen::Index>(center_index(g))]);
    Lattice m(1);
    m[0] = g.n() / 2 + static_cast<int>(std::lround(10 / g.spacing()));
    CHECK(std::abs(f.values()[static_cast<Eigen::Index>(g.ravel(m))]) == doctest::Approx(at0).epsilon(1e-9));
    m[0] = g.n() / 2 + static_cast<int>(std::lround(16 / g.spacing()));
    CHECK(std::abs(std::abs(f.values()[static_cast<Eigen::Index>(g.ravel(m))]) - at0 / 2) <= 0.02 * at0);
  }

  SUBCASE("ball in higher dimension") {
    const Grid g3(3, 32, 8 * kPi);
    const Field f = mollified_indicator(g3, 4);
    CHECK(lp_norm(f, 4) == doctest::Approx(1).epsilon(1e-12));
    CHECK(std::abs(f.values()[static_cast<Eigen::Index>(center_index(g3))].imag()) <= 1e-12);
  }

  CHECK_THROWS_AS(mollified_indicator(g, 100), DomainError);
  CHECK_THROWS_AS(mollified_indicator(g, 0), DomainError);
}

TEST_CASE("h1 norm") {
  const Grid g(1, 256, 16 * kPi);
  // plane wave e^{i xi0 x}: ||f||_2^2 (1 + xi0^2)
  Lattice k(1);
  k[0] = 8;
  Field one(g);
  one.values().setConstant(1);
  const Field f = galilean_shift(one, k);
  const Real xi0 = 8 * g.freq_spacing();
  CHECK(h1_norm(f) == doctest::Approx(std::sqrt(g.volume() * (1 + xi0 * xi0))).epsilon(1e-12));
}

TEST_CASE("binary round trip") {
  const Grid g(2, 16, 3.5);
  const Field f = random_phase_data(g, 2, 9);
  const auto path = std::filesystem::temp_directory_path() / "modnls_field_roundtrip.bin";
  write_field(path, f);
  CHECK(std::filesystem::file_size(path) == 16 + 16 * g.size());
  const Field r = read_field(path);
  CHECK(r.grid() == g);
  CHECK((r.values() == f.values()).all());

  {
    std::ofstream os(path, std::ios::binary | std::ios::app);
    os.put('x');
  }
  CHECK_THROWS(read_field(path));
  std::filesystem::resize_file(path, 20);
  CHECK_THROWS(read_field(path));
  std::filesystem::remove(path);
}
