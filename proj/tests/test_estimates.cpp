#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "modnls/estimates.hpp"
#include "modnls/propagator.hpp"

#include <cmath>
#include <random>

using namespace modnls;

TEST_CASE("sdec table") {
  CHECK(sdec(6, 1) == 0);
  CHECK(sdec(8, 1) == 1.0 / 16);
  CHECK(sdec(4, 3) == 1.0 / 8);
  CHECK(sdec(4, 2) == 0);
  CHECK(sdec(2, 1) == 0);
  CHECK(sdec(10, 1) == doctest::Approx(0.1).epsilon(1e-15));
  // continuous at the joint p = 2(d+2)/d
  for (int d = 1; d <= 4; ++d) {
    const Real joint = 2.0 * (d + 2) / d;
    CHECK(std::abs(sdec(joint * (1 + 1e-9), d)) <= 1e-8);
  }
  CHECK_THROWS_AS(sdec(1.5, 1), DomainError);
  CHECK_THROWS_AS(sdec(4, 0), DomainError);
}

TEST_CASE("exponent fit") {
  const std::vector<Real> s{1, 2, 4, 8, 16};
  std::vector<Real> r;
  for (Real x : s) r.push_back(3 * std::sqrt(x));
  auto fit = fit_exponent(s, r);
  CHECK(std::abs(fit.slope - 0.5) <= 1e-12);
  CHECK(std::abs(fit.intercept - std::log(3.0)) <= 1e-12);
  CHECK(fit.residual <= 1e-12);

  const std::vector<Real> flat(5, 2.5);
  CHECK(std::abs(fit_exponent(s, flat).slope) <= 1e-15);

  CHECK_THROWS_AS(fit_exponent(std::vector<Real>{1, 2}, std::vector<Real>{1, 2}), DomainError);
  CHECK_THROWS_AS(fit_exponent(std::vector<Real>{1, 2, 4}, std::vector<Real>{1, 0, 2}), DomainError);
  CHECK_THROWS_AS(fit_exponent(std::vector<Real>{2, 2, 2}, std::vector<Real>{1, 1, 2}), DomainError);

  judge(fit, 0.4, 0.15);
  CHECK(fit.pass);
  judge(fit, 0.2, 0.15);
  CHECK(!fit.pass);
  judge(fit, 0.7, 0.15, true);
  CHECK(!fit.pass);
  judge(fit, 0.6, 0.15, true);
  CHECK(fit.pass);
}

TEST_CASE("time nodes") {
  CHECK(auto_time_nodes(0, 1) == 17);
  CHECK(auto_time_nodes(100, 1) == 129);
  CHECK(auto_time_nodes(128, 1) == 129);
  CHECK(auto_time_nodes(100, 0.5) == 65);
}

TEST_CASE("smoothing sweeps, d = 1") {
  ExperimentConfig c;
  c.dim = 1;
  c.n = 1024;
  c.length = 16 * kPi;
  c.scales = {2, 4, 8, 16};

  SUBCASE("p = 4 is below the threshold") {
    c.p = 4;
    c.family = DataFamily::focusing;
    auto fit = smoothing_ratio(c);
    CHECK(fit.predicted == 0);
    CHECK(fit.slope <= 0.15);
    CHECK(fit.pass);
    c.family = DataFamily::random_phase;
    CHECK(smoothing_ratio(c).pass);
  }

  SUBCASE("p = 8 focusing data saturates") {
    c.p = 8;
    c.two_sided = true;
    auto fit = smoothing_ratio(c);
    MESSAGE("p=8 slope " << fit.slope);
    CHECK(fit.predicted == 0.125);
    CHECK(fit.pass);
    CHECK(fit.scales.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) CHECK(fit.ratios[i] == doctest::Approx(fit.lhs[i] / fit.rhs[i]));
  }

  SUBCASE("errors") {
    c.family = DataFamily::zero;
    CHECK_THROWS_AS(smoothing_ratio(c), DomainError);
    c.family = DataFamily::focusing;
    c.scales = {2, 4};
    CHECK_THROWS_AS(smoothing_ratio(c), DomainError);
    c.scales = {2, 3, 4};
    CHECK_THROWS_AS(smoothing_ratio(c), DomainError);
    c.scales = {4, 8, 64};  // beyond a quarter of the band
    CHECK_THROWS_AS(smoothing_ratio(c), DomainError);
  }

  SUBCASE("reproducible, independent of the thread count") {
    c.p = 6;
    c.family = DataFamily::random_phase;
    set_thread_count(1);
    auto a = smoothing_ratio(c);
    set_thread_count(3);
    auto b = smoothing_ratio(c);
    set_thread_count(1);
    CHECK(a.ratios == b.ratios);
    CHECK(a.slope == b.slope);
  }
}

TEST_CASE("L4 Strichartz in d = 3") {
  const Grid g(3, 32, 8 * kPi);
  const Window w(g);

  SUBCASE("single-cube data") {
    const Field f = focusing_data(g, 1);
    auto m = smoothing_point(f, 4, 0, 1, 0, w);
    CHECK(m.lhs > 0);
    CHECK(std::isfinite(m.ratio()));
    CHECK(m.nodes >= 17);
  }

  SUBCASE("Galilean transform leaves the ratio unchanged") {
    // a lattice shift by whole cubes permutes the pieces and translates |u|
    SpectralField F(g);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (g.frequency(i).norm() <= 0.75) F.coefficients()[static_cast<Eigen::Index>(i)] = {1.0, 0.3 * g.frequency(i)[0]};
    const Field f = from_spectrum(F);
    const auto base = smoothing_point(f, 4, 0, 1, 65, w);
    for (int shift : {1, 2}) {
      Lattice k0 = Lattice::Zero(3);
      k0[0] = shift * w.cells_per_unit();
      k0[2] = -shift * w.cells_per_unit();
      const auto moved = smoothing_point(galilean_shift(f, k0), 4, 0, 1, 65, w);
      CHECK(std::abs(moved.ratio() / base.ratio() - 1) <= 1e-8);
    }
  }

  SUBCASE("focusing sweep") {
    ExperimentConfig c;
    c.dim = 3;
    c.n = 32;
    c.length = 4 * kPi;  // window needs dxi <= 1/4: rejected
    c.scales = {1, 2, 4};
    CHECK_THROWS_AS(strichartz_l4_ratio(c), DomainError);
    c.n = 64;
    c.length = 8 * kPi;
    CHECK_THROWS_AS(strichartz_l4_ratio(c), DomainError);  // 4 > nyquist / 4
    // the full d = 3 sweep (n = 128) runs in the acceptance suite
    c.dim = 2;
    CHECK_THROWS_AS(strichartz_l4_ratio(c), DomainError);
  }
}

TEST_CASE("bilinear pairs") {
  const Grid g(3, 32, 8 * kPi);
  const Window w(g);

  SUBCASE("Galilean invariance of the pair") {
    std::mt19937_64 rng(5);
    std::normal_distribution<Real> nd;
    SpectralField U(g), V(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const Point xi = g.frequency(i);
      Point c1 = Point::Zero(3);
      c1[0] = 1;
      if ((xi - c1).norm() <= 0.6) U.coefficients()[static_cast<Eigen::Index>(i)] = {nd(rng), nd(rng)};
      if (xi.norm() <= 0.4) V.coefficients()[static_cast<Eigen::Index>(i)] = {nd(rng), nd(rng)};
    }
    const auto base = product_pair(U, V, 1, 129, w);
    Lattice k0 = Lattice::Zero(3);
    k0[1] = w.cells_per_unit();
    const auto moved = product_pair(galilean_shift(U, k0), galilean_shift(V, k0), 1, 129, w);
    CHECK(std::abs(moved.lhs / base.lhs - 1) <= 1e-8);
    CHECK(std::abs(moved.rhs / base.rhs - 1) <= 1e-12);
    CHECK(std::abs(moved.ratio() / base.ratio() - 1) <= 1e-8);
  }

  SUBCASE("errors") {
    const Field f = random_phase_data(g, 2, 1);
    CHECK_THROWS_AS(bilinear_pair(f, 2, Field(g), 1, 1, 33, w), DomainError);
    CHECK_THROWS_AS(bilinear_pair(f, 2, f, 2, 1, 33, w), DomainError);
    CHECK_THROWS_AS(bilinear_pair(f, 3, f, 1, 1, 33, w), DomainError);
    ExperimentConfig c;
    c.dim = 3;
    c.n = 32;
    c.length = 8 * kPi;
    c.scales = {2, 4, 8};
    c.low_scales = {1, 2, 4};
    c.fixed_high = 4;  // N2 = 4 is not <= N1/2
    CHECK_THROWS_AS(bilinear_ratio(c), DomainError);
  }

  SUBCASE("proof chain, d = 2") {
    const Grid g2(2, 64, 8 * kPi);
    const Window w2(g2);
    const Field f1 = random_phase_data(g2, 4, 3);
    const Field f2 = random_phase_data(g2, 1, 4);
    const auto chain = bilinear_chain(f1, 4, f2, 1, 1, 0, w2);
    REQUIRE(chain.lines.size() == 5);
    CHECK(chain.balls > 0);
    CHECK(chain.overlap >= 1);
    for (const auto& l : chain.lines) {
      MESSAGE(l.label << " = " << l.value);
      CHECK(l.value > 0);
    }
    // Holder, line by line
    CHECK(chain.lines[1].value <= chain.lines[2].value * (1 + 1e-12));
    // almost orthogonality, up to the recorded overlap
    CHECK(chain.lines[0].value <= chain.overlap * chain.overlap * chain.lines[1].value);
  }
}

TEST_CASE("V^2 transfer") {
  const Grid g(3, 32, 8 * kPi);
  const Window w(g);
  const ValueNorm m42 = ValueNorm::modulation({0, 4, 2}, w);
  const Field f1 = random_phase_data(g, 2, 11);
  const Field f2 = random_phase_data(g, 1, 12);

  SUBCASE("free trajectories reduce to the linear pair") {
    const StepFunction u{{0, 1}, {f1}, m42};
    const StepFunction v{{0, 1}, {f2}, m42};
    const auto lin = bilinear_pair(f1, 2, f2, 1, 1, 65, w);
    const auto v2 = v2_bilinear_pair(u, 2, v, 1, 1, 64, w);
    CHECK(v2.lhs == doctest::Approx(lin.lhs).epsilon(1e-12));
    CHECK(v2.rhs == doctest::Approx(lin.rhs).epsilon(1e-12));
  }

  SUBCASE("superposition obeys the triangle inequality") {
    const Field f3 = random_phase_data(g, 2, 13);
    // common breakpoints, so all three share one quadrature
    const StepFunction a1{{0, 0.25, 0.5, 1}, {f1, f1, f3}, m42};
    const StepFunction a2{{0, 0.25, 0.5, 1}, {f3, f1, f1}, m42};
    StepFunction sum{{0, 0.25, 0.5, 1}, {f1 + f3, f1 + f1, f3 + f1}, m42};
    const StepFunction v{{0, 0.6, 1}, {f2, random_phase_data(g, 1, 14)}, m42};
    const Real l1 = v2_bilinear_pair(a1, 2, v, 1, 1, 64, w).lhs;
    const Real l2 = v2_bilinear_pair(a2, 2, v, 1, 1, 64, w).lhs;
    const auto both = v2_bilinear_pair(sum, 2, v, 1, 1, 64, w);
    CHECK(both.lhs <= (l1 + l2) * (1 + 1e-12));
    CHECK(both.ratio() > 0);
  }

  SUBCASE("rejects paths that do not cover [0, T] or vanish") {
    const StepFunction u{{0.2, 1}, {f1}, m42};
    const StepFunction v{{0, 1}, {f2}, m42};
    CHECK_THROWS_AS(v2_bilinear_pair(u, 2, v, 1, 1, 64, w), DomainError);
    const StepFunction z{{0, 1}, {Field(g)}, m42};
    CHECK_THROWS_AS(v2_bilinear_pair(z, 2, v, 1, 1, 64, w), DomainError);
  }
}

TEST_CASE("decoupling") {
  SUBCASE("single cap profile gives D = 1") {
    // caps for R = 16 have side 1/4; keep the profile inside [-1, -3/4)
    auto one_cap = [](const Point& xi) { return Complex(xi[0] < -0.76 ? 1.0 : 0.0); };
    const auto m = decoupling_point(one_cap, 1, 16, 6, 0.5, 12);
    CHECK(m.ratio() == doctest::Approx(1).epsilon(1e-13));
  }

  SUBCASE("constant profile, d = 1, p = 6") {
    ExperimentConfig c;
    c.dim = 1;
    c.p = 6;
    c.margin = 0.2;
    c.scales = {16, 32, 64};
    auto fit = decoupling_ratio(c);
    CHECK(fit.predicted == 0);
    CHECK(fit.pass);
  }

  SUBCASE("d = 2 runs on small radii") {
    const auto m = decoupling_point([](const Point&) { return Complex(1); }, 2, 4, 4, 0.5, 3);
    CHECK(m.ratio() > 0);
  }

  SUBCASE("errors") {
    ExperimentConfig c;
    c.scales = {2, 4, 8};
    CHECK_THROWS_AS(decoupling_ratio(c), DomainError);  // R = 2: three caps
    c.scales = {16, 64, 256};
    c.family = DataFamily::zero;
    CHECK_THROWS_AS(decoupling_ratio(c), DomainError);
    CHECK_THROWS_AS(decoupling_point([](const Point&) { return Complex(1); }, 3, 16, 6, 0.5, 4), DomainError);
  }
}
