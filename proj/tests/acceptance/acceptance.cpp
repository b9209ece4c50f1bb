// Acceptance run: one PASS/FAIL line per criterion 1-11.
//   acceptance [k ...]   run only the listed criteria
#include "modnls/datagen.hpp"
#include "modnls/estimates.hpp"
#include "modnls/modspace.hpp"
#include "modnls/propagator.hpp"
#include "modnls/solver.hpp"
#include "modnls/variation.hpp"
#include "support.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>

using namespace modnls;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Real loglog_slope(const std::vector<Real>& x, const std::vector<Real>& y) {
  std::vector<Real> r(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) r[i] = y[i];
  return fit_exponent(x, r).slope;
}

Field gaussian(const Grid& g, Real amp) {
  return sample(g, [&](const Point& x) -> Complex { return amp * std::exp(-0.5 * x.squaredNorm()); });
}

// 1. M_{2,2} = L^2 on 100 random fields per d
Verdict plancherel() {
  std::mt19937_64 rng(1);
  Real worst = 0;
  int fields = 0;
  const Grid grids[] = {Grid(1, 256, 8 * kPi), Grid(2, 64, 8 * kPi), Grid(3, 16, 8 * kPi)};
  for (const Grid& g : grids) {
    const Window w(g);
    for (int i = 0; i < 100; ++i, ++fields) {
      const Field f = testing::random_field(g, rng);
      worst = std::max(worst, std::abs(modulation_norm(f, {0, 2, 2}, w) / lp_norm(f, 2) - 1));
    }
  }
  return {fields == 300 && worst <= 1e-10, fmt("%d fields, max rel error %.2e (<= 1e-10)", fields, worst)};
}

// 2. exact s_dec values
Verdict sdec_table() {
  const bool ok = sdec(6, 1) == 0 && sdec(8, 1) == 1.0 / 16 && sdec(4, 3) == 1.0 / 8 && sdec(4, 2) == 0;
  return {ok, fmt("sdec(6,1)=%g sdec(8,1)=%g sdec(4,3)=%g sdec(4,2)=%g", sdec(6, 1), sdec(8, 1), sdec(4, 3), sdec(4, 2))};
}

// 3. smoothing exponent, d = 1, p = 8, focusing data
Verdict smoothing() {
  ExperimentConfig c;
  c.dim = 1;
  c.n = 4096;
  c.length = 32 * kPi;
  c.scales = {4, 8, 16, 32};
  c.p = 8;
  c.family = DataFamily::focusing;
  c.two_sided = true;
  const FitResult f = smoothing_ratio(c);
  const Real target = 2.0 / 16;
  const bool ok = std::abs(f.slope - target) <= 0.15;
  return {ok, fmt("slope %.4f in [%.4f, %.4f], n=4096 L=32pi", f.slope, target - 0.15, target + 0.15)};
}

// 4. bilinear refinement, d = 3
Verdict bilinear() {
  ExperimentConfig c;
  c.dim = 3;
  c.n = 128;
  c.length = 8 * kPi;
  c.scales = {2, 4, 8};
  c.fixed_low = 1;
  c.low_scales = {1, 2, 4};
  c.fixed_high = 8;
  c.family = DataFamily::random_phase;
  c.seed = 3;
  const BilinearResult r = bilinear_ratio(c);
  const bool ok = r.low.slope <= 0.5 + 0.15 && r.high.slope <= 0.15;
  return {ok, fmt("N2-slope %.4f (<= 0.65), N1-slope %.4f (<= 0.15), n=128 L=8pi", r.low.slope, r.high.slope)};
}

// 5. decoupling, d = 1, p = 6
Verdict decoupling() {
  ExperimentConfig c;
  c.dim = 1;
  c.scales = {16, 64, 256};
  c.p = 6;
  c.family = DataFamily::focusing;
  const FitResult f = decoupling_ratio(c);
  return {f.slope <= 0.2, fmt("slope %.4f (<= 0.2), R = 16, 64, 256", f.slope)};
}

// 6. V^p dynamic program against exhaustive enumeration
Verdict vp_oracle() {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> len(2, 12);
  std::uniform_int_distribution<int> pick(0, 4);
  const Real ps[] = {1, 1.5, 2, 3, 4};
  const Grid g(1, 8, 2.0);
  int paths = 0, mismatches = 0;
  for (; paths < 500; ++paths) {
    SampledPath v;
    v.norm = ValueNorm::lebesgue(paths % 2 ? 2 : 3);
    const int m = len(rng);
    for (int j = 0; j < m; ++j) {
      v.times.push_back(j);
      v.values.push_back(testing::random_field(g, rng));
    }
    const Real p = ps[pick(rng)];
    const Endpoint e = paths % 3 ? Endpoint::vanishing : Endpoint::free;
    if (vp_norm(v, p, e) != testing::brute_force_vp(v, p, e)) ++mismatches;
  }
  return {mismatches == 0, fmt("%d paths (m <= 12), %d inexact", paths, mismatches)};
}

// 7. |B(atom, v)| <= 1.0001 ||v||_{V^{p'}}
Verdict duality() {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> pieces(1, 6);
  std::uniform_real_distribution<Real> gap(0.1, 1.0);
  const Grid g(1, 16, 8 * kPi);
  int pairs = 0;
  Real worst = 0;
  for (Real p : {2.0, 4.0}) {
    for (int trial = 0; trial < 100; ++trial, ++pairs) {
      const int K = pieces(rng);
      std::vector<Real> part{0};
      std::vector<Field> phi;
      for (int k = 0; k < K; ++k) {
        part.push_back(part.back() + gap(rng));
        phi.push_back(testing::random_field(g, rng));
      }
      const StepFunction u = make_atom(part, phi, p);
      // every other trial tests the extremal aligned dual
      SampledPath v;
      if (trial % 2) {
        v = aligned_dual(u, p);
      } else {
        v.norm = u.norm.dual();
        for (std::size_t k = 0; k < part.size(); ++k) {
          v.times.push_back(part[k]);
          if (k + 1 < part.size()) v.times.push_back(0.5 * (part[k] + part[k + 1]));
        }
        for (std::size_t j = 0; j < v.times.size(); ++j) v.values.push_back(testing::random_field(g, rng));
      }
      worst = std::max(worst, std::abs(duality_pairing(u, v)) / vp_norm(v, conjugate_exponent(p)));
    }
  }
  return {pairs == 200 && worst <= 1.0001, fmt("%d pairs, max |B|/|v|_{V^p'} = %.6f (<= 1.0001)", pairs, worst)};
}

// 8. small-data contraction and cross-validation, d = 1 quintic
Verdict contraction() {
  const Grid g(1, 256, 16 * kPi);
  const Real T = 0.1;
  const NLSProblem pb = make_problem(gaussian(g, 0.5), 1, T, 257);
  const CrossValidation cv = cross_validate(pb, T / 1024);
  Real qmax = 0;
  for (Real q : cv.picard.factors) qmax = std::max(qmax, q);
  const bool ok = cv.picard.converged && !cv.picard.factors.empty() && qmax < 0.5 && cv.distance <= 1e-5;
  return {ok, fmt("%d iterates, max factor %.2e (< 1/2), Picard vs split-step %.2e (<= 1e-5)", cv.picard.iterates, qmax,
                  cv.distance)};
}

// 9. large-data certificate, d = 3, n = 16
Verdict certificate() {
  const Grid g(3, 16, 8 * kPi);
  const NLSProblem pb = make_problem(mollified_indicator(g, 4), 1, 1, 17);
  try {
    const Solution sol = large_data_protocol(pb);
    const Certificate& c = *sol.report.certificate;
    bool ok = c.holds && c.totals.size() == static_cast<std::size_t>(sol.report.iterates + 1);
    for (std::size_t j = 0; j < c.totals.size(); ++j) ok = ok && c.totals[j] <= 2 * c.A && c.tails[j] <= 2 * c.delta;
    return {ok, fmt("A=%.4f delta=%.4f N=%d T=%.3e, %zu iterates checked", c.A, c.delta, c.N, c.T, c.totals.size())};
  } catch (const SolverError& e) {
    return {false, e.what()};
  }
}

// 10. mollified indicators: bounded M^{1.1}_{4,2}, H^1 ~ n^{d/4}
Verdict infinite_energy() {
  const Grid g(1, 2048, 64 * kPi);
  const Window w(g);
  std::vector<Real> radii, mod, h1;
  for (Real n : {2.0, 4.0, 8.0, 16.0}) {
    const auto r = indicator_report(mollified_indicator(g, n), n, 0.1, w);
    radii.push_back(n);
    mod.push_back(r.modulation);
    h1.push_back(r.h1);
  }
  const Real spread = *std::max_element(mod.begin(), mod.end()) / *std::min_element(mod.begin(), mod.end());
  const Real slope = loglog_slope(radii, h1);
  return {spread <= 2 && std::abs(slope - 0.25) <= 0.1,
          fmt("M^{1.1}_{4,2} max/min %.3f (<= 2), H^1 slope %.4f (0.25 +- 0.1)", spread, slope)};
}

// 11. split-step mass, time reversal and Galilean covariance
Verdict conservation() {
  Real mass_drift = 0, reversal = 0, galilean = 0;
  struct Case {
    Grid g;
    Real amp, T;
  };
  const Case cases[] = {{Grid(1, 256, 16 * kPi), 1.0, 0.5}, {Grid(2, 64, 8 * kPi), 0.8, 0.5}, {Grid(3, 32, 8 * kPi), 0.5, 0.25}};
  for (const Case& c : cases) {
    for (int sign : {1, -1}) {
      const Field u0 = gaussian(c.g, c.amp);
      const auto fwd = splitstep_solve(make_problem(u0, sign, c.T, 17), c.T / 256);
      mass_drift = std::max(mass_drift, fwd.mass_drift);
      Field back(c.g);
      back.values() = fwd.path.values.back().values().conjugate();
      const auto rev = splitstep_solve(make_problem(back, sign, c.T, 17), c.T / 256);
      Field end(c.g);
      end.values() = rev.path.values.back().values().conjugate();
      reversal = std::max(reversal, lp_norm(end - u0, 2) / lp_norm(u0, 2));
    }
  }
  // xi0 = 2 e_1, 2 xi0 dt = one cell: each step moves |u| by a lattice translation
  for (const Grid& g : {Grid(1, 512, 16 * kPi), Grid(2, 256, 16 * kPi)}) {
    const Field u0 = gaussian(g, 0.6);
    const Real dt = g.spacing() / 4, T = 64 * dt;
    Lattice k0 = Lattice::Zero(g.dim());
    k0[0] = static_cast<int>(std::lround(2 / g.freq_spacing()));
    const auto base = splitstep_solve(make_problem(u0, 1, T, 17), dt);
    const auto moved = splitstep_solve(make_problem(galilean_shift(u0, k0), 1, T, 17), dt);
    for (std::size_t j = 0; j < base.path.times.size(); ++j) {
      const Real t = base.path.times[j];
      Lattice cells = Lattice::Zero(g.dim());
      cells[0] = static_cast<int>(std::lround(4 * t / g.spacing()));
      Field expect = galilean_shift(lattice_translate(base.path.values[j], cells), k0);
      expect.values() *= std::polar(1.0, -4 * t);
      galilean = std::max(galilean, lp_norm(moved.path.values[j] - expect, 2) / lp_norm(u0, 2));
    }
  }
  const bool ok = mass_drift <= 1e-10 && reversal <= 1e-10 && galilean <= 1e-10;
  return {ok, fmt("mass drift %.2e, time reversal %.2e, Galilean %.2e (all <= 1e-10), d = 1, 2, 3", mass_drift, reversal,
                  galilean)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
      {"Plancherel M_{2,2} = L^2", plancherel},
      {"s_dec table", sdec_table},
      {"smoothing exponent d=1 p=8", smoothing},
      {"bilinear refinement d=3", bilinear},
      {"decoupling d=1 p=6", decoupling},
      {"V^p DP vs brute force", vp_oracle},
      {"U^p/V^p' duality", duality},
      {"small-data contraction d=1 quintic", contraction},
      {"large-data certificate d=3", certificate},
      {"infinite-energy family", infinite_energy},
      {"split-step conservation", conservation},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[k].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("CRITERION %2d %s: %s -- %s [%.1f s]\n", id, v.pass ? "PASS" : "FAIL", criteria[k].first, v.detail.c_str(),
                secs);
    std::fflush(stdout);
    failed += !v.pass;
  }
  return failed == 0 ? 0 : 1;
}
