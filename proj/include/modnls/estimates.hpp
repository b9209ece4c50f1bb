// Scale sweeps of the linear smoothing, L^4 Strichartz, bilinear and
// decoupling inequalities, each reduced to a log-log exponent fit.
#pragma once

#include "modnls/datagen.hpp"
#include "modnls/grid.hpp"
#include "modnls/modspace.hpp"
#include "modnls/variation.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace modnls {

// 0 for 2 <= p <= 2(d+2)/d, d/4 - (d+2)/(2p) above.
Real sdec(Real p, int d);

struct FitResult {
  std::vector<Real> scales, lhs, rhs, ratios;
  Real slope = 0, intercept = 0;
  Real residual = 0;  // rms of the log residuals
  Real predicted = 0, margin = 0.15;
  bool two_sided = false;
  bool pass = false;
};
// least squares on (log scale, log ratio); >= 3 points, positive ratios
FitResult fit_exponent(std::span<const Real> scales, std::span<const Real> ratios);
FitResult fit_ratios(std::span<const Real> scales, std::span<const Real> lhs, std::span<const Real> rhs);
// pass iff slope <= predicted + margin (and >= predicted - margin when two-sided)
void judge(FitResult& fit, Real predicted, Real margin, bool two_sided = false);

struct ExperimentConfig {
  int dim = 1;
  int n = 256;
  Real length = 16 * kPi;
  std::vector<int> scales;      // N (smoothing), N1 (bilinear), R (decoupling)
  std::vector<int> low_scales;  // N2 / K sweep
  int fixed_high = 8;           // N1 held during the low sweep
  int fixed_low = 1;            // N2 held during the high sweep
  DataFamily family = DataFamily::focusing;
  std::uint64_t seed = 1;
  Real p = 4, s = 0, q = 2;
  Real horizon = 1;
  int time_nodes = 0;  // 0: chosen from the temporal bandwidth
  Real margin = 0.15;
  bool two_sided = false;
  Real spacing = 0.5;        // decoupling sample spacing
  Real mesh_density = 12;    // decoupling mesh cells per axis per unit R
};

// Worker threads for sweep cells (default: MODNLS_THREADS or 1).
void set_thread_count(int k);
int thread_count();

// Nodes on [0, T] resolving a temporal bandwidth omega: 1 + 2^ceil(log2(omega T)), at least 17.
int auto_time_nodes(Real omega, Real T);

struct PairMeasure {
  Real lhs = 0, rhs = 0;
  int nodes = 0;
  Real ratio() const { return lhs / rhs; }
};

// ||e^{itLap} u0||_{L^p([0,T] x torus)} against ||u0||_{M^s_{p,2}}
PairMeasure smoothing_point(const Field& u0, Real p, Real s, Real T, int nodes, const Window& w);
FitResult smoothing_ratio(const ExperimentConfig& cfg);
// p = 4 and d in {3, 4}
FitResult strichartz_l4_ratio(const ExperimentConfig& cfg);

// Raw product pair, no projections: ||e^{itLap}U e^{itLap}V||_{L^2([0,T] x torus)}
// against ||U||_{M_{4,2}} ||V||_{M_{4,2}}.
PairMeasure product_pair(const SpectralField& U, const SpectralField& V, Real T, int nodes, const Window& w);
// ||e^{itLap}P_{N1}f1 e^{itLap}P_{N2}f2||_{L^2([0,T] x torus)} against
// ||P_{N1}f1||_{M_{4,2}} ||P_{N2}f2||_{M_{4,2}}; needs N2 <= N1/2.
PairMeasure bilinear_pair(const Field& f1, int N1, const Field& f2, int N2, Real T, int nodes, const Window& w);
struct BilinearResult {
  FitResult high;  // N1 sweep at N2 = fixed_low, predicted 0
  FitResult low;   // N2 sweep at N1 = fixed_high, predicted 4 sdec(4,d) = (d-2)/2
};
BilinearResult bilinear_ratio(const ExperimentConfig& cfg);

// The almost-orthogonality chain with Q the balls of radius N2 covering the
// N1 annulus. Lines (squared): |uv|, sum |Q u v|, sum |Q u|_4 |v|_4,
// sum |Q u0|_M |v0|_M, |u0|_M |v0|_M. Line 2 <= line 3 is Holder.
struct ChainLine {
  std::string label;
  Real value = 0;
};
struct BilinearChain {
  std::vector<ChainLine> lines;
  int balls = 0;
  int overlap = 0;
};
BilinearChain bilinear_chain(const Field& f1, int N1, const Field& f2, int N2, Real T, int nodes, const Window& w);

// Adapted step functions u(t) = e^{itLap} phi_k on [t_k, t_{k+1}) covering
// [0, T]. lhs = ||P_N u P_K v||_{L^2([0,T])}, rhs = product of the V^2_Delta
// M_{4,2} norms (vanishing endpoint). `nodes` per unit time.
PairMeasure v2_bilinear_pair(const StepFunction& u, int N, const StepFunction& v, int K, Real T, int nodes,
                             const Window& w);
FitResult v2_bilinear_ratio(const ExperimentConfig& cfg);

// D(R) = ||Ef||_{L^p(B_R)} / (sum_caps ||Ef_cap||^2_{L^p(B_R)})^{1/2}
using Profile = std::function<Complex(const Point&)>;
PairMeasure decoupling_point(const Profile& f, int d, Real R, Real p, Real spacing, Real mesh_density);
FitResult decoupling_ratio(const ExperimentConfig& cfg);

}  // namespace modnls
