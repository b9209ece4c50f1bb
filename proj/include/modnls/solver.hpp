// Picard (contraction-mapping) solutions of i u_t + Lap u = sign |u|^kappa u
// on a time grid, a Strang split-step oracle, and the frequency-cutoff
// protocol for large data.
#pragma once

#include "modnls/grid.hpp"
#include "modnls/modspace.hpp"
#include "modnls/variation.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace modnls {

// sign = +1 defocusing, -1 focusing, 0 linear
struct NLSProblem {
  Field u0;
  Real kappa = 4;
  int sign = 1;
  Real horizon = 1;
  int nodes = 17;
};

// 4 (d = 1, quintic), 2 (d = 2, cubic), 4/(d-2) (d = 3, 4).
Real default_power(int d);
NLSProblem make_problem(Field u0, int sign, Real horizon, int nodes);
void validate(const NLSProblem& pb);

// sign |f|^kappa f
Field nonlinearity(const Field& f, Real kappa, int sign);

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct BlowUp : SolverError {
  using SolverError::SolverError;
};
struct CertificateViolation : SolverError {
  using SolverError::SolverError;
};

// strichartz: sup_t L^2 + L^{kappa+2}_{t,x}; modulation: sup_t M^s_{4,2};
// ys: the V^2_Delta band proxy for X^s.
enum class IterationNorm { strichartz, modulation, ys };
IterationNorm parse_iteration_norm(const std::string& name);
std::string iteration_norm_name(IterationNorm n);

enum class InitialIterate { free, zero };

struct PicardOptions {
  int max_iters = 30;
  Real tol = 1e-12;  // stop when |u_{j+1} - u_j| <= tol |free evolution|
  IterationNorm norm = IterationNorm::strichartz;
  Real s = 0;  // regularity for the modulation / ys norms
  InitialIterate start = InitialIterate::free;
};

struct Certificate {
  Real A = 0, delta = 0;
  int N = 1;
  Real T = 0;
  Real s = 0, c0 = 0.1, c1 = 0.1;
  // per iterate, in sup_t M^s_{4,2}
  std::vector<Real> totals, tails;
  bool holds = false;
};

struct SolverReport {
  IterationNorm norm = IterationNorm::strichartz;
  int iterates = 0;
  std::vector<Real> increments;  // |u_{j+1} - u_j|
  std::vector<Real> factors;     // increments[j+1] / increments[j], where defined
  Real residual = 0;             // last increment over |free evolution|
  bool converged = false;
  bool diverged = false;
  Real mass_drift = 0;    // max_t |M(u(t)) - M(u0)| / M(u0)
  Real energy_drift = 0;  // same for the energy (sign != 0)
  std::optional<Certificate> certificate;
};

struct Solution {
  SampledPath path;
  SolverReport report;
};

// Iterates u_{j+1} = free - i * Duhamel(F(u_j)) on the problem's time grid.
// Divergence (3 consecutive factors >= 1, or a non-finite iterate) stops the
// loop and sets report.diverged.
Solution picard_solve(const NLSProblem& pb, const PicardOptions& opt = {});

// Strang splitting with the step shrunk so every node interval holds an
// integer number of steps. Throws BlowUp once |u|_inf > 1e6 |u0|_inf.
struct SplitStepResult {
  SampledPath path;
  int steps = 0;
  Real dt = 0;
  Real mass_drift = 0;
  Real energy_drift = 0;
};
SplitStepResult splitstep_solve(const NLSProblem& pb, Real dt);

struct CrossValidation {
  Real distance = 0;  // relative L^2 gap at T
  Real tol = 1e-5;
  bool pass = false;
  Real picard_coarse = 0;  // same gap with half the Picard nodes
  Real split_coarse = 0;   // same gap with twice the split-step dt
  SolverReport picard;
  SplitStepResult split;
};
CrossValidation cross_validate(const NLSProblem& pb, Real dt, const PicardOptions& opt = {}, Real tol = 1e-5);

// A = |u0|_{M^s_{4,2}}, delta = c0 A^{-(6-d)/(d-2)}, N the smallest dyadic with
// |P_{>N} u0|_{M^s_{4,2}} <= delta, T = min(1, c1 min(N^{-6/(d-2)}, N^{-2d/(d-2)}) A^{-4/(d-2)}).
// Then Picard on [0, T]; the ball |u_j| <= 2A, |P_{>N} u_j| <= 2 delta is
// checked at every iterate. d in {3, 4}.
struct LargeDataOptions {
  Real s = 1.1;
  Real c0 = 0.1, c1 = 0.1;
  PicardOptions picard{.norm = IterationNorm::ys};
};
Certificate plan_cutoff(const Field& u0, const LargeDataOptions& opt, const Window& w);
// Throws CertificateViolation naming the failing inequality.
Solution large_data_protocol(const NLSProblem& pb, const LargeDataOptions& opt = {});

}  // namespace modnls
