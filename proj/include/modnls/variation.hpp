// p-variation and atomic calculus for field-valued paths: V^p by dynamic
// programming, U^p atoms, the pairing B(u,v), adapted (free-flow-twisted)
// paths and the iteration norms Y^s / X^s.
#pragma once

#include "modnls/grid.hpp"
#include "modnls/modspace.hpp"

#include <Eigen/Core>

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace modnls {

// Norm on path values: L^r or M^s_{r,q} with a fixed window.
class ValueNorm {
 public:
  static ValueNorm lebesgue(Real r);
  static ValueNorm modulation(const ModNormSpec& spec, const Window& w);

  Real operator()(const Field& f) const;
  Real operator()(const SpectralField& F) const;
  // L^r -> L^{r'}, M^s_{r,q} -> M^{-s}_{r',q'}; the pairing int f conj(g)
  // is bounded by 1 * norm * dual norm (square partition, Holder twice).
  ValueNorm dual() const;
  bool spectral() const noexcept { return window_ != nullptr; }
  const ModNormSpec& spec() const noexcept { return spec_; }
  std::string describe() const;

 private:
  ValueNorm() = default;
  ModNormSpec spec_;
  std::shared_ptr<const Window> window_;
};

Real conjugate_exponent(Real p);

// Conventional terminal value after the last node: free leaves the path as
// is, vanishing appends v = 0 (the v(inf) := 0 normalization).
enum class Endpoint { free, vanishing };

struct SampledPath {
  std::vector<Real> times;
  std::vector<Field> values;
  ValueNorm norm = ValueNorm::lebesgue(2);
};
void validate(const SampledPath& v);

// Left-closed right-open pieces: phi_k on [t_k, t_{k+1}), zero elsewhere.
struct StepFunction {
  std::vector<Real> partition;  // t_0 < ... < t_K
  std::vector<Field> pieces;    // phi_0 .. phi_{K-1}
  ValueNorm norm = ValueNorm::lebesgue(2);
};
void validate(const StepFunction& u);

struct Variation {
  Real value = 0;
  std::vector<int> nodes;  // maximizing subsequence; index m = virtual terminal node
};

// sup over increasing index chains of (sum dist(i_{k-1}, i_k)^p)^{1/p};
// only the strict upper triangle of `dist` is read. O(m^2).
Variation p_variation(const Eigen::MatrixXd& dist, Real p);
// pairwise ||v_i - v_j|| (plus a last row/column for the zero terminal)
Eigen::MatrixXd increment_distances(const SampledPath& v, Endpoint end);
Variation vp_variation(const SampledPath& v, Real p, Endpoint end = Endpoint::vanishing);
Real vp_norm(const SampledPath& v, Real p, Endpoint end = Endpoint::vanishing);

StepFunction make_atom(std::vector<Real> partition, std::vector<Field> pieces, Real p,
                       ValueNorm norm = ValueNorm::lebesgue(2));
StepFunction scaled(const StepFunction& u, Complex lambda);
// b must start at or after the end of a; a gap becomes a zero piece
StepFunction concatenate(const StepFunction& a, const StepFunction& b);
// Values at the partition nodes: phi_0..phi_{K-1} at t_0..t_{K-1} and 0 at t_K.
SampledPath as_path(const StepFunction& u);

Real up_norm_upper(const StepFunction& u, Real p);
// max over the dual family of |B(u,v)| / ||v||_{V^{p'}}, v valued in the dual norm
Real up_norm_lower(const StepFunction& u, Real p, std::span<const SampledPath> duals);
// Path with increments v(t_{k+1}) - v(t_k) aligned with phi_k (Holder
// equality in L^r); the natural extremal dual for u. Lebesgue values only.
SampledPath aligned_dual(const StepFunction& u, Real p);

// B(u,v) = -sum_{k=0}^{K} <phi_k - phi_{k-1}, v(t_k)>, phi_{-1} = phi_K = 0
Complex duality_pairing(const StepFunction& u, const SampledPath& v);

enum class Direction { forward, backward };
// forward: v(t_j) -> e^{-i t_j Lap} v(t_j) (undo the free flow); backward inverts.
SampledPath adapt(const SampledPath& v, Direction dir);
SampledPath free_trajectory(const Field& f, std::span<const Real> times, ValueNorm norm = ValueNorm::lebesgue(2));
// u(t) sampled at `times`; with adapted = true the pieces ride the free flow,
// u(t) = e^{itLap} phi_k (a U^p_Delta atom).
SampledPath sample_step(const StepFunction& u, std::span<const Real> times, bool adapted);

// Band norms ||P_N u||_{V^2_Delta M_{4,2}} (vanishing endpoint) for every
// dyadic band of the grid.
struct BandNorm {
  int N = 1;
  Real value = 0;
};
std::vector<BandNorm> ys_bands(const SampledPath& u, const Window& w);
Real ys_norm(const SampledPath& u, Real s, const Window& w);
Real weighted_band_sum(std::span<const BandNorm> bands, Real s);
// U^2_Delta proxy per band: min(own-partition atom bound, V^1 jump sum).
std::vector<BandNorm> xs_bands_upper(const SampledPath& u, const Window& w);
Real xs_norm_upper(const SampledPath& u, Real s, const Window& w);

}  // namespace modnls
