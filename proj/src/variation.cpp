#include "modnls/variation.hpp"

#include "modnls/propagator.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace modnls {

Real conjugate_exponent(Real p) {
  if (!(p >= 1)) throw DomainError("conjugate exponent: p must be >= 1");
  if (p == 1) return INFINITY;
  if (std::isinf(p)) return 1;
  return p / (p - 1);
}

ValueNorm ValueNorm::lebesgue(Real r) {
  if (!(r >= 1)) throw DomainError("value norm: exponent must be >= 1");
  ValueNorm n;
  n.spec_ = {0, r, r};
  return n;
}

ValueNorm ValueNorm::modulation(const ModNormSpec& spec, const Window& w) {
  validate(spec);
  ValueNorm n;
  n.spec_ = spec;
  n.window_ = std::make_shared<const Window>(w);
  return n;
}

Real ValueNorm::operator()(const Field& f) const {
  return window_ ? modulation_norm(f, spec_, *window_) : lp_norm(f, spec_.p);
}

Real ValueNorm::operator()(const SpectralField& F) const {
  return window_ ? modulation_norm(F, spec_, *window_) : lp_norm(from_spectrum(F), spec_.p);
}

ValueNorm ValueNorm::dual() const {
  ValueNorm n = *this;
  n.spec_.p = conjugate_exponent(spec_.p);
  n.spec_.q = conjugate_exponent(spec_.q);
  n.spec_.s = -spec_.s;
  return n;
}

std::string ValueNorm::describe() const {
  std::ostringstream os;
  if (window_)
    os << "M^" << spec_.s << "_{" << spec_.p << "," << spec_.q << "}";
  else
    os << "L^" << spec_.p;
  return os.str();
}

void validate(const SampledPath& v) {
  if (v.times.size() != v.values.size()) throw DomainError("path: times/values size mismatch");
  for (std::size_t j = 1; j < v.times.size(); ++j) {
    if (!(v.times[j] > v.times[j - 1])) throw DomainError("path: times must be strictly increasing");
    require_same_grid(v.values[j].grid(), v.values[0].grid());
  }
}

void validate(const StepFunction& u) {
  if (u.pieces.empty()) throw DomainError("step function: need at least one piece");
  if (u.partition.size() != u.pieces.size() + 1) throw DomainError("step function: partition must have K+1 points");
  for (std::size_t j = 1; j < u.partition.size(); ++j)
    if (!(u.partition[j] > u.partition[j - 1])) throw DomainError("step function: partition must be increasing");
  for (const auto& f : u.pieces) require_same_grid(f.grid(), u.pieces[0].grid());
}

Variation p_variation(const Eigen::MatrixXd& dist, Real p) {
  if (!(p >= 1) || std::isinf(p)) throw DomainError("p-variation: need finite p >= 1");
  const auto m = dist.rows();
  if (m < 2 || dist.cols() != m) throw DomainError("p-variation: need at least 2 nodes");
  std::vector<Real> best(static_cast<std::size_t>(m), 0.0);
  std::vector<int> pred(static_cast<std::size_t>(m), -1);
  for (Eigen::Index i = 1; i < m; ++i) {
    Real b = -std::numeric_limits<Real>::infinity();
    for (Eigen::Index j = 0; j < i; ++j) {
      const Real cand = best[j] + std::pow(dist(j, i), p);
      if (cand > b) {  // strict: first maximizer wins
        b = cand;
        pred[i] = static_cast<int>(j);
      }
    }
    best[i] = b;
  }
  Eigen::Index top = 0;
  for (Eigen::Index i = 1; i < m; ++i)
    if (best[i] > best[top]) top = i;
  Variation out;
  out.value = std::pow(best[top], 1 / p);
  if (best[top] > 0)
    for (int i = static_cast<int>(top); i >= 0; i = pred[i]) out.nodes.insert(out.nodes.begin(), i);
  return out;
}

Eigen::MatrixXd increment_distances(const SampledPath& v, Endpoint end) {
  validate(v);
  const auto m = static_cast<Eigen::Index>(v.values.size());
  const Eigen::Index M = m + (end == Endpoint::vanishing ? 1 : 0);
  Eigen::MatrixXd dist = Eigen::MatrixXd::Zero(M, M);
  if (m == 0) return dist;
  const Grid& g = v.values[0].grid();
  if (v.norm.spectral()) {
    std::vector<SpectralField> S;
    S.reserve(static_cast<std::size_t>(m));
    for (const auto& f : v.values) S.push_back(to_spectrum(f));
    SpectralField diff(g);
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = i + 1; j < m; ++j) {
        diff.coefficients() = S[j].coefficients() - S[i].coefficients();
        dist(i, j) = dist(j, i) = v.norm(diff);
      }
      if (M > m) dist(i, m) = dist(m, i) = v.norm(S[i]);
    }
  } else {
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = i + 1; j < m; ++j) dist(i, j) = dist(j, i) = v.norm(v.values[j] - v.values[i]);
      if (M > m) dist(i, m) = dist(m, i) = v.norm(v.values[i]);
    }
  }
  return dist;
}

Variation vp_variation(const SampledPath& v, Real p, Endpoint end) {
  if (!(p >= 1)) throw DomainError("vp norm: p must be >= 1");
  if (v.values.size() < 2) throw DomainError("vp norm: need at least 2 nodes");
  return p_variation(increment_distances(v, end), p);
}

Real vp_norm(const SampledPath& v, Real p, Endpoint end) { return vp_variation(v, p, end).value; }

StepFunction make_atom(std::vector<Real> partition, std::vector<Field> pieces, Real p, ValueNorm norm) {
  if (!(p >= 1) || std::isinf(p)) throw DomainError("atom: need finite p >= 1");
  StepFunction u{std::move(partition), std::move(pieces), std::move(norm)};
  validate(u);
  Real sum = 0;
  for (const auto& f : u.pieces) sum += std::pow(u.norm(f), p);
  if (!(sum > 0)) throw DomainError("atom: all pieces are zero");
  const Real scale = std::pow(sum, -1 / p);
  for (auto& f : u.pieces) f.values() *= scale;
  return u;
}

StepFunction scaled(const StepFunction& u, Complex lambda) {
  StepFunction out = u;
  for (auto& f : out.pieces) f.values() *= lambda;
  return out;
}

StepFunction concatenate(const StepFunction& a, const StepFunction& b) {
  validate(a);
  validate(b);
  if (b.partition.front() < a.partition.back()) throw DomainError("concatenate: pieces overlap in time");
  StepFunction out = a;
  if (b.partition.front() > a.partition.back()) {
    out.pieces.emplace_back(a.pieces[0].grid());
    out.partition.push_back(b.partition.front());
  }
  out.pieces.insert(out.pieces.end(), b.pieces.begin(), b.pieces.end());
  out.partition.insert(out.partition.end(), b.partition.begin() + 1, b.partition.end());
  return out;
}

SampledPath as_path(const StepFunction& u) {
  validate(u);
  SampledPath v;
  v.norm = u.norm;
  v.times = u.partition;
  v.values = u.pieces;
  v.values.emplace_back(u.pieces[0].grid());
  return v;
}

Real up_norm_upper(const StepFunction& u, Real p) {
  validate(u);
  if (!(p >= 1) || std::isinf(p)) throw DomainError("up norm: need finite p >= 1");
  Real sum = 0;
  for (const auto& f : u.pieces) sum += std::pow(u.norm(f), p);
  return std::pow(sum, 1 / p);
}

namespace {

std::size_t node_of(const SampledPath& v, Real t) {
  const Real tol = 1e-12 * std::max<Real>(1, std::abs(t));
  for (std::size_t j = 0; j < v.times.size(); ++j)
    if (std::abs(v.times[j] - t) <= tol) return j;
  throw DomainError("pairing: v is missing a partition node");
}

}  // namespace

Complex duality_pairing(const StepFunction& u, const SampledPath& v) {
  validate(u);
  validate(v);
  const std::size_t K = u.pieces.size();
  Complex acc{};
  for (std::size_t k = 0; k <= K; ++k) {
    const Field& at = v.values[node_of(v, u.partition[k])];
    if (k < K) acc -= inner(u.pieces[k], at);
    if (k > 0) acc += inner(u.pieces[k - 1], at);
  }
  return acc;
}

Real up_norm_lower(const StepFunction& u, Real p, std::span<const SampledPath> duals) {
  const Real pc = conjugate_exponent(p);
  Real best = 0;
  for (const auto& v : duals) {
    const Real den = vp_norm(v, pc, Endpoint::free);
    if (den > 0) best = std::max(best, std::abs(duality_pairing(u, v)) / den);
  }
  return best;
}

SampledPath aligned_dual(const StepFunction& u, Real p) {
  validate(u);
  const Real r = u.norm.spec().p;
  if (u.norm.spectral() || !(r > 1) || std::isinf(r)) throw DomainError("aligned dual: needs L^r values, 1 < r < inf");
  SampledPath v;
  v.norm = u.norm.dual();
  v.times = u.partition;
  Field acc(u.pieces[0].grid());
  v.values.push_back(acc);
  for (const auto& phi : u.pieces) {
    const Real nphi = u.norm(phi);
    if (nphi > 0) {
      // g = |phi|^{r-2} phi / ||phi||^{r-1}: unit dual norm, <phi, g> = ||phi||
      Field g(phi.grid());
      g.values() = phi.values() * phi.values().abs().pow(r - 2).cast<Complex>() / std::pow(nphi, r - 1);
      acc.values() += std::pow(nphi, p - 1) * g.values();
    }
    v.values.push_back(acc);
  }
  return v;
}

SampledPath adapt(const SampledPath& v, Direction dir) {
  validate(v);
  SampledPath out = v;
  for (std::size_t j = 0; j < v.times.size(); ++j)
    out.values[j] = free_evolve(v.values[j], dir == Direction::forward ? -v.times[j] : v.times[j]);
  return out;
}

SampledPath free_trajectory(const Field& f, std::span<const Real> times, ValueNorm norm) {
  SampledPath v;
  v.norm = std::move(norm);
  v.times.assign(times.begin(), times.end());
  SpectralField F = to_spectrum(f);
  for (Real t : times) v.values.push_back(from_spectrum(free_evolve(F, t)));
  validate(v);
  return v;
}

SampledPath sample_step(const StepFunction& u, std::span<const Real> times, bool adapted) {
  validate(u);
  SampledPath v;
  v.norm = u.norm;
  v.times.assign(times.begin(), times.end());
  const Grid& g = u.pieces[0].grid();
  for (Real t : times) {
    Field val(g);
    for (std::size_t k = 0; k < u.pieces.size(); ++k) {
      if (t >= u.partition[k] && t < u.partition[k + 1]) {
        val = adapted ? free_evolve(u.pieces[k], t) : u.pieces[k];
        break;
      }
    }
    v.values.push_back(std::move(val));
  }
  validate(v);
  return v;
}

namespace {

// Adapted, band-projected spectra of every slice, per band.
template <class Fn>
void for_each_adapted_band(const SampledPath& u, const Window& w, Fn&& fn) {
  validate(u);
  if (u.values.size() < 2) throw DomainError("iteration norm: need at least 2 time nodes");
  const Grid& g = u.values[0].grid();
  require_same_grid(g, w.grid());
  std::vector<SpectralField> adapted;
  adapted.reserve(u.values.size());
  for (std::size_t j = 0; j < u.values.size(); ++j) adapted.push_back(free_evolve(to_spectrum(u.values[j]), -u.times[j]));
  for (int N : dyadic_bands(g)) {
    std::vector<SpectralField> band;
    band.reserve(adapted.size());
    bool any = false;
    for (const auto& S : adapted) {
      band.push_back(dyadic_project(S, N));
      any = any || !band.back().coefficients().isZero(0);
    }
    fn(N, band, any);
  }
}

}  // namespace

std::vector<BandNorm> ys_bands(const SampledPath& u, const Window& w) {
  const ModNormSpec m42{0, 4, 2};
  std::vector<BandNorm> out;
  for_each_adapted_band(u, w, [&](int N, const std::vector<SpectralField>& band, bool any) {
    if (!any) {
      out.push_back({N, 0});
      return;
    }
    const auto m = static_cast<Eigen::Index>(band.size());
    Eigen::MatrixXd dist = Eigen::MatrixXd::Zero(m + 1, m + 1);
    SpectralField diff(band[0].grid());
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = i + 1; j < m; ++j) {
        diff.coefficients() = band[j].coefficients() - band[i].coefficients();
        dist(i, j) = modulation_norm(diff, m42, w);
      }
      dist(i, m) = modulation_norm(band[i], m42, w);
    }
    out.push_back({N, p_variation(dist, 2).value});
  });
  return out;
}

Real weighted_band_sum(std::span<const BandNorm> bands, Real s) {
  Real acc = 0;
  for (const auto& b : bands) acc += std::pow(Real(b.N), 2 * s) * b.value * b.value;
  return std::sqrt(acc);
}

Real ys_norm(const SampledPath& u, Real s, const Window& w) { return weighted_band_sum(ys_bands(u, w), s); }

std::vector<BandNorm> xs_bands_upper(const SampledPath& u, const Window& w) {
  const ModNormSpec m42{0, 4, 2};
  std::vector<BandNorm> out;
  for_each_adapted_band(u, w, [&](int N, const std::vector<SpectralField>& band, bool any) {
    if (!any) {
      out.push_back({N, 0});
      return;
    }
    Real own = 0, jumps = 0;
    SpectralField diff(band[0].grid());
    for (std::size_t j = 0; j < band.size(); ++j) {
      own += std::pow(modulation_norm(band[j], m42, w), 2);
      diff.coefficients() = band[j].coefficients() - (j ? band[j - 1].coefficients() : CArray::Zero(diff.coefficients().size()));
      jumps += modulation_norm(diff, m42, w);
    }
    out.push_back({N, std::min(std::sqrt(own), jumps)});
  });
  return out;
}

Real xs_norm_upper(const SampledPath& u, Real s, const Window& w) { return weighted_band_sum(xs_bands_upper(u, w), s); }

}  // namespace modnls
