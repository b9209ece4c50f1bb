#include "modnls/modspace.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_set>

namespace modnls {

void validate(const ModNormSpec& spec) {
  if (!(spec.p >= 1) || !(spec.q >= 1)) throw DomainError("modulation norm: p and q must be >= 1");
  if (!std::isfinite(spec.s)) throw DomainError("modulation norm: s must be finite");
}

Real japanese_bracket(const Lattice& k) { return std::sqrt(1.0 + k.cast<Real>().squaredNorm()); }

namespace {

bool is_dyadic(int N) { return N >= 1 && std::has_single_bit(static_cast<unsigned>(N)); }

// Odometer over the cube [-r, r]^d.
template <class Fn>
void for_each_in_cube(int d, int r, Fn&& fn) {
  Lattice k = Lattice::Constant(d, -r);
  while (true) {
    fn(k);
    int a = d - 1;
    while (a >= 0 && k[a] == r) k[a--] = -r;
    if (a < 0) return;
    ++k[a];
  }
}

}  // namespace

Window::Window(const Grid& grid) : grid_(grid) {
  const Real dxi = grid.freq_spacing();
  if (dxi > 0.25 + 1e-12) throw DomainError("window: grid too coarse to resolve unit cubes (dxi > 1/4)");
  const Real cells = 1 / dxi;
  M_ = static_cast<int>(std::lround(cells));
  if (std::abs(cells - M_) > 1e-9 * cells)
    throw DomainError("window: L / (2 pi) must be an integer so unit cubes align with the frequency lattice");
  if (std::floor(grid.nyquist()) < 2) throw DomainError("window: band must contain |k| <= 2");
  rho_ = grid.dim() == 4 ? 1.25 : 1.0;
  kmax_ = static_cast<int>(std::ceil(grid.nyquist() + rho_)) - 1;

  radius_ = static_cast<int>(std::ceil(rho_ * M_)) - 1;
  const int d = grid.dim();
  for_each_in_cube(d, radius_, [&](const Lattice& o) {
    Point xi = o.cast<Real>() / M_;
    if (xi.norm() >= rho_) return;
    Real w = profile(xi);
    if (w > 0) taps_.push_back({o, w});
  });
  radius_ = 0;
  for (const auto& t : taps_) radius_ = std::max(radius_, t.offset.cwiseAbs().maxCoeff());
}

Window make_window(const Grid& grid) { return Window(grid); }

Real Window::bump(const Point& xi) const {
  Real r2 = xi.squaredNorm() / (rho_ * rho_);
  if (r2 >= 1) return 0;
  return std::exp(-1 / (1 - r2));
}

Real Window::profile(const Point& xi) const {
  Real b = bump(xi);
  if (b == 0) return 0;
  // S(xi) = sum over Z^d of b(xi - k)^2; only |xi_a - k_a| < rho <= 2 matter
  const int d = grid_.dim();
  Lattice base(d);
  for (int a = 0; a < d; ++a) base[a] = static_cast<int>(std::floor(xi[a]));
  Real S = 0;
  for_each_in_cube(d, 2, [&](const Lattice& o) {
    Real v = bump(xi - (base + o).cast<Real>());
    S += v * v;
  });
  return b / std::sqrt(S);
}

Real Window::operator()(const Lattice& k, const Point& xi) const { return profile(xi - k.cast<Real>()); }

std::vector<Lattice> window_lattice(const Window& w) {
  std::vector<Lattice> out;
  for_each_in_cube(w.grid().dim(), w.kmax(), [&](const Lattice& k) { out.push_back(k); });
  return out;
}

namespace {

// Representable absolute frequency index of tap o in cube k, or false.
bool tap_slot(const Grid& g, const Lattice& k, const Lattice& o, int M, std::size_t& slot) {
  std::size_t i = 0;
  for (int a = 0; a < g.dim(); ++a) {
    int m = k[a] * M + o[a];
    if (!g.representable(m)) return false;
    i = (i << g.log2n()) | static_cast<std::size_t>(g.storage_slot(m));
  }
  slot = i;
  return true;
}

void check_cube(const Window& w, const Lattice& k) {
  if (k.size() != w.grid().dim()) throw DomainError("iso piece: dimension mismatch");
  if (k.cwiseAbs().maxCoeff() > w.kmax()) throw DomainError("iso piece: k outside the window lattice");
}

}  // namespace

Real Window::partition_defect() const {
  RArray acc = RArray::Zero(static_cast<Eigen::Index>(grid_.size()));
  for (const Lattice& k : window_lattice(*this)) {
    for (const Tap& t : taps_) {
      std::size_t slot;
      if (tap_slot(grid_, k, t.offset, M_, slot)) acc[static_cast<Eigen::Index>(slot)] += t.weight * t.weight;
    }
  }
  return (acc - 1).abs().maxCoeff();
}

SpectralField iso_piece(const SpectralField& F, const Lattice& k, const Window& w) {
  require_same_grid(F.grid(), w.grid());
  check_cube(w, k);
  SpectralField out(F.grid());
  for (const auto& t : w.stencil()) {
    std::size_t slot;
    if (tap_slot(F.grid(), k, t.offset, w.cells_per_unit(), slot)) {
      auto i = static_cast<Eigen::Index>(slot);
      out.coefficients()[i] = t.weight * F.coefficients()[i];
    }
  }
  return out;
}

Field iso_piece(const Field& f, const Lattice& k, const Window& w) {
  return from_spectrum(iso_piece(to_spectrum(f), k, w));
}

std::vector<Real> piece_norms(const SpectralField& F, Real p, const Window& w) {
  require_same_grid(F.grid(), w.grid());
  if (!(p >= 1)) throw DomainError("modulation norm: p must be >= 1");
  const Grid& g = F.grid();
  const int d = g.dim();
  const int M = w.cells_per_unit();
  const auto taps = w.stencil();

  // |piece|^p for even p is a trigonometric polynomial of degree p*r per
  // axis (r = stencil radius), so its Riemann sum is exact on any grid with
  // more than p*r points per axis. Demodulate onto such a coarse grid.
  const bool even = std::isfinite(p) && p == std::round(p) && static_cast<long>(p) % 2 == 0;
  int nsub = g.n();
  if (even) {
    const auto need = static_cast<unsigned>(std::lround(p) * w.stencil_radius() + 1);
    nsub = std::min<int>(g.n(), std::max<int>(8, static_cast<int>(std::bit_ceil(need))));
  }
  const Grid sub(d, nsub, g.length());
  std::vector<std::size_t> sub_slot(taps.size());
  for (std::size_t t = 0; t < taps.size(); ++t) {
    std::size_t i = 0;
    for (int a = 0; a < d; ++a) {
      int o = taps[t].offset[a];
      i = (i << sub.log2n()) | static_cast<std::size_t>(o >= 0 ? o : o + nsub);
    }
    sub_slot[t] = i;
  }

  const auto cubes = window_lattice(w);
  std::vector<Real> out(cubes.size(), 0.0);
  std::vector<Complex> vals(taps.size());
  std::vector<std::size_t> full_slot(taps.size());
  std::vector<char> present(taps.size());
  for (std::size_t c = 0; c < cubes.size(); ++c) {
    bool any = false;
    for (std::size_t t = 0; t < taps.size(); ++t) {
      std::size_t slot;
      present[t] = tap_slot(g, cubes[c], taps[t].offset, M, slot);
      vals[t] = present[t] ? taps[t].weight * F.coefficients()[static_cast<Eigen::Index>(slot)] : Complex{};
      full_slot[t] = slot;
      any = any || vals[t] != Complex{};
    }
    if (!any) continue;
    if (p == 2) {
      Real acc = 0;
      for (const auto& v : vals) acc += std::norm(v);
      out[c] = std::sqrt(acc * g.freq_cell_volume());
      continue;
    }
    SpectralField piece(even ? sub : g);
    for (std::size_t t = 0; t < taps.size(); ++t) {
      if (!present[t]) continue;
      auto i = static_cast<Eigen::Index>(even ? sub_slot[t] : full_slot[t]);
      piece.coefficients()[i] = vals[t];
    }
    out[c] = lp_norm(from_spectrum(piece), p);
  }
  return out;
}

Real modulation_norm(const SpectralField& F, const ModNormSpec& spec, const Window& w) {
  validate(spec);
  const auto cubes = window_lattice(w);
  const auto norms = piece_norms(F, spec.p, w);
  Real acc = 0;
  for (std::size_t c = 0; c < cubes.size(); ++c) {
    if (norms[c] == 0) continue;
    Real v = (spec.s == 0 ? 1.0 : std::pow(japanese_bracket(cubes[c]), spec.s)) * norms[c];
    if (std::isinf(spec.q))
      acc = std::max(acc, v);
    else
      acc += std::pow(v, spec.q);
  }
  return std::isinf(spec.q) ? acc : std::pow(acc, 1 / spec.q);
}

Real modulation_norm(const Field& f, const ModNormSpec& spec, const Window& w) {
  return modulation_norm(to_spectrum(f), spec, w);
}

Real lp_cutoff(Real r) {
  if (r <= 1) return 1;
  if (r >= 2) return 0;
  Real a = std::exp(-1 / (2 - r));
  Real b = std::exp(-1 / (r - 1));
  return a / (a + b);
}

Real lp_symbol(Real radius, int N) {
  if (N == 1) return lp_cutoff(radius);
  return lp_cutoff(radius / N) - lp_cutoff(2 * radius / N);
}

std::vector<int> dyadic_bands(const Grid& g) {
  std::vector<int> out;
  for (int N = 1; N < 2 * g.max_frequency(); N *= 2) out.push_back(N);
  return out;
}

namespace {

template <class Symbol>
SpectralField radial_multiply(const SpectralField& F, Symbol&& m) {
  const RArray& r2 = F.grid().frequency_sq();
  SpectralField out(F.grid());
  for (Eigen::Index i = 0; i < r2.size(); ++i) {
    Real v = m(std::sqrt(r2[i]));
    if (v != 0) out.coefficients()[i] = v * F.coefficients()[i];
  }
  return out;
}

void check_band(const Grid& g, int N) {
  if (!is_dyadic(N)) throw DomainError("dyadic projection: N must be a power of two >= 1, got " + std::to_string(N));
  if (N / 2.0 >= g.max_frequency()) throw DomainError("dyadic projection: N exceeds the representable band");
}

}  // namespace

SpectralField dyadic_project(const SpectralField& F, int N) {
  check_band(F.grid(), N);
  return radial_multiply(F, [N](Real r) { return lp_symbol(r, N); });
}

SpectralField low_project(const SpectralField& F, int N) {
  check_band(F.grid(), N);
  return radial_multiply(F, [N](Real r) { return lp_cutoff(r / N); });
}

SpectralField high_project(const SpectralField& F, int N) {
  check_band(F.grid(), N);
  return radial_multiply(F, [N](Real r) { return 1 - lp_cutoff(r / N); });
}

Field dyadic_project(const Field& f, int N) { return from_spectrum(dyadic_project(to_spectrum(f), N)); }
Field low_project(const Field& f, int N) { return from_spectrum(low_project(to_spectrum(f), N)); }
Field high_project(const Field& f, int N) { return from_spectrum(high_project(to_spectrum(f), N)); }

SpectralField box_project(const SpectralField& F, const Point& center, Real K) {
  const Grid& g = F.grid();
  if (center.size() != g.dim()) throw DomainError("box projection: center dimension mismatch");
  if (!(K > 0)) throw DomainError("box projection: K must be positive");
  SpectralField out(g);
  const Real K2 = K * K;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if ((g.frequency(i) - center).squaredNorm() <= K2) {
      auto j = static_cast<Eigen::Index>(i);
      out.coefficients()[j] = F.coefficients()[j];
    }
  }
  return out;
}

Field box_project(const Field& f, const Point& center, Real K) {
  return from_spectrum(box_project(to_spectrum(f), center, K));
}

namespace {

Real annulus_inner(int N) { return N == 1 ? 0 : N / 2.0; }

std::int64_t encode(const Lattice& j) {
  std::int64_t key = 0;
  for (int a = 0; a < j.size(); ++a) key = key * 65536 + (j[a] + 32768);
  return key;
}

}  // namespace

BoxCover annulus_cover(const Grid& g, int N, Real K) {
  if (!is_dyadic(N)) throw DomainError("annulus cover: N must be dyadic");
  if (!(K > 0)) throw DomainError("annulus cover: K must be positive");
  const int d = g.dim();
  const Real step = 2 * K / std::sqrt(Real(d));
  const Real outer = 2.0 * N, inner = annulus_inner(N);
  const int r = static_cast<int>(std::ceil((outer + K) / step));
  BoxCover cover;
  cover.radius = K;
  for_each_in_cube(d, r, [&](const Lattice& j) {
    Point c = j.cast<Real>() * step;
    Real dist = c.norm();
    if (dist - K >= outer) return;
    if (dist + K <= inner) return;
    for (int a = 0; a < d; ++a)
      if (std::abs(c[a]) - K > g.nyquist()) return;
    cover.centers.push_back(c);
  });
  return cover;
}

int cover_overlap(const Grid& g, const BoxCover& cover, int N) {
  const int d = g.dim();
  const Real K = cover.radius;
  const Real step = 2 * K / std::sqrt(Real(d));
  std::unordered_set<std::int64_t> keys;
  for (const auto& c : cover.centers) {
    Lattice j(d);
    for (int a = 0; a < d; ++a) j[a] = static_cast<int>(std::lround(c[a] / step));
    keys.insert(encode(j));
  }
  int best = 0;
  const RArray& r2 = g.frequency_sq();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (lp_symbol(std::sqrt(r2[static_cast<Eigen::Index>(i)]), N) == 0) continue;
    Point xi = g.frequency(i);
    Lattice lo(d), hi(d);
    for (int a = 0; a < d; ++a) {
      lo[a] = static_cast<int>(std::ceil((xi[a] - K) / step));
      hi[a] = static_cast<int>(std::floor((xi[a] + K) / step));
    }
    int count = 0;
    Lattice j = lo;
    while (true) {
      if (keys.count(encode(j)) && (j.cast<Real>() * step - xi).squaredNorm() <= K * K) ++count;
      int a = d - 1;
      while (a >= 0 && j[a] == hi[a]) {
        j[a] = lo[a];
        --a;
      }
      if (a < 0) break;
      ++j[a];
    }
    best = std::max(best, count);
  }
  return best;
}

SumSpaceSplit sum_space_split(const Field& f, const ModNormSpec& spec, const Window& w, int threshold) {
  SumSpaceSplit out;
  out.threshold = threshold;
  if (threshold == 0) {
    out.l2_part = lp_norm(f, 2);
  } else {
    SpectralField F = to_spectrum(f);
    out.modulation_part = modulation_norm(low_project(F, threshold), spec, w);
    out.l2_part = lp_norm(from_spectrum(high_project(F, threshold)), 2);
  }
  out.bound = out.modulation_part + out.l2_part;
  return out;
}

SumSpaceBound sum_space_norm_upper(const Field& f, const ModNormSpec& spec, const Window& w) {
  SumSpaceBound out;
  std::vector<int> thresholds{0};
  for (int N : dyadic_bands(f.grid())) thresholds.push_back(N);
  for (int N : thresholds) {
    out.sweep.push_back(sum_space_split(f, spec, w, N));
    if (out.sweep.size() == 1 || out.sweep.back().bound < out.bound) {
      out.bound = out.sweep.back().bound;
      out.best_threshold = N;
    }
  }
  return out;
}

}  // namespace modnls
