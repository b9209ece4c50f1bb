#include "modnls/estimates.hpp"

#include "modnls/propagator.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <random>
#include <thread>

namespace modnls {

Real sdec(Real p, int d) {
  if (!(p >= 2)) throw DomainError("sdec: p must be >= 2");
  if (d < 1) throw DomainError("sdec: d must be >= 1");
  if (p <= 2.0 * (d + 2) / d) return 0;
  return d / 4.0 - (d + 2) / (2 * p);
}

FitResult fit_exponent(std::span<const Real> scales, std::span<const Real> ratios) {
  if (scales.size() != ratios.size()) throw DomainError("fit: scales/ratios size mismatch");
  if (scales.size() < 3) throw DomainError("fit: degenerate, need at least 3 scales");
  FitResult fit;
  fit.scales.assign(scales.begin(), scales.end());
  fit.ratios.assign(ratios.begin(), ratios.end());
  const auto m = static_cast<Real>(scales.size());
  Real mx = 0, my = 0;
  for (std::size_t i = 0; i < scales.size(); ++i) {
    if (!(scales[i] > 0)) throw DomainError("fit: scales must be positive");
    if (!(ratios[i] > 0) || !std::isfinite(ratios[i])) throw DomainError("fit: ratios must be positive and finite");
    mx += std::log(scales[i]);
    my += std::log(ratios[i]);
  }
  mx /= m;
  my /= m;
  Real sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < scales.size(); ++i) {
    const Real dx = std::log(scales[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(ratios[i]) - my);
  }
  if (!(sxx > 0)) throw DomainError("fit: degenerate, scales are all equal");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  Real ss = 0;
  for (std::size_t i = 0; i < scales.size(); ++i) {
    const Real r = std::log(ratios[i]) - (fit.intercept + fit.slope * std::log(scales[i]));
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / m);
  return fit;
}

FitResult fit_ratios(std::span<const Real> scales, std::span<const Real> lhs, std::span<const Real> rhs) {
  if (lhs.size() != rhs.size()) throw DomainError("fit: lhs/rhs size mismatch");
  std::vector<Real> ratios(lhs.size());
  for (std::size_t i = 0; i < lhs.size(); ++i) {
    if (!(rhs[i] > 0)) throw DomainError("fit: degenerate, zero right-hand side");
    ratios[i] = lhs[i] / rhs[i];
  }
  FitResult fit = fit_exponent(scales, ratios);
  fit.lhs.assign(lhs.begin(), lhs.end());
  fit.rhs.assign(rhs.begin(), rhs.end());
  return fit;
}

void judge(FitResult& fit, Real predicted, Real margin, bool two_sided) {
  fit.predicted = predicted;
  fit.margin = margin;
  fit.two_sided = two_sided;
  fit.pass = fit.slope <= predicted + margin && (!two_sided || fit.slope >= predicted - margin);
}

namespace {

std::atomic<int> g_threads{0};

// Runs fn(i) for i < count on up to thread_count() workers; results are
// indexed, so the order of completion does not matter.
template <class Fn>
void parallel_for(std::size_t count, Fn&& fn) {
  const auto workers = std::min<std::size_t>(count, static_cast<std::size_t>(thread_count()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < count;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  pool.clear();
  if (error) std::rethrow_exception(error);
}

bool is_dyadic(int N) { return N >= 1 && std::has_single_bit(static_cast<unsigned>(N)); }

void check_scales(std::span<const int> scales, const char* what) {
  if (scales.size() < 3) throw DomainError(std::string(what) + ": degenerate, need at least 3 scales");
  for (int N : scales)
    if (!is_dyadic(N)) throw DomainError(std::string(what) + ": scale " + std::to_string(N) + " is not dyadic");
}

// largest |xi|^2 carried by F
Real spectral_reach(const SpectralField& F) {
  const RArray& r2 = F.grid().frequency_sq();
  const Real floor = 1e-14 * F.coefficients().abs().maxCoeff();
  Real out = 0;
  for (Eigen::Index i = 0; i < r2.size(); ++i)
    if (std::abs(F.coefficients()[i]) > floor) out = std::max(out, r2[i]);
  return out;
}

// Free evolution on a uniform time grid, advanced by one multiplier per step.
class FreeFlow {
 public:
  FreeFlow(SpectralField F, Real t0, Real dt)
      : state_(std::move(F)), step_(free_symbol(state_.grid(), dt)) {
    if (t0 != 0) state_.coefficients() *= free_symbol(state_.grid(), t0);
  }
  Field current() const { return from_spectrum(state_); }
  void advance() { state_.coefficients() *= step_; }

 private:
  SpectralField state_;
  CArray step_;
};

const ModNormSpec kM42{0, 4, 2};

}  // namespace

void set_thread_count(int k) {
  if (k < 1) throw DomainError("thread count must be >= 1");
  g_threads = k;
}

int thread_count() {
  if (int k = g_threads.load(); k > 0) return k;
  if (const char* env = std::getenv("MODNLS_THREADS")) {
    const int k = std::atoi(env);
    if (k >= 1) return k;
  }
  return 1;
}

int auto_time_nodes(Real omega, Real T) {
  const Real need = std::ceil(std::max<Real>(omega * T, 16));
  return 1 + static_cast<int>(std::bit_ceil(static_cast<unsigned long>(need)));
}

// ---- linear smoothing ----------------------------------------------------

PairMeasure smoothing_point(const Field& u0, Real p, Real s, Real T, int nodes, const Window& w) {
  require_same_grid(u0.grid(), w.grid());
  if (!(p >= 2) || std::isinf(p)) throw DomainError("smoothing: need finite p >= 2");
  if (!(T > 0)) throw DomainError("smoothing: horizon must be positive");
  const SpectralField U = to_spectrum(u0);
  if (U.coefficients().isZero(0)) throw DomainError("smoothing: degenerate, zero data");
  PairMeasure out;
  // |u|^p oscillates in t at most (p/2) max|xi|^2
  out.nodes = nodes > 0 ? nodes : auto_time_nodes(0.5 * p * spectral_reach(U), T);
  const TimeGrid tg(0, T, out.nodes);
  FreeFlow flow(U, 0, tg.step());
  SpacetimeNorm acc(p);
  for (int j = 0; j < out.nodes; ++j) {
    acc.add_power(tg.node(j), lp_power(u0.grid(), flow.current().values(), p));
    flow.advance();
  }
  out.lhs = acc.value();
  out.rhs = modulation_norm(U, {s, p, 2}, w);
  return out;
}

namespace {

FitResult smoothing_sweep(const ExperimentConfig& cfg, Real p, Real predicted, const char* what) {
  check_scales(cfg.scales, what);
  const Grid g(cfg.dim, cfg.n, cfg.length);
  for (int N : cfg.scales)
    if (N > g.nyquist() / 4)
      throw DomainError(std::string(what) + ": scale " + std::to_string(N) + " exceeds a quarter of the Nyquist band");
  const Window w(g);
  std::vector<PairMeasure> cells(cfg.scales.size());
  parallel_for(cells.size(), [&](std::size_t i) {
    const Field u0 = make_data(g, cfg.family, cfg.scales[i], cfg.seed + i);
    cells[i] = smoothing_point(u0, p, cfg.s, cfg.horizon, cfg.time_nodes, w);
  });
  std::vector<Real> scales(cfg.scales.begin(), cfg.scales.end()), lhs, rhs;
  for (const auto& c : cells) {
    lhs.push_back(c.lhs);
    rhs.push_back(c.rhs);
  }
  FitResult fit = fit_ratios(scales, lhs, rhs);
  judge(fit, predicted, cfg.margin, cfg.two_sided);
  return fit;
}

}  // namespace

FitResult smoothing_ratio(const ExperimentConfig& cfg) {
  return smoothing_sweep(cfg, cfg.p, 2 * sdec(cfg.p, cfg.dim), "smoothing");
}

FitResult strichartz_l4_ratio(const ExperimentConfig& cfg) {
  if (cfg.dim != 3 && cfg.dim != 4) throw DomainError("strichartz: d must be 3 or 4");
  return smoothing_sweep(cfg, 4, 2 * sdec(4, cfg.dim), "strichartz");
}

// ---- bilinear ------------------------------------------------------------

namespace {

void check_regime(int N1, int N2) {
  if (!is_dyadic(N1) || !is_dyadic(N2)) throw DomainError("bilinear: scales must be dyadic");
  if (2 * N2 > N1)
    throw DomainError("bilinear: regime violated, need N2 <= N1/2 (N1=" + std::to_string(N1) +
                      ", N2=" + std::to_string(N2) + ")");
}

// L^2([0,T] x torus) of a product of two free evolutions
Real product_l2(const SpectralField& U, const SpectralField& V, Real T, int nodes) {
  const TimeGrid tg(0, T, nodes);
  FreeFlow fu(U, 0, tg.step()), fv(V, 0, tg.step());
  const Grid& g = U.grid();
  SpacetimeNorm acc(2);
  for (int j = 0; j < nodes; ++j) {
    const Field a = fu.current(), b = fv.current();
    acc.add_power(tg.node(j), g.cell_volume() * (a.values().abs2() * b.values().abs2()).sum());
    fu.advance();
    fv.advance();
  }
  return acc.value();
}

Real spacetime_l4(const SpectralField& U, Real T, int nodes) {
  const TimeGrid tg(0, T, nodes);
  FreeFlow fu(U, 0, tg.step());
  SpacetimeNorm acc(4);
  for (int j = 0; j < nodes; ++j) {
    acc.add_power(tg.node(j), lp_power(U.grid(), fu.current().values(), 4));
    fu.advance();
  }
  return acc.value();
}

}  // namespace

PairMeasure product_pair(const SpectralField& U, const SpectralField& V, Real T, int nodes, const Window& w) {
  require_same_grid(U.grid(), w.grid());
  require_same_grid(V.grid(), w.grid());
  if (U.coefficients().isZero(0) || V.coefficients().isZero(0))
    throw DomainError("bilinear: ratio undefined, a projected factor vanishes");
  PairMeasure out;
  out.nodes = nodes > 0 ? nodes : auto_time_nodes(spectral_reach(U) + spectral_reach(V), T);
  out.lhs = product_l2(U, V, T, out.nodes);
  out.rhs = modulation_norm(U, kM42, w) * modulation_norm(V, kM42, w);
  return out;
}

PairMeasure bilinear_pair(const Field& f1, int N1, const Field& f2, int N2, Real T, int nodes, const Window& w) {
  check_regime(N1, N2);
  return product_pair(dyadic_project(to_spectrum(f1), N1), dyadic_project(to_spectrum(f2), N2), T, nodes, w);
}

BilinearResult bilinear_ratio(const ExperimentConfig& cfg) {
  if (cfg.dim != 3 && cfg.dim != 4) throw DomainError("bilinear: d must be 3 or 4");
  check_scales(cfg.scales, "bilinear");
  check_scales(cfg.low_scales, "bilinear");
  for (int N1 : cfg.scales) check_regime(N1, cfg.fixed_low);
  for (int N2 : cfg.low_scales) check_regime(cfg.fixed_high, N2);
  const Grid g(cfg.dim, cfg.n, cfg.length);
  const Window w(g);

  // (N1, N2) cells of both sweeps; the shared corner is measured once
  std::vector<std::pair<int, int>> cells;
  auto cell_of = [&](int N1, int N2) {
    for (std::size_t i = 0; i < cells.size(); ++i)
      if (cells[i] == std::pair{N1, N2}) return i;
    cells.emplace_back(N1, N2);
    return cells.size() - 1;
  };
  std::vector<std::size_t> hi_idx, lo_idx;
  for (int N1 : cfg.scales) hi_idx.push_back(cell_of(N1, cfg.fixed_low));
  for (int N2 : cfg.low_scales) lo_idx.push_back(cell_of(cfg.fixed_high, N2));

  std::vector<PairMeasure> out(cells.size());
  parallel_for(cells.size(), [&](std::size_t i) {
    const auto [N1, N2] = cells[i];
    // seeds depend on the scale only, so shared cells see the same data
    const Field f1 = make_data(g, cfg.family, N1, cfg.seed + 1000003ULL * static_cast<unsigned>(N1));
    const Field f2 = make_data(g, cfg.family, N2, cfg.seed + 7919ULL * static_cast<unsigned>(N2) + 1);
    out[i] = bilinear_pair(f1, N1, f2, N2, cfg.horizon, cfg.time_nodes, w);
  });

  auto sweep = [&](const std::vector<int>& scales, const std::vector<std::size_t>& idx, Real predicted) {
    std::vector<Real> s(scales.begin(), scales.end()), lhs, rhs;
    for (auto i : idx) {
      lhs.push_back(out[i].lhs);
      rhs.push_back(out[i].rhs);
    }
    FitResult fit = fit_ratios(s, lhs, rhs);
    judge(fit, predicted, cfg.margin);
    return fit;
  };
  return {sweep(cfg.scales, hi_idx, 0), sweep(cfg.low_scales, lo_idx, 4 * sdec(4, cfg.dim))};
}

BilinearChain bilinear_chain(const Field& f1, int N1, const Field& f2, int N2, Real T, int nodes, const Window& w) {
  check_regime(N1, N2);
  const Grid& g = f1.grid();
  require_same_grid(g, w.grid());
  require_same_grid(f2.grid(), g);
  const SpectralField U = dyadic_project(to_spectrum(f1), N1);
  const SpectralField V = dyadic_project(to_spectrum(f2), N2);
  if (U.coefficients().isZero(0) || V.coefficients().isZero(0))
    throw DomainError("bilinear: ratio undefined, a projected factor vanishes");
  if (nodes <= 0) nodes = auto_time_nodes(spectral_reach(U) + spectral_reach(V), T);

  const BoxCover cover = annulus_cover(g, N1, N2);
  BilinearChain chain;
  chain.balls = static_cast<int>(cover.centers.size());
  chain.overlap = cover_overlap(g, cover, N1);

  const Real uv = product_l2(U, V, T, nodes);
  const Real v4 = spacetime_l4(V, T, nodes);
  const Real vM = modulation_norm(V, kM42, w);
  std::vector<Real> qv(cover.centers.size()), q4(cover.centers.size()), qM(cover.centers.size());
  parallel_for(cover.centers.size(), [&](std::size_t b) {
    const SpectralField Q = box_project(U, cover.centers[b], cover.radius);
    if (Q.coefficients().isZero(0)) return;
    qv[b] = product_l2(Q, V, T, nodes);
    q4[b] = spacetime_l4(Q, T, nodes);
    qM[b] = modulation_norm(Q, kM42, w);
  });
  Real l1 = 0, l2 = 0, l3 = 0;
  for (std::size_t b = 0; b < qv.size(); ++b) {
    l1 += qv[b] * qv[b];
    l2 += q4[b] * q4[b] * v4 * v4;
    l3 += qM[b] * qM[b] * vM * vM;
  }
  const Real uM = modulation_norm(U, kM42, w);
  chain.lines = {{"|P_N1 u P_N2 v|_2^2", uv * uv},
                 {"sum_Q |Q P_N1 u P_N2 v|_2^2", l1},
                 {"sum_Q |Q P_N1 u|_4^2 |P_N2 v|_4^2", l2},
                 {"sum_Q |Q u0|_M42^2 |v0|_M42^2", l3},
                 {"|P_N1 u0|_M42^2 |P_N2 v0|_M42^2", uM * uM * vM * vM}};
  return chain;
}

// ---- V^2 transfer --------------------------------------------------------

namespace {

void check_atomic(const StepFunction& u, Real T, const char* which) {
  validate(u);
  if (u.partition.front() > 0 || u.partition.back() < T)
    throw DomainError(std::string("v2 bilinear: ") + which + " is not an atomic superposition covering [0, T]");
}

// adapted profile active at time t (zero outside the partition)
std::size_t piece_at(const StepFunction& u, Real t) {
  for (std::size_t k = 0; k < u.pieces.size(); ++k)
    if (t >= u.partition[k] && t < u.partition[k + 1]) return k;
  return u.pieces.size();
}

Real v2_adapted(const StepFunction& u, int N, const Window& w) {
  SampledPath path = as_path(u);
  path.norm = ValueNorm::modulation(kM42, w);
  for (auto& f : path.values) f = dyadic_project(f, N);
  return vp_norm(path, 2, Endpoint::vanishing);
}

}  // namespace

PairMeasure v2_bilinear_pair(const StepFunction& u, int N, const StepFunction& v, int K, Real T, int nodes,
                             const Window& w) {
  check_regime(N, K);
  check_atomic(u, T, "u");
  check_atomic(v, T, "v");
  const Grid& g = w.grid();
  require_same_grid(u.pieces[0].grid(), g);
  require_same_grid(v.pieces[0].grid(), g);
  std::vector<SpectralField> U, V;
  Real reach = 0;
  for (const auto& f : u.pieces) {
    U.push_back(dyadic_project(to_spectrum(f), N));
    reach = std::max(reach, spectral_reach(U.back()));
  }
  Real reach_v = 0;
  for (const auto& f : v.pieces) {
    V.push_back(dyadic_project(to_spectrum(f), K));
    reach_v = std::max(reach_v, spectral_reach(V.back()));
  }
  PairMeasure out;
  out.rhs = v2_adapted(u, N, w) * v2_adapted(v, K, w);
  if (!(out.rhs > 0)) throw DomainError("v2 bilinear: ratio undefined, a projected path vanishes");

  // breakpoints of both step functions inside [0, T]; each interval is a
  // product of two free evolutions integrated on its own trapezoid grid
  std::vector<Real> cuts{0, T};
  for (Real t : u.partition)
    if (t > 0 && t < T) cuts.push_back(t);
  for (Real t : v.partition)
    if (t > 0 && t < T) cuts.push_back(t);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  const Real rate = nodes > 0 ? nodes : auto_time_nodes(reach + reach_v, 1);
  Real power = 0;
  int used = 0;
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
    const Real a = cuts[c], b = cuts[c + 1];
    const std::size_t ku = piece_at(u, a), kv = piece_at(v, a);
    if (ku == u.pieces.size() || kv == v.pieces.size()) continue;
    const int m = std::max(17, static_cast<int>(std::ceil(rate * (b - a))) + 1);
    const TimeGrid tg(a, b, m);
    FreeFlow fu(U[ku], a, tg.step()), fv(V[kv], a, tg.step());
    SpacetimeNorm acc(2);
    for (int j = 0; j < m; ++j) {
      const Field x = fu.current(), y = fv.current();
      acc.add_power(tg.node(j), g.cell_volume() * (x.values().abs2() * y.values().abs2()).sum());
      fu.advance();
      fv.advance();
    }
    power += std::pow(acc.value(), 2);
    used += m;
  }
  out.lhs = std::sqrt(power);
  out.nodes = used;
  return out;
}

FitResult v2_bilinear_ratio(const ExperimentConfig& cfg) {
  if (cfg.dim != 3 && cfg.dim != 4) throw DomainError("v2 bilinear: d must be 3 or 4");
  check_scales(cfg.low_scales, "v2 bilinear");
  const int N = cfg.fixed_high;
  for (int K : cfg.low_scales) check_regime(N, K);
  const Grid g(cfg.dim, cfg.n, cfg.length);
  const Window w(g);
  const Real T = cfg.horizon;
  // two-piece atoms with breaks at different times
  auto atom = [&](int scale, std::uint64_t seed, Real cut) {
    return make_atom({0, cut * T, T},
                     {make_data(g, cfg.family, scale, seed), make_data(g, cfg.family, scale, seed + 17)}, 2,
                     ValueNorm::modulation(kM42, w));
  };
  const StepFunction u = atom(N, cfg.seed, 0.5);
  std::vector<PairMeasure> cells(cfg.low_scales.size());
  parallel_for(cells.size(), [&](std::size_t i) {
    const int K = cfg.low_scales[i];
    cells[i] = v2_bilinear_pair(u, N, atom(K, cfg.seed + 101 * (i + 1), 0.3), K, T, cfg.time_nodes, w);
  });
  std::vector<Real> scales(cfg.low_scales.begin(), cfg.low_scales.end()), lhs, rhs;
  for (const auto& c : cells) {
    lhs.push_back(c.lhs);
    rhs.push_back(c.rhs);
  }
  FitResult fit = fit_ratios(scales, lhs, rhs);
  judge(fit, 4 * sdec(4, cfg.dim), cfg.margin);
  return fit;
}

// ---- decoupling ----------------------------------------------------------

PairMeasure decoupling_point(const Profile& f, int d, Real R, Real p, Real spacing, Real mesh_density) {
  if (!(p >= 2) || std::isinf(p)) throw DomainError("decoupling: need finite p >= 2");
  if (!(mesh_density > 0)) throw DomainError("decoupling: mesh density must be positive");
  const FrequencyMesh probe = unit_ball_mesh(d, 2);
  CapPartition caps = partition_caps(probe, R);
  if (caps.per_axis < 4) throw DomainError("decoupling: R too small for at least 4 caps");
  // mesh cells nest inside caps so every node lies in exactly one cap
  const int per_cap = std::max(1, static_cast<int>(std::ceil(mesh_density * R / caps.per_axis)));
  const FrequencyMesh mesh = unit_ball_mesh(d, per_cap * caps.per_axis);
  caps = partition_caps(mesh, R);
  std::vector<Complex> profile(mesh.nodes.size());
  for (std::size_t v = 0; v < mesh.nodes.size(); ++v) profile[v] = f(mesh.nodes[v]);
  const ExtensionPowers pw = extension_lp_powers(mesh, profile, caps, R, spacing, p);
  PairMeasure out;
  out.lhs = std::pow(pw.total, 1 / p);
  Real sq = 0;
  for (Real c : pw.caps) sq += std::pow(c, 2 / p);
  out.rhs = std::sqrt(sq);
  out.nodes = static_cast<int>(mesh.nodes.size());
  if (!(out.rhs > 0)) throw DomainError("decoupling: zero profile");
  return out;
}

FitResult decoupling_ratio(const ExperimentConfig& cfg) {
  if (cfg.scales.size() < 3) throw DomainError("decoupling: degenerate, need at least 3 radii");
  Profile f;
  switch (cfg.family) {
    case DataFamily::focusing: f = [](const Point&) { return Complex(1); }; break;
    case DataFamily::random_phase:
      // phase hashed from the node position so it does not depend on the mesh walk
      f = [seed = cfg.seed](const Point& xi) {
        std::uint64_t h = seed;
        for (int a = 0; a < xi.size(); ++a)
          h = h * 0x9E3779B97F4A7C15ULL ^ static_cast<std::uint64_t>(std::llround((xi[a] + 2) * (1 << 30)));
        std::mt19937_64 rng(h);
        return std::polar(1.0, std::uniform_real_distribution<Real>(0, 2 * kPi)(rng));
      };
      break;
    case DataFamily::bump:
      f = [](const Point& xi) {
        const Real r2 = xi.squaredNorm();
        return Complex(r2 < 1 ? std::exp(-1 / (1 - r2)) : 0.0);
      };
      break;
    case DataFamily::zero: throw DomainError("decoupling: degenerate, zero profile");
  }
  std::vector<PairMeasure> cells(cfg.scales.size());
  parallel_for(cells.size(), [&](std::size_t i) {
    cells[i] = decoupling_point(f, cfg.dim, cfg.scales[i], cfg.p, cfg.spacing, cfg.mesh_density);
  });
  std::vector<Real> scales(cfg.scales.begin(), cfg.scales.end()), lhs, rhs;
  for (const auto& c : cells) {
    lhs.push_back(c.lhs);
    rhs.push_back(c.rhs);
  }
  FitResult fit = fit_ratios(scales, lhs, rhs);
  judge(fit, sdec(cfg.p, cfg.dim), cfg.margin);
  return fit;
}

}  // namespace modnls
