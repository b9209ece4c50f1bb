// Uniform (unit-cube) frequency decomposition and the norms built on it:
// modulation norms M^s_{p,q}, Littlewood-Paley projections P_N, sharp ball
// projections, and the M + L^2 sum-space bound.
#pragma once

#include "modnls/grid.hpp"

#include <span>
#include <vector>

namespace modnls {

struct ModNormSpec {
  Real s = 0;
  Real p = 2;
  Real q = 2;
};

void validate(const ModNormSpec& spec);

// <k> = (1 + |k|^2)^{1/2}
Real japanese_bracket(const Lattice& k);

// Square partition of unity sigma_k(xi) = sigma(xi - k), sum_k sigma_k^2 = 1.
// sigma = b / (sum_k b(. - k)^2)^{1/2} with b(xi) = exp(-1 / (1 - |xi|^2/rho^2)).
// rho = 1 for d <= 3. In d = 4 the unit balls around Z^4 leave the points
// (1/2,1/2,1/2,1/2) + Z^4 uncovered, so rho = 1.25 there.
class Window {
 public:
  explicit Window(const Grid& grid);

  struct Tap {
    Lattice offset;  // in units of dxi, relative to the cube center k/dxi
    Real weight;     // sigma(offset * dxi)
  };

  const Grid& grid() const noexcept { return grid_; }
  int kmax() const noexcept { return kmax_; }
  int cells_per_unit() const noexcept { return M_; }  // 1 / dxi
  Real support_radius() const noexcept { return rho_; }
  int stencil_radius() const noexcept { return radius_; }
  std::span<const Tap> stencil() const noexcept { return taps_; }

  Real bump(const Point& xi) const;     // b
  Real profile(const Point& xi) const;  // sigma, any xi in R^d
  Real operator()(const Lattice& k, const Point& xi) const;

  // max over representable xi of |sum_k sigma_k(xi)^2 - 1|
  Real partition_defect() const;

 private:
  Grid grid_;
  int M_, kmax_, radius_;
  Real rho_;
  std::vector<Tap> taps_;
};

Window make_window(const Grid& grid);

// Every cube index with |k|_inf <= kmax.
std::vector<Lattice> window_lattice(const Window& w);

Field iso_piece(const Field& f, const Lattice& k, const Window& w);
SpectralField iso_piece(const SpectralField& F, const Lattice& k, const Window& w);

Real modulation_norm(const Field& f, const ModNormSpec& spec, const Window& w);
Real modulation_norm(const SpectralField& F, const ModNormSpec& spec, const Window& w);
// ||sigma_k(D) f||_{L^p} for every k in window_lattice order (zeros included).
std::vector<Real> piece_norms(const SpectralField& F, Real p, const Window& w);

// Smooth step phi: 1 on [0,1], 0 on [2,inf).
Real lp_cutoff(Real r);
// psi_N(|xi|): phi(|xi|) for N = 1, phi(|xi|/N) - phi(2|xi|/N) otherwise.
Real lp_symbol(Real radius, int N);
// Dyadic N = 1, 2, 4, ... whose annuli meet the representable band; the
// family telescopes to the identity there.
std::vector<int> dyadic_bands(const Grid& g);
Field dyadic_project(const Field& f, int N);
SpectralField dyadic_project(const SpectralField& F, int N);
Field low_project(const Field& f, int N);   // P_{<=N} = phi(|D|/N)
Field high_project(const Field& f, int N);  // P_{>N} = 1 - phi(|D|/N)
SpectralField low_project(const SpectralField& F, int N);
SpectralField high_project(const SpectralField& F, int N);

// Sharp ball multiplier 1_{|xi - center| <= K}.
Field box_project(const Field& f, const Point& center, Real K);
SpectralField box_project(const SpectralField& F, const Point& center, Real K);

// Balls of radius K centered on (2K/sqrt(d)) Z^d covering the support of psi_N.
struct BoxCover {
  std::vector<Point> centers;
  Real radius = 0;
};
BoxCover annulus_cover(const Grid& g, int N, Real K);
// Largest number of cover balls containing one representable xi in supp psi_N.
int cover_overlap(const Grid& g, const BoxCover& cover, int N);

struct SumSpaceSplit {
  int threshold = 0;  // 0: everything in L^2
  Real modulation_part = 0;
  Real l2_part = 0;
  Real bound = 0;
};
struct SumSpaceBound {
  Real bound = 0;
  int best_threshold = 0;
  std::vector<SumSpaceSplit> sweep;
};
SumSpaceSplit sum_space_split(const Field& f, const ModNormSpec& spec, const Window& w, int threshold);
SumSpaceBound sum_space_norm_upper(const Field& f, const ModNormSpec& spec, const Window& w);

}  // namespace modnls
