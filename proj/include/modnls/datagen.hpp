// Initial-data families: random-phase, focusing (constant spectrum on a box),
// single bumps, and the mollified ball indicators of infinite energy.
#pragma once

#include "modnls/grid.hpp"
#include "modnls/modspace.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace modnls {

enum class DataFamily { random_phase, focusing, bump, zero };

DataFamily parse_family(std::string_view name);
std::string family_name(DataFamily f);

// Unit-modulus random phases on every lattice frequency |xi| <= N; zero elsewhere.
Field random_phase_data(const Grid& g, int N, std::uint64_t seed);
// hat u = 1 on [-N, N]^d. Peak at x = 0 equals (2pi)^{-d/2} dxi^d * count.
Field focusing_data(const Grid& g, int N);
// Smooth spectral bump of radius 1/2 centered at xi = N e_1.
Field bump_data(const Grid& g, int N);
Field make_data(const Grid& g, DataFamily family, int N, std::uint64_t seed);

// f_n = chi * 1_{B(0,n)}, chi(x) = pi^{-d/2} exp(-|x|^2), built from the exact
// transforms and normalized to ||f_n||_{L^4} = 1.
Field mollified_indicator(const Grid& g, Real radius);

struct IndicatorReport {
  Real radius = 0;
  Real eps = 0.1;
  Real modulation = 0;  // ||f||_{M^{1+eps}_{4,2}}
  Real h1 = 0;
  Real l2 = 0;
  Real l4 = 0;
  Real boundary = 0;  // boundary_ratio; > kBoundaryDecay means flagged
};
IndicatorReport indicator_report(const Field& f, Real radius, Real eps, const Window& w);

// (||f||_2^2 + ||grad f||_2^2)^{1/2}, gradient taken spectrally
Real h1_norm(const Field& f);

// Flat binary: int32 d, int32 n, float64 L, then interleaved re/im float64,
// all little-endian.
void write_field(const std::filesystem::path& path, const Field& f);
Field read_field(const std::filesystem::path& path);

}  // namespace modnls
