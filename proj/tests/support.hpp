// Shared helpers for the unit and acceptance tests.
#pragma once

#include "modnls/grid.hpp"
#include "modnls/variation.hpp"

#include <cstdint>
#include <random>

namespace modnls::testing {

// i.i.d. complex normal samples; rough, all frequencies populated.
Field random_field(const Grid& g, std::mt19937_64& rng);
// Random coefficients on |xi| <= radius, zero elsewhere.
Field random_bandlimited(const Grid& g, Real radius, std::mt19937_64& rng);
// ||a - b||_2 / ||b||_2 on raw arrays.
Real rel_error(const CArray& a, const CArray& b);
Real rel_error(const Field& a, const Field& b);

// Exhaustive V^p: every increasing node subsequence, jumps summed left to
// right. Exponential; m <= 12 or so.
Real brute_force_vp(const SampledPath& v, Real p, Endpoint end);

}  // namespace modnls::testing
