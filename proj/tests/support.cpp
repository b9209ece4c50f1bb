#include "support.hpp"

#include <cmath>

namespace modnls::testing {

Field random_field(const Grid& g, std::mt19937_64& rng) {
  std::normal_distribution<Real> nd;
  CArray v(static_cast<Eigen::Index>(g.size()));
  for (auto& z : v) z = {nd(rng), nd(rng)};
  return Field(g, std::move(v));
}

Field random_bandlimited(const Grid& g, Real radius, std::mt19937_64& rng) {
  std::normal_distribution<Real> nd;
  SpectralField F(g);
  const RArray& r2 = g.frequency_sq();
  for (Eigen::Index i = 0; i < r2.size(); ++i)
    if (r2[i] <= radius * radius) F.coefficients()[i] = {nd(rng), nd(rng)};
  return from_spectrum(F);
}

Real rel_error(const CArray& a, const CArray& b) { return std::sqrt((a - b).abs2().sum() / b.abs2().sum()); }
Real rel_error(const Field& a, const Field& b) { return rel_error(a.values(), b.values()); }

Real brute_force_vp(const SampledPath& v, Real p, Endpoint end) {
  const std::size_t m = v.values.size();
  const std::size_t M = m + (end == Endpoint::vanishing ? 1 : 0);
  const Field zero(v.values[0].grid());
  auto value = [&](std::size_t i) -> const Field& { return i < m ? v.values[i] : zero; };
  auto jump = [&](std::size_t i, std::size_t j) { return i < m && j < m ? v.norm(v.values[j] - v.values[i]) : v.norm(value(i)); };
  Real best = 0;
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << M); ++mask) {
    Real acc = 0;
    std::size_t prev = M;
    for (std::size_t i = 0; i < M; ++i) {
      if (!(mask >> i & 1)) continue;
      if (prev != M) acc += std::pow(jump(prev, i), p);
      prev = i;
    }
    best = std::max(best, acc);
  }
  return std::pow(best, 1 / p);
}

}  // namespace modnls::testing
