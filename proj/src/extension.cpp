// Direct quadrature of the paraboloid extension operator
//   Ef(t,x) = int_{|xi|<1} e^{i(x.xi + t|xi|^2)} f(xi) dxi.
#include "modnls/propagator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace modnls {

namespace {

void check_dim(int d) {
  if (d < 1 || d > 2) throw DomainError("extension operator: only d in {1,2} is supported");
}

void check_profile(const FrequencyMesh& mesh, std::span<const Complex> profile) {
  if (profile.size() != mesh.nodes.size()) throw DomainError("extension operator: profile/mesh size mismatch");
}

Real abs_pow(Real mod2, Real p) {
  if (p == 2) return mod2;
  if (p == 4) return mod2 * mod2;
  if (p == 6) return mod2 * mod2 * mod2;
  return std::pow(mod2, p / 2);
}

// Visit rows of the sample set: fixed (t, x_2..), x_1 = j * spacing, |j| <= jmax.
template <class Fn>
void for_each_row(int d, Real R, Real spacing, Fn&& fn) {
  const int I = static_cast<int>(std::ceil(R / spacing));
  const Real R2 = R * R;
  auto row = [&](Real t, Real x2) {
    const Real X2 = R2 - t * t - x2 * x2;
    if (X2 <= 0) return;
    int jmax = static_cast<int>(std::floor(std::sqrt(X2) / spacing));
    while (jmax >= 0 && (jmax * spacing) * (jmax * spacing) >= X2) --jmax;
    if (jmax < 0) return;
    fn(t, x2, jmax);
  };
  for (int it = -I; it <= I; ++it) {
    const Real t = it * spacing;
    if (d == 1) {
      row(t, 0.0);
    } else {
      for (int i2 = -I; i2 <= I; ++i2) row(t, i2 * spacing);
    }
  }
}

}  // namespace

Real FrequencyMesh::weight() const { return std::pow(cell, dim); }

FrequencyMesh unit_ball_mesh(int d, int per_axis) {
  check_dim(d);
  if (per_axis < 2) throw DomainError("extension operator: need at least 2 mesh cells per axis");
  FrequencyMesh mesh;
  mesh.dim = d;
  mesh.cell = 2.0 / per_axis;
  for (int i = 0; i < per_axis; ++i) {
    const Real a = -1 + (i + 0.5) * mesh.cell;
    if (d == 1) {
      mesh.nodes.push_back(Point::Constant(1, a));
      continue;
    }
    for (int j = 0; j < per_axis; ++j) {
      Point xi(2);
      xi << a, -1 + (j + 0.5) * mesh.cell;
      if (xi.squaredNorm() < 1) mesh.nodes.push_back(xi);
    }
  }
  return mesh;
}

FrequencyMesh unit_ball_mesh(const Grid& g) {
  check_dim(g.dim());
  FrequencyMesh mesh;
  mesh.dim = g.dim();
  mesh.cell = g.freq_spacing();
  const RArray& r2 = g.frequency_sq();
  for (std::size_t i = 0; i < g.size(); ++i)
    if (r2[static_cast<Eigen::Index>(i)] < 1) mesh.nodes.push_back(g.frequency(i));
  return mesh;
}

std::vector<Complex> restrict_profile(const SpectralField& F, const FrequencyMesh& mesh) {
  const Grid& g = F.grid();
  const RArray& r2 = g.frequency_sq();
  for (Eigen::Index i = 0; i < r2.size(); ++i)
    if (r2[i] >= 1 && F.coefficients()[i] != Complex{})
      throw DomainError("extension operator: profile must be supported in |xi| < 1");
  std::vector<Complex> out;
  out.reserve(mesh.nodes.size());
  for (const auto& xi : mesh.nodes) {
    Lattice k(g.dim());
    for (int a = 0; a < g.dim(); ++a) k[a] = static_cast<int>(std::lround(xi[a] / g.freq_spacing()));
    out.push_back(F.coefficients()[static_cast<Eigen::Index>(g.spectral_index(k))]);
  }
  return out;
}

Complex extension_at(const FrequencyMesh& mesh, std::span<const Complex> profile, Real t, const Point& x) {
  check_profile(mesh, profile);
  Complex acc{};
  for (std::size_t v = 0; v < mesh.nodes.size(); ++v) {
    const Point& xi = mesh.nodes[v];
    acc += profile[v] * std::polar(1.0, x.dot(xi) + t * xi.squaredNorm());
  }
  return mesh.weight() * acc;
}

Real ExtensionSamples::cell_volume() const { return std::pow(spacing, dim + 1); }

ExtensionSamples extension_operator(const FrequencyMesh& mesh, std::span<const Complex> profile, Real R,
                                    Real spacing) {
  check_dim(mesh.dim);
  check_profile(mesh, profile);
  if (!(R >= 4)) throw DomainError("extension operator: R must be >= 4");
  if (!(spacing > 0)) throw DomainError("extension operator: spacing must be positive");
  ExtensionSamples out;
  out.dim = mesh.dim;
  out.spacing = spacing;
  for_each_row(mesh.dim, R, spacing, [&](Real t, Real x2, int jmax) {
    for (int j = -jmax; j <= jmax; ++j) {
      Point x(mesh.dim);
      x[0] = j * spacing;
      if (mesh.dim == 2) x[1] = x2;
      out.t.push_back(t);
      out.x.push_back(x);
      out.values.push_back(extension_at(mesh, profile, t, x));
    }
  });
  return out;
}

ExtensionSamples extension_operator(const SpectralField& profile, Real R, Real spacing) {
  FrequencyMesh mesh = unit_ball_mesh(profile.grid());
  return extension_operator(mesh, restrict_profile(profile, mesh), R, spacing);
}

CapPartition partition_caps(const FrequencyMesh& mesh, Real R) {
  check_dim(mesh.dim);
  if (!(R >= 1)) throw DomainError("caps: R must be >= 1");
  CapPartition caps;
  caps.per_axis = static_cast<int>(std::ceil(2 * std::sqrt(R) - 1e-12));
  const Real side = 2.0 / caps.per_axis;
  std::vector<int> raw(mesh.nodes.size());
  for (std::size_t v = 0; v < mesh.nodes.size(); ++v) {
    int flat = 0;
    for (int a = 0; a < mesh.dim; ++a) {
      int c = static_cast<int>(std::floor((mesh.nodes[v][a] + 1) / side));
      flat = flat * caps.per_axis + std::clamp(c, 0, caps.per_axis - 1);
    }
    raw[v] = flat;
  }
  std::vector<int> used = raw;
  std::sort(used.begin(), used.end());
  used.erase(std::unique(used.begin(), used.end()), used.end());
  caps.count = static_cast<int>(used.size());
  caps.cap_of_node.resize(raw.size());
  for (std::size_t v = 0; v < raw.size(); ++v)
    caps.cap_of_node[v] = static_cast<int>(std::lower_bound(used.begin(), used.end(), raw[v]) - used.begin());
  return caps;
}

ExtensionPowers extension_lp_powers(const FrequencyMesh& mesh, std::span<const Complex> profile,
                                    const CapPartition& caps, Real R, Real spacing, Real p) {
  check_dim(mesh.dim);
  check_profile(mesh, profile);
  if (caps.cap_of_node.size() != mesh.nodes.size()) throw DomainError("caps do not match the mesh");
  if (!(R >= 4)) throw DomainError("extension operator: R must be >= 4");
  if (!(p >= 1) || std::isinf(p)) throw DomainError("extension operator: need finite p >= 1");

  // nodes grouped by cap so each cap sum is a contiguous range
  const std::size_t V = mesh.nodes.size();
  std::vector<std::size_t> order(V);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return caps.cap_of_node[a] < caps.cap_of_node[b]; });
  std::vector<std::size_t> start(static_cast<std::size_t>(caps.count) + 1, 0);
  for (std::size_t v = 0; v < V; ++v) ++start[static_cast<std::size_t>(caps.cap_of_node[v]) + 1];
  for (int c = 0; c < caps.count; ++c) start[c + 1] += start[c];

  std::vector<Real> xi1(V), xi2(V, 0.0), xisq(V), rr(V), ri(V), ar(V), ai(V);
  std::vector<Complex> amp(V);
  for (std::size_t v = 0; v < V; ++v) {
    const Point& xi = mesh.nodes[order[v]];
    xi1[v] = xi[0];
    if (mesh.dim == 2) xi2[v] = xi[1];
    xisq[v] = xi.squaredNorm();
    rr[v] = std::cos(spacing * xi1[v]);
    ri[v] = std::sin(spacing * xi1[v]);
    amp[v] = mesh.weight() * profile[order[v]];
  }

  ExtensionPowers out;
  out.caps.assign(static_cast<std::size_t>(caps.count), 0.0);
  for_each_row(mesh.dim, R, spacing, [&](Real t, Real x2, int jmax) {
    const Real x1 = -jmax * spacing;
    for (std::size_t v = 0; v < V; ++v) {
      const Complex a = amp[v] * std::polar(1.0, t * xisq[v] + x2 * xi2[v] + x1 * xi1[v]);
      ar[v] = a.real();
      ai[v] = a.imag();
    }
    for (int j = -jmax; j <= jmax; ++j) {
      Real tr = 0, ti = 0;
      for (int c = 0; c < caps.count; ++c) {
        Real sr = 0, si = 0;
        for (std::size_t v = start[c]; v < start[c + 1]; ++v) {
          sr += ar[v];
          si += ai[v];
          const Real nr = ar[v] * rr[v] - ai[v] * ri[v];
          ai[v] = ar[v] * ri[v] + ai[v] * rr[v];
          ar[v] = nr;
        }
        out.caps[c] += abs_pow(sr * sr + si * si, p);
        tr += sr;
        ti += si;
      }
      out.total += abs_pow(tr * tr + ti * ti, p);
      ++out.samples;
    }
  });
  const Real vol = std::pow(spacing, mesh.dim + 1);
  out.total *= vol;
  for (auto& c : out.caps) c *= vol;
  return out;
}

}  // namespace modnls
