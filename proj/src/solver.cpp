#include "modnls/solver.hpp"

#include "modnls/propagator.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <sstream>

namespace modnls {

Real default_power(int d) {
  switch (d) {
    case 1: return 4;
    case 2: return 2;
    case 3: return 4;
    case 4: return 2;
  }
  throw DomainError("solver: dimension must be 1..4");
}

NLSProblem make_problem(Field u0, int sign, Real horizon, int nodes) {
  NLSProblem pb{std::move(u0)};
  pb.kappa = default_power(pb.u0.grid().dim());
  pb.sign = sign;
  pb.horizon = horizon;
  pb.nodes = nodes;
  validate(pb);
  return pb;
}

void validate(const NLSProblem& pb) {
  if (pb.kappa != default_power(pb.u0.grid().dim()))
    throw DomainError("solver: power must be 4 (d=1), 2 (d=2) or 4/(d-2) (d=3,4)");
  if (pb.sign < -1 || pb.sign > 1) throw DomainError("solver: sign must be -1, 0 or +1");
  if (!(pb.horizon > 0) || !std::isfinite(pb.horizon)) throw DomainError("solver: horizon must be positive");
  if (pb.nodes < 16) throw DomainError("solver: need at least 16 time nodes");
  if (!pb.u0.values().allFinite()) throw DomainError("solver: initial data not finite");
}

Field nonlinearity(const Field& f, Real kappa, int sign) {
  if (!(kappa > 0)) throw DomainError("nonlinearity: kappa must be positive");
  Field out(f.grid());
  out.values() = Real(sign) * f.values().abs().pow(kappa) * f.values();
  return out;
}

IterationNorm parse_iteration_norm(const std::string& name) {
  if (name == "strichartz") return IterationNorm::strichartz;
  if (name == "modulation") return IterationNorm::modulation;
  if (name == "ys") return IterationNorm::ys;
  throw DomainError("unknown iteration norm '" + name + "'");
}

std::string iteration_norm_name(IterationNorm n) {
  switch (n) {
    case IterationNorm::strichartz: return "strichartz";
    case IterationNorm::modulation: return "modulation";
    case IterationNorm::ys: return "ys";
  }
  return "?";
}

namespace {

using Observer = std::function<void(int, const std::vector<Field>&)>;

class PathNorm {
 public:
  PathNorm(const Grid& g, IterationNorm kind, Real s, Real kappa, std::vector<Real> times)
      : kind_(kind), s_(s), kappa_(kappa), times_(std::move(times)) {
    if (kind != IterationNorm::strichartz) window_ = std::make_shared<Window>(g);
  }

  Real operator()(const std::vector<Field>& u) const {
    Real out = 0;
    switch (kind_) {
      case IterationNorm::strichartz:
        for (const auto& f : u) out = std::max(out, lp_norm(f, 2));
        return out + spacetime_lp_norm(times_, u, kappa_ + 2);
      case IterationNorm::modulation:
        for (const auto& f : u) out = std::max(out, modulation_norm(f, {s_, 4, 2}, *window_));
        return out;
      case IterationNorm::ys:
        return ys_norm(SampledPath{times_, u, ValueNorm::modulation({0, 4, 2}, *window_)}, s_, *window_);
    }
    return out;
  }

 private:
  IterationNorm kind_;
  Real s_, kappa_;
  std::vector<Real> times_;
  std::shared_ptr<Window> window_;
};

std::vector<Field> difference(const std::vector<Field>& a, const std::vector<Field>& b) {
  std::vector<Field> out;
  out.reserve(a.size());
  for (std::size_t j = 0; j < a.size(); ++j) out.push_back(a[j] - b[j]);
  return out;
}

Real relative_drift(const std::vector<Field>& u, const std::function<Real(const Field&)>& q) {
  const Real q0 = q(u.front());
  Real worst = 0;
  for (const auto& f : u) worst = std::max(worst, std::abs(q(f) - q0));
  return q0 != 0 ? worst / std::abs(q0) : worst;
}

void conservation(SolverReport& rep, const std::vector<Field>& u, const NLSProblem& pb) {
  rep.mass_drift = relative_drift(u, [](const Field& f) { return mass(f); });
  if (pb.sign != 0)
    rep.energy_drift = relative_drift(u, [&](const Field& f) { return energy(f, pb.kappa, pb.sign); });
}

Solution picard_impl(const NLSProblem& pb, const PicardOptions& opt, const Observer& observe) {
  validate(pb);
  if (opt.max_iters < 1) throw DomainError("picard: max_iters must be >= 1");
  if (!(opt.tol >= 0)) throw DomainError("picard: tol must be nonnegative");
  const Grid& g = pb.u0.grid();
  const std::vector<Real> times = TimeGrid(0, pb.horizon, pb.nodes).nodes();
  const PathNorm norm(g, opt.norm, opt.s, pb.kappa, times);

  std::vector<Field> free;
  free.reserve(times.size());
  {
    const SpectralField U0 = to_spectrum(pb.u0);
    for (Real t : times) free.push_back(from_spectrum(free_evolve(U0, t)));
  }
  std::vector<Field> cur = opt.start == InitialIterate::free ? free : std::vector<Field>(times.size(), Field(g));
  if (observe) observe(0, cur);
  // tolerances are relative to the free evolution, measured once
  const Real scale = norm(free);

  SolverReport rep;
  rep.norm = opt.norm;
  const Complex minus_i(0, -1);
  int climbing = 0;
  for (int it = 1; it <= opt.max_iters; ++it) {
    std::vector<Field> forcing;
    forcing.reserve(cur.size());
    for (const auto& f : cur) forcing.push_back(nonlinearity(f, pb.kappa, pb.sign));
    const auto duh = duhamel_all(times, forcing);
    std::vector<Field> next;
    next.reserve(cur.size());
    for (std::size_t j = 0; j < cur.size(); ++j) next.push_back(free[j] + minus_i * duh[j]);

    const Real inc = norm(difference(next, cur));
    rep.iterates = it;
    rep.increments.push_back(inc);
    rep.residual = scale > 0 ? inc / scale : inc;
    if (rep.increments.size() >= 2 && rep.increments[rep.increments.size() - 2] > 0 && inc > 0)
      rep.factors.push_back(inc / rep.increments[rep.increments.size() - 2]);
    cur = std::move(next);
    if (observe) observe(it, cur);

    if (!std::isfinite(inc)) {
      rep.diverged = true;
      break;
    }
    if (inc <= opt.tol * scale) {
      rep.converged = true;
      break;
    }
    if (!rep.factors.empty() && rep.factors.back() >= 1) {
      if (++climbing >= 3) {
        rep.diverged = true;
        break;
      }
    } else {
      climbing = 0;
    }
  }
  if (!rep.diverged) conservation(rep, cur, pb);
  return {SampledPath{times, std::move(cur), ValueNorm::lebesgue(2)}, std::move(rep)};
}

Real rel_l2(const Field& a, const Field& b) {
  const Real ref = std::max(lp_norm(a, 2), lp_norm(b, 2));
  const Real gap = lp_norm(a - b, 2);
  return ref > 0 ? gap / ref : gap;
}

}  // namespace

Solution picard_solve(const NLSProblem& pb, const PicardOptions& opt) { return picard_impl(pb, opt, nullptr); }

SplitStepResult splitstep_solve(const NLSProblem& pb, Real dt) {
  validate(pb);
  if (!(dt > 0) || dt > pb.horizon / 64 * (1 + 1e-12)) throw DomainError("splitstep: need 0 < dt <= T/64");
  const Grid& g = pb.u0.grid();
  const TimeGrid tg(0, pb.horizon, pb.nodes);
  const int per = static_cast<int>(std::ceil(tg.step() / dt - 1e-9));

  SplitStepResult res;
  res.dt = tg.step() / per;
  res.steps = per * (pb.nodes - 1);
  res.path.times = tg.nodes();
  res.path.values.reserve(static_cast<std::size_t>(pb.nodes));

  const CArray symbol = free_symbol(g, res.dt);
  const Real half = 0.5 * res.dt * pb.sign;
  auto rotate = [&](CArray& v) {
    if (pb.sign == 0) return;
    v *= (Complex(0, -half) * v.abs().pow(pb.kappa)).exp();
  };

  Field u = pb.u0;
  const Real cap = 1e6 * u.values().abs().maxCoeff();
  const Real m0 = mass(u);
  const Real e0 = pb.sign != 0 ? energy(u, pb.kappa, pb.sign) : 0;
  res.path.values.push_back(u);
  for (int node = 1; node < pb.nodes; ++node) {
    for (int k = 0; k < per; ++k) {
      rotate(u.values());
      SpectralField U = to_spectrum(u);
      U.coefficients() *= symbol;
      u = from_spectrum(U);
      rotate(u.values());
      const Real peak = u.values().abs().maxCoeff();
      if (!std::isfinite(peak) || peak > cap) {
        std::ostringstream os;
        os << "splitstep: |u|_inf = " << peak << " exceeds 1e6 x initial at t = "
           << tg.node(node - 1) + (k + 1) * res.dt;
        throw BlowUp(os.str());
      }
      const Real dm = std::abs(mass(u) - m0);
      res.mass_drift = std::max(res.mass_drift, m0 > 0 ? dm / m0 : dm);
    }
    if (pb.sign != 0) {
      const Real de = std::abs(energy(u, pb.kappa, pb.sign) - e0);
      res.energy_drift = std::max(res.energy_drift, e0 != 0 ? de / std::abs(e0) : de);
    }
    res.path.values.push_back(u);
  }
  return res;
}

CrossValidation cross_validate(const NLSProblem& pb, Real dt, const PicardOptions& opt, Real tol) {
  CrossValidation cv;
  cv.tol = tol;
  const Solution pic = picard_solve(pb, opt);
  cv.split = splitstep_solve(pb, dt);
  cv.picard = pic.report;
  if (!pic.report.converged) return cv;
  cv.distance = rel_l2(pic.path.values.back(), cv.split.path.values.back());
  cv.pass = cv.distance <= tol;

  // convergence history: halve each resolution in turn against the other's fine run
  NLSProblem coarse = pb;
  coarse.nodes = (pb.nodes - 1) / 2 + 1;
  if (coarse.nodes >= 16) {
    const Solution pc = picard_solve(coarse, opt);
    if (pc.report.converged) cv.picard_coarse = rel_l2(pc.path.values.back(), cv.split.path.values.back());
  }
  if (2 * dt <= pb.horizon / 64 * (1 + 1e-12))
    cv.split_coarse = rel_l2(pic.path.values.back(), splitstep_solve(pb, 2 * dt).path.values.back());
  return cv;
}

Certificate plan_cutoff(const Field& u0, const LargeDataOptions& opt, const Window& w) {
  const int d = u0.grid().dim();
  if (d != 3 && d != 4) throw DomainError("large data: d must be 3 or 4");
  if (!(opt.c0 > 0) || !(opt.c1 > 0)) throw DomainError("large data: constants must be positive");
  Certificate c;
  c.s = opt.s;
  c.c0 = opt.c0;
  c.c1 = opt.c1;
  const ModNormSpec spec{opt.s, 4, 2};
  c.A = modulation_norm(u0, spec, w);
  if (!std::isfinite(c.A)) throw DomainError("large data: modulation norm of the data is not finite");
  const Real e = d - 2.0;
  c.delta = c.A > 0 ? opt.c0 * std::pow(c.A, -(6 - d) / e) : std::numeric_limits<Real>::infinity();
  c.N = 1;
  while (modulation_norm(high_project(u0, c.N), spec, w) > c.delta) c.N *= 2;
  const Real N = c.N;
  const Real bound = c.A > 0 ? opt.c1 * std::min(std::pow(N, -6 / e), std::pow(N, -2 * d / e)) * std::pow(c.A, -4 / e)
                             : std::numeric_limits<Real>::infinity();
  c.T = std::min<Real>(1, bound);
  return c;
}

Solution large_data_protocol(const NLSProblem& pb, const LargeDataOptions& opt) {
  validate(pb);
  const Window w(pb.u0.grid());
  Certificate cert = plan_cutoff(pb.u0, opt, w);
  cert.T = std::min(cert.T, pb.horizon);
  NLSProblem sub = pb;
  sub.horizon = cert.T;
  PicardOptions po = opt.picard;
  po.s = opt.s;

  const ModNormSpec spec{opt.s, 4, 2};
  auto check = [&](int it, const std::vector<Field>& u) {
    Real total = 0, tail = 0;
    for (const auto& f : u) {
      total = std::max(total, modulation_norm(f, spec, w));
      tail = std::max(tail, modulation_norm(high_project(f, cert.N), spec, w));
    }
    cert.totals.push_back(total);
    cert.tails.push_back(tail);
    std::ostringstream os;
    if (!(total <= 2 * cert.A))
      os << "iterate " << it << ": |u| = " << total << " > 2A = " << 2 * cert.A;
    else if (!(tail <= 2 * cert.delta))
      os << "iterate " << it << ": |P_{>" << cert.N << "} u| = " << tail << " > 2 delta = " << 2 * cert.delta;
    else
      return;
    throw CertificateViolation(os.str());
  };
  Solution sol = picard_impl(sub, po, check);
  if (!sol.report.converged)
    throw SolverError(sol.report.diverged ? "large data: Picard iteration diverged inside the ball"
                                          : "large data: Picard iteration did not reach tolerance");
  cert.holds = true;
  sol.report.certificate = std::move(cert);
  return sol;
}

}  // namespace modnls
