#include "ottv/restoration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#include "ottv/errors.hpp"

namespace ottv {

namespace {

double l2(const ScalarField& a) { return std::sqrt(norms(a).l2sq); }

ScalarField apply_kernel(const std::optional<Kernel>& k, const ScalarField& u) {
  return k ? convolve(*k, u) : u;
}

double relative_change(const ScalarField& next, const ScalarField& prev, double floor = 0.0) {
  const double change = l2(next - prev);
  const double scale = std::max(l2(next), floor);
  if (change == 0.0) return 0.0;
  return scale > 0.0 ? change / scale : std::numeric_limits<double>::infinity();
}

// Mean-zero slack for a texture with an approximate flux: |sum v| <= sqrt(n^2) |v - div m|.
double mass_slack(const ScalarField& v, const VectorField& flux) {
  const double n = static_cast<double>(v.n());
  return n * l2(v - div_dirichlet(flux)) + 1e-9 * std::max(1.0, norms(v).one_two);
}

bool carries_flux(const Decomposition& d) { return d.flux.x.size() > 0 && norms(d.flux).one_two > 0.0; }

// Settings for standalone transport-norm evaluations. The pinned-texture
// iteration tolerates a large dual step, and eps is taken relative to |v|^2.
PdhgConfig norm_config(const ScalarField& v) {
  PdhgConfig cfg;
  cfg.tau = 16.0;
  const double h = v.h();
  cfg.eps = 1e-8 * h * h * std::max(norms(v).l2sq, 1e-300);
  cfg.max_iters = 200000;
  return cfg;
}

// Unit normal deviates via Box-Muller over mt19937_64, so the stream is
// identical across standard library implementations.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : engine_(seed) {}

  double next() {
    if (cached_) {
      cached_ = false;
      return spare_;
    }
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * 3.14159265358979323846 * u2;
    spare_ = radius * std::sin(angle);
    cached_ = true;
    return radius * std::cos(angle);
  }

 private:
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::mt19937_64 engine_;
  bool cached_ = false;
  double spare_ = 0.0;
};

}  // namespace

void ModelSpec::validate() const {
  if (!(fidelity_alpha > 0.0)) throw std::invalid_argument("model: alpha must be positive");
  if (variant == Variant::OTTV && !(transport_lambda > 0.0)) {
    throw std::invalid_argument("model: lambda must be positive for OTTV");
  }
  if (variant == Variant::MTV_BASELINE && regularizer.kind != Regularizer::Kind::MTV) {
    throw std::invalid_argument("model: MTV baseline needs an MTV regularizer");
  }
  if (effective_regularizer().kind == Regularizer::Kind::MTV && !(regularizer.a > 0.0)) {
    throw std::invalid_argument("model: MTV threshold a must be positive");
  }
}

Regularizer ModelSpec::effective_regularizer() const {
  return variant == Variant::ROF ? Regularizer::tv() : regularizer;
}

PdhgConfig RestoreOptions::pdhg_config(const ModelSpec& spec) const {
  PdhgConfig cfg;
  cfg.tau = pdhg_tau;
  cfg.alpha = spec.fidelity_alpha;
  cfg.lambda = spec.transport_lambda;
  cfg.eps = pdhg_eps;
  cfg.max_iters = pdhg_max_iters;
  return cfg;
}

AlmConfig RestoreOptions::alm_config(const ModelSpec& spec) const {
  AlmConfig cfg;
  cfg.alpha = spec.fidelity_alpha;
  cfg.r = alm_r;
  cfg.regularizer = spec.effective_regularizer();
  cfg.kernel = spec.kernel;
  cfg.tol_u = alm_tol_u;
  cfg.tol_res = alm_tol_res;
  cfg.max_iters = alm_max_iters;
  return cfg;
}

ScalarField Decomposition::blurred_u() const { return apply_kernel(kernel, u); }

ScalarField Decomposition::w() const {
  ScalarField out = f - blurred_u();
  out -= v;
  return out;
}

namespace {

// With `trust_flux` the stored flux is taken as the transport certificate even
// when it has shrunk to zero, which avoids a standalone transport solve.
EnergyTerms energy_terms(const ScalarField& f, const Decomposition& d, const ModelSpec& spec, bool trust_flux) {
  if (!f.same_grid(d.u) || !f.same_grid(d.v)) throw ShapeError("total_energy: grid mismatch");
  EnergyTerms t;
  t.regularizer = spec.effective_regularizer().evaluate(grad_periodic(d.u));
  ScalarField w = f - apply_kernel(spec.kernel, d.u);
  w -= d.v;
  t.fidelity = 0.5 * spec.fidelity_alpha * norms(w).l2sq;

  const double lambda = spec.variant == Variant::OTTV ? spec.transport_lambda : 0.0;
  const double mass = std::abs(d.v.sum());
  if (carries_flux(d) || (trust_flux && d.flux.x.same_grid(d.v))) {
    if (mass > mass_slack(d.v, d.flux)) throw std::invalid_argument("total_energy: texture is not mean-zero");
    const double flux_norm = norms(d.flux).one_two;
    t.transport = lambda * flux_norm;
    t.transport_lagrangian = t.transport;
    if (d.potential.same_grid(d.v)) {
      t.transport_lagrangian += lambda * inner(div_dirichlet(d.flux) - d.v, d.potential);
    }
  } else if (norms(d.v).l2sq > 0.0) {
    if (mass > 1e-9 * std::max(1.0, norms(d.v).one_two)) {
      throw std::invalid_argument("total_energy: texture is not mean-zero");
    }
    ScalarField balanced = d.v;
    balanced += -balanced.mean();
    t.transport = lambda * dual_lipschitz_norm(balanced, norm_config(balanced));
    t.transport_lagrangian = t.transport;
  }
  t.total = t.regularizer + t.fidelity + t.transport;
  return t;
}

}  // namespace

EnergyTerms total_energy(const ScalarField& f, const Decomposition& d, const ModelSpec& spec) {
  return energy_terms(f, d, spec, false);
}

Decomposition restore(const ScalarField& f, const ModelSpec& spec, const RestoreOptions& opts) {
  spec.validate();
  if (!f.all_finite()) throw std::invalid_argument("restore: non-finite input");
  if (spec.kernel && spec.kernel->n() != f.n()) throw ShapeError("restore: kernel size does not match the image");

  const std::size_t n = f.n();
  const double h = f.h();
  const AlmConfig alm_cfg = opts.alm_config(spec);

  Decomposition d;
  d.f = f;
  d.kernel = spec.kernel;
  d.u = f;
  d.v = ScalarField(n, h);
  d.flux = VectorField(n, h);
  d.potential = ScalarField(n, h);

  if (spec.variant != Variant::OTTV) {
    AlmResult alm = alm_solve(f, alm_cfg);
    const double rel_u = relative_change(alm.state.u, d.u);
    d.u = std::move(alm.state.u);
    d.alm = std::move(alm.trace);
    d.outer_iterations = 1;
    d.total_alm_iterations = alm.state.iterations;
    d.converged = alm.converged;
    d.terms = total_energy(f, d, spec);
    d.outer.add({1.0, rel_u, 0.0, d.terms.total, 0.0, static_cast<double>(alm.state.iterations)});
    return d;
  }

  const PdhgConfig pdhg_cfg = opts.pdhg_config(spec);
  std::optional<W1State> pdhg_state;
  std::optional<AlmState> alm_state;

  for (std::size_t outer = 1; outer <= opts.max_outer; ++outer) {
    const ScalarField f1 = f - apply_kernel(spec.kernel, d.u);
    PdhgResult pd = solve_v_subproblem(f1, pdhg_cfg, pdhg_state ? &*pdhg_state : nullptr);

    const ScalarField f2 = f - pd.state.v;
    AlmResult al = alm_solve(f2, alm_cfg, alm_state ? &*alm_state : nullptr);

    const double rel_u = relative_change(al.state.u, d.u);
    // v is a part of f1, so its change is measured against |f1| once v itself
    // is negligible (large lambda drives v to zero).
    const double rel_v = relative_change(pd.state.v, d.v, l2(f1));
    d.u = al.state.u;
    d.v = pd.state.v;
    d.flux = pd.state.m;
    d.potential = pd.state.phi;
    d.pdhg = std::move(pd.trace);
    d.alm = std::move(al.trace);
    d.outer_iterations = outer;
    d.total_pdhg_iterations += pd.state.iterations;
    d.total_alm_iterations += al.state.iterations;
    d.terms = energy_terms(f, d, spec, true);
    d.outer.add({static_cast<double>(outer), rel_u, rel_v, d.terms.total, static_cast<double>(pd.state.iterations),
                 static_cast<double>(al.state.iterations)});

    pdhg_state = std::move(pd.state);
    alm_state = std::move(al.state);
    if (rel_u <= opts.outer_tol && rel_v <= opts.outer_tol) {
      d.converged = true;
      break;
    }
  }
  return d;
}

OptimalityReport optimality_report(const ScalarField& f, const Decomposition& d, const ModelSpec& spec,
                                   std::size_t probes, std::uint64_t seed) {
  const double alpha = spec.fidelity_alpha;
  const double lambda = spec.variant == Variant::OTTV ? spec.transport_lambda : 0.0;
  const Regularizer reg = Regularizer::tv();
  const ScalarField w = f - apply_kernel(spec.kernel, d.u) - d.v;
  const ScalarField kw = spec.kernel ? convolve_adjoint(*spec.kernel, w) : w;

  const double tv_u = reg.evaluate(grad_periodic(d.u));
  const double lip_v = carries_flux(d) ? norms(d.flux).one_two : 0.0;

  OptimalityReport report;
  {
    const double rhs = tv_u + lambda * lip_v;
    const double lhs = alpha * (inner(kw, d.u) + inner(w, d.v));
    report.pairing_gap = rhs > 0.0 ? std::abs(lhs - rhs) / rhs : std::abs(lhs);
  }

  double worst = -std::numeric_limits<double>::infinity();
  auto probe = [&](const ScalarField& g, double g_bv, const ScalarField& hh, double h_lip) {
    const double denom = g_bv + lambda * h_lip;
    if (!(denom > 0.0)) return;
    worst = std::max(worst, alpha * (inner(kw, g) + inner(w, hh)) / denom - 1.0);
    ++report.probes;
  };

  const ScalarField zero(f.n(), f.h());
  if (probes > 0) probe(d.u, tv_u, d.v, lip_v);
  if (probes > 1) probe(d.u, tv_u, zero, 0.0);
  if (probes > 2 && lambda > 0.0) probe(zero, 0.0, d.v, lip_v);

  NormalStream normal(seed);
  const Kernel smoother = Kernel::gaussian(f.n(), std::max(1.0, static_cast<double>(f.n()) / 16.0), f.h());
  const double scale = std::max(l2(d.u), 1e-12) / static_cast<double>(f.n());
  for (std::size_t k = 3; k < probes; ++k) {
    ScalarField g(f.n(), f.h());
    ScalarField hh(f.n(), f.h());
    for (std::size_t q = 0; q < g.size(); ++q) g[q] = normal.next();
    for (std::size_t q = 0; q < hh.size(); ++q) hh[q] = normal.next();
    g = convolve(smoother, g);
    g *= scale / std::max(l2(g) / static_cast<double>(f.n()), 1e-300);
    hh += -hh.mean();
    hh *= scale / std::max(l2(hh) / static_cast<double>(f.n()), 1e-300);
    hh += -hh.mean();
    double h_lip = 0.0;
    if (lambda > 0.0) {
      const PdhgResult flux = solve_flux(hh, norm_config(hh));
      h_lip = kantorovich_lower_bound(hh, flux.state.phi);
    } else {
      hh = zero;
    }
    probe(g, reg.evaluate(grad_periodic(g)), hh, h_lip);
  }
  report.dual_bound_violation = report.probes > 0 ? worst : 0.0;
  return report;
}

CalibrationResult calibrate_residual_norm(const ScalarField& f, const ModelSpec& spec, double target,
                                          CalibrationKnob knob, const RestoreOptions& opts, double rel_tol) {
  if (!(target > 0.0)) throw CalibrationError("calibration: target residual must be positive");
  if (knob == CalibrationKnob::LAMBDA && spec.variant != Variant::OTTV) {
    throw std::invalid_argument("calibration: lambda is only a knob for the OTTV model");
  }

  CalibrationResult out{spec, 0.0, 0};
  auto knob_ref = [&](ModelSpec& s) -> double& {
    return knob == CalibrationKnob::ALPHA ? s.fidelity_alpha : s.transport_lambda;
  };
  auto residual_at = [&](double value) {
    ModelSpec s = spec;
    knob_ref(s) = value;
    ++out.evaluations;
    const Decomposition d = restore(f, s, opts);
    return l2(f - d.blurred_u());
  };
  auto accept = [&](double value, double residual) {
    knob_ref(out.spec) = value;
    out.residual_norm = residual;
    return out;
  };

  // The removed-noise norm decreases as either knob grows.
  double lo = knob_ref(out.spec);
  double r_lo = residual_at(lo);
  if (std::abs(r_lo - target) <= rel_tol * target) return accept(lo, r_lo);
  double hi = lo;
  double r_hi = r_lo;
  constexpr int kMaxExpansions = 12;
  constexpr double kFactor = 4.0;
  int expansions = 0;
  // A fourfold knob change that moves the residual by a negligible amount
  // means the knob has saturated (e.g. lambda large enough that v = 0).
  const auto saturated = [&](double before, double after) {
    return std::abs(after - before) <= 1e-3 * rel_tol * target;
  };
  if (r_lo > target) {
    while (r_hi > target) {
      if (++expansions > kMaxExpansions) throw CalibrationError("calibration: target below achievable residual");
      lo = hi;
      r_lo = r_hi;
      hi *= kFactor;
      r_hi = residual_at(hi);
      if (r_hi > target && saturated(r_lo, r_hi)) {
        throw CalibrationError("calibration: target below achievable residual (saturates at " +
                               std::to_string(r_hi) + ")");
      }
    }
  } else {
    while (r_lo < target) {
      if (++expansions > kMaxExpansions) throw CalibrationError("calibration: target above achievable residual");
      hi = lo;
      r_hi = r_lo;
      lo /= kFactor;
      r_lo = residual_at(lo);
      if (r_lo < target && saturated(r_hi, r_lo)) {
        throw CalibrationError("calibration: target above achievable residual (saturates at " +
                               std::to_string(r_lo) + ")");
      }
    }
  }
  for (const auto& [value, residual] : {std::pair{lo, r_lo}, std::pair{hi, r_hi}}) {
    if (std::abs(residual - target) <= rel_tol * target) return accept(value, residual);
  }

  constexpr int kMaxBisections = 20;
  double best = lo;
  double r_best = r_lo;
  for (int step = 0; step < kMaxBisections; ++step) {
    const double mid = std::sqrt(lo * hi);
    const double r_mid = residual_at(mid);
    if (std::abs(r_mid - target) < std::abs(r_best - target)) {
      best = mid;
      r_best = r_mid;
    }
    if (std::abs(r_mid - target) <= rel_tol * target) break;
    if (r_mid > target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return accept(best, r_best);
}

double psnr(const ScalarField& u, const ScalarField& reference) {
  if (!u.same_grid(reference)) throw ShapeError("psnr: grid mismatch");
  const double mse = norms(u - reference).l2sq / static_cast<double>(u.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

ScalarField add_gaussian_noise(const ScalarField& u, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("add_gaussian_noise: sigma must be >= 0");
  if (sigma == 0.0) return u;
  NormalStream normal(seed);
  ScalarField out = u;
  for (std::size_t k = 0; k < out.size(); ++k) out[k] += sigma * normal.next();
  return out;
}

}  // namespace ottv
