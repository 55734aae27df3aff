#include "ottv/w1_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "ottv/errors.hpp"
#include "ottv/prox.hpp"

namespace ottv {

namespace {

constexpr double kMassTolerance = 1e-9;
constexpr double kBlowupFactor = 1e6;

enum class TextureMode { Update, Fixed };

// Zero-flux backward difference of the field given by `at` at (i, j).
template <class AtX, class AtY>
double dirichlet_div_at(const AtX& at_x, const AtY& at_y, std::size_t n, std::size_t i, std::size_t j) {
  double dx;
  if (i == 0) {
    dx = at_x(0, j);
  } else if (i == n - 1) {
    dx = -at_x(n - 2, j);
  } else {
    dx = at_x(i, j) - at_x(i - 1, j);
  }
  double dy;
  if (j == 0) {
    dy = at_y(i, 0);
  } else if (j == n - 1) {
    dy = -at_y(i, n - 2);
  } else {
    dy = at_y(i, j) - at_y(i, j - 1);
  }
  return dx + dy;
}

PdhgResult run_pdhg(const ScalarField& f1, const PdhgConfig& cfg, const W1State* warm, TextureMode mode) {
  const std::size_t n = f1.n();
  const double h = f1.h();
  cfg.validate(h);
  if (!f1.all_finite()) throw std::invalid_argument("PDHG: non-finite input");

  const double tau = cfg.tau;
  const double mu = cfg.flux_step(h);
  const double nu = cfg.texture_step();
  const double alpha = cfg.alpha;
  const double lambda = mode == TextureMode::Fixed ? 1.0 : cfg.lambda;
  const double eps = cfg.tolerance(h);
  const double inv_h = 1.0 / h;
  const double threshold = mu * lambda;

  PdhgResult result;
  W1State& s = result.state;
  if (warm != nullptr) {
    if (!warm->v.same_grid(f1)) throw ShapeError("PDHG: warm state on a different grid");
    s = *warm;
  } else {
    s = W1State(n, h);
  }
  if (mode == TextureMode::Fixed) s.v = f1;
  s.iterations = 0;

  double* mx = s.m.x.values().data();
  double* my = s.m.y.values().data();
  double* v = s.v.values().data();
  double* phi = s.phi.values().data();
  double* mxp = s.m_prev.x.values().data();
  double* myp = s.m_prev.y.values().data();
  double* vp = s.v_prev.values().data();
  double* phip = s.phi_prev.values().data();
  const double* f = f1.values().data();
  const std::size_t count = n * n;

  const double denom_v = alpha + 1.0 / nu;
  const double f1_norm = std::sqrt(norms(f1).l2sq);
  double min_residual = std::numeric_limits<double>::infinity();

  for (std::size_t it = 1; it <= cfg.max_iters; ++it) {
    std::copy(mx, mx + count, mxp);
    std::copy(my, my + count, myp);
    std::copy(v, v + count, vp);
    std::copy(phi, phi + count, phip);

    // Flux: shrink(m + mu grad phi; mu lambda), grad the negative adjoint of div.
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const std::size_t k = i * n + j;
        const double gx = i + 1 < n ? (phip[k + n] - phip[k]) * inv_h : 0.0;
        const double gy = j + 1 < n ? (phip[k + 1] - phip[k]) * inv_h : 0.0;
        const double zx = mxp[k] + mu * gx;
        const double zy = myp[k] + mu * gy;
        const double mag = std::sqrt(zx * zx + zy * zy);
        const double scale = mag > threshold ? 1.0 - threshold / mag : 0.0;
        mx[k] = scale * zx;
        my[k] = scale * zy;
      }
    }

    // Texture: closed-form proximal step against the potential at iterate k.
    if (mode == TextureMode::Update) {
      for (std::size_t k = 0; k < count; ++k) v[k] = (vp[k] / nu + alpha * f[k] + phip[k]) / denom_v;
    }

    // Potential ascent on the extrapolated pair.
    const auto bar_x = [&](std::size_t i, std::size_t j) { return 2.0 * mx[i * n + j] - mxp[i * n + j]; };
    const auto bar_y = [&](std::size_t i, std::size_t j) { return 2.0 * my[i * n + j] - myp[i * n + j]; };
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const std::size_t k = i * n + j;
        const double div_bar = dirichlet_div_at(bar_x, bar_y, n, i, j) * inv_h;
        phi[k] = phip[k] + tau * (div_bar - (2.0 * v[k] - vp[k]));
      }
    }
    s.iterations = it;

    // Fixed-point residual and constraint diagnostics.
    const auto dx_at = [&](std::size_t i, std::size_t j) { return mx[i * n + j] - mxp[i * n + j]; };
    const auto dy_at = [&](std::size_t i, std::size_t j) { return my[i * n + j] - myp[i * n + j]; };
    const auto mx_at = [&](std::size_t i, std::size_t j) { return mx[i * n + j]; };
    const auto my_at = [&](std::size_t i, std::size_t j) { return my[i * n + j]; };
    double dm2 = 0.0, dv2 = 0.0, dphi2 = 0.0, coupling = 0.0;
    double gap2 = 0.0, spread2 = 0.0, flux_norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const std::size_t k = i * n + j;
        const double ddx = mx[k] - mxp[k];
        const double ddy = my[k] - myp[k];
        const double dv = v[k] - vp[k];
        const double dphi = phi[k] - phip[k];
        dm2 += ddx * ddx + ddy * ddy;
        dv2 += dv * dv;
        dphi2 += dphi * dphi;
        coupling += dphi * (dirichlet_div_at(dx_at, dy_at, n, i, j) * inv_h - dv);
        const double gap = v[k] - dirichlet_div_at(mx_at, my_at, n, i, j) * inv_h;
        gap2 += gap * gap;
        spread2 += (v[k] - f[k]) * (v[k] - f[k]);
        flux_norm += std::sqrt(mx[k] * mx[k] + my[k] * my[k]);
      }
    }
    const double residual = h * h * (dm2 / mu + dv2 / nu + dphi2 / tau - 2.0 * coupling);
    const double gap = std::sqrt(gap2);
    const double spread = std::sqrt(spread2);
    const double ratio = mode == TextureMode::Fixed ? (f1_norm > 0.0 ? gap / f1_norm : gap)
                                                    : (spread > 0.0 ? gap / spread : gap);
    result.trace.add({static_cast<double>(it), residual, ratio, flux_norm});

    if (!std::isfinite(residual) || !std::isfinite(flux_norm)) {
      throw NumericalError("PDHG diverged: non-finite iterate at iteration " + std::to_string(it));
    }
    min_residual = std::min(min_residual, residual);
    if (min_residual > 0.0 && residual > kBlowupFactor * min_residual) {
      throw NumericalError("PDHG diverged: residual grew by 1e6 at iteration " + std::to_string(it));
    }
    if (residual <= eps) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace

double PdhgConfig::step_certificate(double h) const {
  return tau * flux_step(h) * (8.0 / (h * h)) + tau * texture_step();
}

void PdhgConfig::validate(double h) const {
  if (!(tau > 0.0) || !(flux_step(h) > 0.0) || !(texture_step() > 0.0)) {
    throw std::invalid_argument("PDHG: step sizes must be positive");
  }
  if (!(alpha > 0.0) || !(lambda > 0.0)) throw std::invalid_argument("PDHG: alpha and lambda must be positive");
  if (!(tolerance(h) > 0.0)) throw std::invalid_argument("PDHG: eps must be positive");
  if (!(step_certificate(h) < 1.0)) {
    throw std::invalid_argument("PDHG: step sizes violate tau*mu*8/h^2 + tau*nu < 1");
  }
}

W1State::W1State(std::size_t n, double h)
    : m(n, h), v(n, h), phi(n, h), m_prev(n, h), v_prev(n, h), phi_prev(n, h) {}

double pdhg_residual(const W1State& before, const W1State& after, const PdhgConfig& cfg) {
  const double h = after.v.h();
  const VectorField dm = after.m - before.m;
  const ScalarField dv = after.v - before.v;
  const ScalarField dphi = after.phi - before.phi;
  const double coupling = inner(dphi, div_dirichlet(dm) - dv);
  const double value = norms(dm).l2sq / cfg.flux_step(h) + norms(dv).l2sq / cfg.texture_step() +
                       norms(dphi).l2sq / cfg.tau - 2.0 * coupling;
  return h * h * value;
}

PdhgResult solve_v_subproblem(const ScalarField& f1, const PdhgConfig& cfg, const W1State* warm) {
  return run_pdhg(f1, cfg, warm, TextureMode::Update);
}

PdhgResult solve_flux(const ScalarField& target, const PdhgConfig& cfg, const W1State* warm) {
  if (std::abs(target.sum()) > kMassTolerance) {
    throw std::invalid_argument("flux target must have zero mean (|sum| = " + std::to_string(std::abs(target.sum())) +
                                ")");
  }
  return run_pdhg(target, cfg, warm, TextureMode::Fixed);
}

double w1_distance(const ScalarField& mu_field, const ScalarField& nu_field, const PdhgConfig& cfg) {
  if (!mu_field.same_grid(nu_field)) throw ShapeError("w1_distance: grid mismatch");
  const auto negative = [](const ScalarField& f) {
    return std::any_of(f.values().begin(), f.values().end(), [](double x) { return x < 0.0; });
  };
  if (negative(mu_field) || negative(nu_field)) throw std::invalid_argument("w1_distance: negative mass");
  const double mass_a = mu_field.sum();
  const double mass_b = nu_field.sum();
  if (std::abs(mass_a - mass_b) > kMassTolerance * std::max(1.0, std::abs(mass_a))) {
    throw std::invalid_argument("w1_distance: unequal masses " + std::to_string(mass_a) + " vs " +
                                std::to_string(mass_b));
  }
  ScalarField diff = mu_field - nu_field;
  // Strip the rounding residue so the pinned texture is exactly balanced.
  diff += -diff.mean();
  if (norms(diff).l2sq == 0.0) return 0.0;
  return norms(solve_flux(diff, cfg).state.m).one_two;
}

double dual_lipschitz_norm(const ScalarField& v, const PdhgConfig& cfg) {
  if (std::abs(v.sum()) > kMassTolerance) {
    throw std::invalid_argument("dual_lipschitz_norm: input is not mean-zero");
  }
  if (norms(v).l2sq == 0.0) return 0.0;
  return norms(solve_flux(v, cfg).state.m).one_two;
}

double kantorovich_lower_bound(const ScalarField& v, const ScalarField& phi) {
  if (!v.same_grid(phi)) throw ShapeError("kantorovich_lower_bound: grid mismatch");
  const VectorField grad = grad_adjoint_dirichlet(phi);
  double steepest = 0.0;
  for (std::size_t k = 0; k < grad.x.size(); ++k) steepest = std::max(steepest, grad.magnitude(k));
  return std::max(0.0, -inner(v, phi)) / std::max(1.0, steepest);
}

}  // namespace ottv
