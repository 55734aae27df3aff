#include "ottv/tv_solver.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "fft.hpp"
#include "ottv/errors.hpp"

namespace ottv {

namespace {

const Kernel& kernel_for(const AlmConfig& cfg, std::size_t n, double h, std::optional<Kernel>& scratch) {
  if (cfg.kernel) return *cfg.kernel;
  if (!scratch) scratch = Kernel::identity(n, h);
  return *scratch;
}

ScalarField apply_kernel(const AlmConfig& cfg, const ScalarField& u) {
  return cfg.kernel ? convolve(*cfg.kernel, u) : u;
}

ScalarField apply_kernel_adjoint(const AlmConfig& cfg, const ScalarField& u) {
  return cfg.kernel ? convolve_adjoint(*cfg.kernel, u) : u;
}

// Real, positive Fourier symbol of alpha K^T K - r Laplacian on the half spectrum.
class NormalOperator {
 public:
  NormalOperator(const AlmConfig& cfg, std::size_t n, double h) : n_(n), h_(h) {
    std::optional<Kernel> scratch;
    const Kernel& k = kernel_for(cfg, n, h, scratch);
    const double alpha = cfg.alpha;
    const double r = cfg.penalty();
    const std::size_t half = n / 2 + 1;
    symbol_.resize(n * half);
    const double pi_n = std::numbers::pi / static_cast<double>(n);
    for (std::size_t a = 0; a < n; ++a) {
      const double sa = std::sin(pi_n * static_cast<double>(a));
      for (std::size_t b = 0; b < half; ++b) {
        const double sb = std::sin(pi_n * static_cast<double>(b));
        const double lap = 4.0 * (sa * sa + sb * sb) / (h * h);
        const double value = alpha * std::norm(k.spectrum()[a * half + b]) + r * lap;
        if (!(value > 0.0)) throw NumericalError("ALM: singular Fourier symbol");
        symbol_[a * half + b] = value;
      }
    }
  }

  // Solves (alpha K^T K - r Laplacian) u = rhs.
  ScalarField solve(const ScalarField& rhs) const {
    auto& fft = detail::fft_for(n_);
    std::vector<std::complex<double>> spec(fft.spectrum_size());
    fft.forward(rhs.values(), spec);
    for (std::size_t q = 0; q < spec.size(); ++q) spec[q] /= symbol_[q];
    ScalarField u(n_, h_);
    fft.inverse(spec, u.values());
    return u;
  }

 private:
  std::size_t n_;
  double h_;
  std::vector<double> symbol_;
};

ScalarField linear_rhs(const ScalarField& f2, const VectorField& p, const VectorField& eta, const AlmConfig& cfg) {
  // alpha K^T f2 - div eta - r div p
  ScalarField rhs = apply_kernel_adjoint(cfg, f2);
  rhs *= cfg.alpha;
  VectorField q = p;
  q *= cfg.penalty();
  q += eta;
  rhs -= div_periodic(q);
  return rhs;
}

double l2(const ScalarField& a) { return std::sqrt(norms(a).l2sq); }

}  // namespace

double Regularizer::evaluate(const VectorField& p) const {
  if (kind == Kind::TV) return norms(p).one_two;
  double acc = 0.0;
  for (std::size_t k = 0; k < p.x.size(); ++k) acc += mtv_potential(p.magnitude(k), a);
  return acc;
}

double AlmConfig::penalty() const {
  if (r) return *r;
  if (regularizer.kind == Regularizer::Kind::MTV && regularizer.a > 0.0) return std::max(10.0, 2.0 / regularizer.a);
  return 10.0;
}

void AlmConfig::validate(std::size_t n) const {
  if (!(alpha > 0.0)) throw std::invalid_argument("ALM: alpha must be positive");
  if (!(penalty() > 0.0)) throw std::invalid_argument("ALM: r must be positive");
  if (regularizer.kind == Regularizer::Kind::MTV) mtv_params().validate();
  if (!(tol_u > 0.0) || !(tol_res > 0.0)) throw std::invalid_argument("ALM: tolerances must be positive");
  if (kernel) {
    if (kernel->n() != n) throw ShapeError("ALM: kernel size does not match the image");
    if (kernel->dc_gain() == 0.0) {
      throw std::invalid_argument("ALM: kernel annihilates the mean; the u-update is singular");
    }
  }
}

ScalarField solve_u_linear(const ScalarField& f2, const VectorField& p, const VectorField& eta,
                           const AlmConfig& cfg) {
  if (!p.x.same_grid(f2) || !eta.x.same_grid(f2)) throw ShapeError("solve_u_linear: grid mismatch");
  cfg.validate(f2.n());
  return NormalOperator(cfg, f2.n(), f2.h()).solve(linear_rhs(f2, p, eta, cfg));
}

VectorField solve_p(const ScalarField& u, const VectorField& eta, const AlmConfig& cfg) {
  const double r = cfg.penalty();
  VectorField w = eta;
  w *= -1.0 / r;
  w += grad_periodic(u);
  if (cfg.regularizer.kind == Regularizer::Kind::TV) return shrink_vec(w, 1.0 / r);
  return mtv_prox(w, cfg.mtv_params());
}

double tv_energy(const ScalarField& u, const ScalarField& f2, const AlmConfig& cfg) {
  if (!u.same_grid(f2)) throw ShapeError("tv_energy: grid mismatch");
  const ScalarField residual = f2 - apply_kernel(cfg, u);
  return cfg.regularizer.evaluate(grad_periodic(u)) + 0.5 * cfg.alpha * norms(residual).l2sq;
}

AlmResult alm_solve(const ScalarField& f2, const AlmConfig& cfg, const AlmState* warm) {
  const std::size_t n = f2.n();
  const double h = f2.h();
  cfg.validate(n);
  if (!f2.all_finite()) throw std::invalid_argument("ALM: non-finite input");

  const NormalOperator normal(cfg, n, h);
  const double r = cfg.penalty();
  const double area = static_cast<double>(n * n);

  AlmResult result;
  AlmState& s = result.state;
  if (warm != nullptr) {
    if (!warm->u.same_grid(f2)) throw ShapeError("ALM: warm state on a different grid");
    s = *warm;
  } else {
    s.u = f2;
    s.p = grad_periodic(f2);
    s.eta = VectorField(n, h);
  }
  s.iterations = 0;

  for (std::size_t it = 1; it <= cfg.max_iters; ++it) {
    ScalarField u_new = normal.solve(linear_rhs(f2, s.p, s.eta, cfg));
    const VectorField grad_u = grad_periodic(u_new);
    s.p = solve_p(u_new, s.eta, cfg);

    VectorField gap = s.p - grad_u;
    VectorField step = gap;
    step *= r;
    s.eta += step;

    const double norm_u = l2(u_new);
    const double change = l2(u_new - s.u);
    const double rel_u = norm_u > 0.0 ? change / norm_u : change;
    const double constraint = std::sqrt(norms(gap).l2sq) / area;
    s.u = std::move(u_new);
    s.iterations = it;
    const double energy = tv_energy(s.u, f2, cfg);
    result.trace.add({static_cast<double>(it), rel_u, constraint, energy});

    if (!std::isfinite(energy) || !std::isfinite(rel_u) || !s.eta.all_finite()) {
      throw NumericalError("ALM diverged: non-finite iterate at iteration " + std::to_string(it));
    }
    if (rel_u <= cfg.tol_u && constraint <= cfg.tol_res) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace ottv
