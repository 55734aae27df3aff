#pragma once

// Primal-dual hybrid gradient solver for the transport-fidelity subproblem
//
//   min_{v, m}  (alpha/2) |f1 - v|^2 + lambda |m|_{1,2}   s.t.  div m = v,
//
// where div is the zero-flux divergence. The same iteration with v held fixed
// computes the Wasserstein-1 distance and the dual Lipschitz norm.

#include <cstddef>
#include <optional>

#include "ottv/grid.hpp"
#include "ottv/trace.hpp"

namespace ottv {

struct PdhgConfig {
  double tau = 1.0;             // dual (potential) step
  std::optional<double> mu;     // flux step; h^2 / (32 tau) when unset
  std::optional<double> nu;     // texture step; 1 / (4 tau) when unset
  double alpha = 10.0;          // fidelity weight
  double lambda = 1.0;          // transport weight
  std::optional<double> eps;    // threshold on the fixed-point residual; h^2 when unset
  std::size_t max_iters = 20000;

  double flux_step(double h) const { return mu.value_or(h * h / (32.0 * tau)); }
  double texture_step() const { return nu.value_or(1.0 / (4.0 * tau)); }
  double tolerance(double h) const { return eps.value_or(h * h); }

  /// tau*mu*(8/h^2) + tau*nu; must stay below 1.
  double step_certificate(double h) const;
  /// Throws std::invalid_argument on non-positive parameters or a violated
  /// step-size condition.
  void validate(double h) const;
};

struct W1State {
  VectorField m;    // flux
  ScalarField v;    // texture
  ScalarField phi;  // Kantorovich potential
  // Iterates at the start of the most recent step.
  VectorField m_prev;
  ScalarField v_prev;
  ScalarField phi_prev;
  std::size_t iterations = 0;

  W1State() = default;
  explicit W1State(std::size_t n, double h = 1.0);
};

struct PdhgResult {
  W1State state;
  ConvergenceTrace trace{trace_schema::pdhg};
  bool converged = false;
};

/// Fixed-point residual between two consecutive iterates, scaled by h^2.
double pdhg_residual(const W1State& before, const W1State& after, const PdhgConfig& cfg);

/// Solves the texture subproblem for the given f1 = f - K*u. Cold start is all
/// zeros; `warm` resumes from a previous state on the same grid.
/// Throws std::invalid_argument, ShapeError, or NumericalError on divergence.
PdhgResult solve_v_subproblem(const ScalarField& f1, const PdhgConfig& cfg,
                              const W1State* warm = nullptr);

/// Runs the iteration with v pinned to `target` (mean-zero) and lambda = 1.
/// The returned state carries the flux with div m ~= target.
PdhgResult solve_flux(const ScalarField& target, const PdhgConfig& cfg, const W1State* warm = nullptr);

/// W1 between two nonnegative images of equal mass: |m|_{1,2} at convergence.
double w1_distance(const ScalarField& mu_field, const ScalarField& nu_field, const PdhgConfig& cfg);

/// sup <phi, v> over 1-Lipschitz phi, for mean-zero v.
double dual_lipschitz_norm(const ScalarField& v, const PdhgConfig& cfg);

/// Certified lower bound on |v|_Lip* from any potential: -<v, phi> after
/// rescaling phi so that its pixelwise gradient magnitude is at most 1.
double kantorovich_lower_bound(const ScalarField& v, const ScalarField& phi);

}  // namespace ottv
