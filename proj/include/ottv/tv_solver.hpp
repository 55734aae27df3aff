#pragma once

// Augmented Lagrangian solver for
//
//   min_u  sum R(|grad u|) + (alpha/2) |K*u - f2|^2
//
// with R = |.| (TV) or the modified-TV potential, periodic gradients, and the
// u-update solved exactly in the Fourier domain.

#include <cstddef>
#include <optional>

#include "ottv/grid.hpp"
#include "ottv/prox.hpp"
#include "ottv/trace.hpp"

namespace ottv {

struct Regularizer {
  enum class Kind { TV, MTV };
  Kind kind = Kind::TV;
  double a = 0.0;  // MTV threshold, unused for TV

  static Regularizer tv() { return {}; }
  static Regularizer mtv(double a) { return {Kind::MTV, a}; }

  /// Sum over pixels of R(|p|).
  double evaluate(const VectorField& p) const;
};

struct AlmConfig {
  double alpha = 10.0;
  std::optional<double> r;  // penalty; 10 for TV, max(10, 2/a) for MTV when unset
  Regularizer regularizer;
  std::optional<Kernel> kernel;  // identity when unset
  double tol_u = 1e-5;
  double tol_res = 1e-6;
  std::size_t max_iters = 2000;

  double penalty() const;
  MtvParams mtv_params() const { return {regularizer.a, penalty()}; }
  /// Throws std::invalid_argument for non-positive weights, r <= 1/a under
  /// MTV, a kernel of the wrong size, or a kernel with zero DC gain.
  void validate(std::size_t n) const;
};

struct AlmState {
  ScalarField u;
  VectorField p;    // surrogate for grad u
  VectorField eta;  // multiplier
  std::size_t iterations = 0;
};

struct AlmResult {
  AlmState state;
  ConvergenceTrace trace{trace_schema::alm};
  bool converged = false;
};

/// Exact minimizer over u of (alpha/2)|K*u - f2|^2 - <grad u, eta> + (r/2)|p - grad u|^2.
ScalarField solve_u_linear(const ScalarField& f2, const VectorField& p, const VectorField& eta,
                           const AlmConfig& cfg);

/// Proximal step on w = grad u - eta/r.
VectorField solve_p(const ScalarField& u, const VectorField& eta, const AlmConfig& cfg);

/// Throws std::invalid_argument, ShapeError, or NumericalError.
AlmResult alm_solve(const ScalarField& f2, const AlmConfig& cfg, const AlmState* warm = nullptr);

double tv_energy(const ScalarField& u, const ScalarField& f2, const AlmConfig& cfg);

}  // namespace ottv
