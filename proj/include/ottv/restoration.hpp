#pragma once

// Restoration models built on the two inner solvers:
//
//   OTTV:          min_{u,v} |u|_R + (alpha/2)|f - K*u - v|^2 + lambda |v|_Lip*
//   ROF:           v pinned to 0, R = TV
//   MTV_BASELINE:  v pinned to 0, R = modified TV
//
// OTTV alternates a transport (PDHG) step on v with an augmented-Lagrangian
// step on u, warm-starting both inner solvers across outer iterations.

#include <cstddef>
#include <cstdint>
#include <optional>

#include "ottv/grid.hpp"
#include "ottv/trace.hpp"
#include "ottv/tv_solver.hpp"
#include "ottv/w1_solver.hpp"

namespace ottv {

enum class Variant { OTTV, ROF, MTV_BASELINE };

struct ModelSpec {
  double fidelity_alpha = 10.0;
  double transport_lambda = 1.0;
  Regularizer regularizer;  // ROF forces TV; MTV_BASELINE requires MTV
  std::optional<Kernel> kernel;
  Variant variant = Variant::OTTV;

  /// Throws std::invalid_argument on inconsistent fields.
  void validate() const;
  Regularizer effective_regularizer() const;
};

/// Inner-solver settings and outer stopping rule.
struct RestoreOptions {
  double pdhg_tau = 1.0;
  std::optional<double> pdhg_eps;  // h^2 when unset
  std::size_t pdhg_max_iters = 20000;
  std::optional<double> alm_r;
  double alm_tol_u = 1e-5;
  double alm_tol_res = 1e-6;
  std::size_t alm_max_iters = 2000;
  std::size_t max_outer = 30;
  double outer_tol = 1e-4;  // on both relative changes of u and v

  PdhgConfig pdhg_config(const ModelSpec& spec) const;
  AlmConfig alm_config(const ModelSpec& spec) const;
};

struct EnergyTerms {
  double regularizer = 0.0;
  double fidelity = 0.0;              // (alpha/2)|w|^2
  double transport = 0.0;             // lambda |m|_{1,2}
  double transport_lagrangian = 0.0;  // lambda |m|_{1,2} + <div m - v, phi>
  double total = 0.0;                 // regularizer + fidelity + transport
};

struct Decomposition {
  ScalarField f;  // observed image
  std::optional<Kernel> kernel;
  ScalarField u;    // cartoon / restored
  ScalarField v;    // texture, mean-zero
  VectorField flux; // div flux ~= v; zero for ROF and MTV_BASELINE
  ScalarField potential;
  EnergyTerms terms;
  ConvergenceTrace outer{trace_schema::outer};
  ConvergenceTrace pdhg{trace_schema::pdhg};  // last inner transport solve
  ConvergenceTrace alm{trace_schema::alm};    // last inner TV solve
  std::size_t outer_iterations = 0;
  std::size_t total_pdhg_iterations = 0;
  std::size_t total_alm_iterations = 0;
  bool converged = false;

  /// f - K*u - v, recomputed on every call.
  ScalarField w() const;
  /// K*u
  ScalarField blurred_u() const;
  double energy() const { return terms.total; }
};

/// Evaluates the discrete energy of (d.u, d.v). The transport term uses the
/// stored flux when it carries mass; otherwise it is recomputed with PDHG.
/// Throws std::invalid_argument if v is not mean-zero.
EnergyTerms total_energy(const ScalarField& f, const Decomposition& d, const ModelSpec& spec);

/// Throws std::invalid_argument or NumericalError from the inner solvers.
Decomposition restore(const ScalarField& f, const ModelSpec& spec, const RestoreOptions& opts = {});

struct OptimalityReport {
  double pairing_gap = 0.0;
  double dual_bound_violation = 0.0;  // worst alpha<w,g+h>/(|g|_BV + lambda|h|_Lip*) - 1
  std::size_t probes = 0;
};

/// Checks the minimizer characterization of a TV-regularized decomposition.
/// The first three probes are (u, v), (u, 0), (0, v); the remainder are random
/// smooth g and mean-zero h drawn from `seed`.
OptimalityReport optimality_report(const ScalarField& f, const Decomposition& d, const ModelSpec& spec,
                                   std::size_t probes, std::uint64_t seed = 7);

enum class CalibrationKnob { ALPHA, LAMBDA };

struct CalibrationResult {
  ModelSpec spec;
  double residual_norm = 0.0;  // |f - K*u| at the returned knob
  std::size_t evaluations = 0;
};

/// Adjusts one knob so that |f - K*u| matches `target` within `rel_tol`.
/// Throws CalibrationError when the target cannot be bracketed.
CalibrationResult calibrate_residual_norm(const ScalarField& f, const ModelSpec& spec, double target,
                                          CalibrationKnob knob, const RestoreOptions& opts = {},
                                          double rel_tol = 5e-3);

/// Peak 1. Returns +infinity for identical images.
double psnr(const ScalarField& u, const ScalarField& reference);

/// u + N(0, sigma^2) noise, no clipping. Deterministic in `seed`.
ScalarField add_gaussian_noise(const ScalarField& u, double sigma, std::uint64_t seed);

}  // namespace ottv
