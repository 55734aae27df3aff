// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits 0 iff the set of failing criteria equals the --expect-fail set.

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dense.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "ottv/grid.hpp"
#include "ottv/prox.hpp"
#include "ottv/restoration.hpp"
#include "ottv/tv_solver.hpp"
#include "ottv/w1_solver.hpp"

using namespace ottv;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

double l2(const ScalarField& x) { return std::sqrt(norms(x).l2sq); }

ScalarField with_spacing(const ScalarField& f, double h) { return ScalarField(f.n(), h, {f.values().begin(), f.values().end()}); }

// Mean and mean absolute deviation of r over the centred disc.
std::pair<double, double> disc_stats(const ScalarField& r, double radius) {
  const std::size_t n = r.n();
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (fixtures::inside_disc(n, radius, i, j)) sum += r(i, j), ++count;
  const double mean = sum / static_cast<double>(count);
  double mad = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (fixtures::inside_disc(n, radius, i, j)) mad += std::abs(r(i, j) - mean);
  return {mean, mad / static_cast<double>(count)};
}

PdhgConfig transport_config(const ScalarField& v) {
  PdhgConfig cfg;
  cfg.tau = 16.0;
  cfg.eps = 1e-10 * v.h() * v.h() * norms(v).l2sq;
  cfg.max_iters = 200000;
  return cfg;
}

ScalarField dipole(std::size_t n, std::size_t ai, std::size_t aj, std::size_t bi, std::size_t bj) {
  ScalarField v(n);
  v(ai, aj) += 1.0;
  v(bi, bj) -= 1.0;
  return v;
}

void operators(Outcome& o) {
  double worst = 0.0;
  for (std::size_t n = 2; n <= 64; ++n) {
    const VectorField m = fixtures::random_vector(n, 100 + n);
    const ScalarField phi = fixtures::random_field(n, 200 + n);
    worst = std::max(worst, std::abs(inner(div_dirichlet(m), phi) + inner(m, grad_adjoint_dirichlet(phi))));
    worst = std::max(worst, std::abs(inner(div_periodic(m), phi) + inner(m, grad_periodic(phi))));
  }
  o.detail << "max adjoint defect " << worst << "; ";
  o.require(worst < 1e-10, "adjoint defect");

  double worst_ratio = 0.0;
  for (std::size_t n : {4u, 16u, 32u}) {
    for (double h : {1.0, 0.1}) {
      ScalarField x = fixtures::random_field(n, n, h);
      double lambda = 0.0;
      for (int it = 0; it < 3000; ++it) {
        ScalarField y = div_dirichlet(grad_adjoint_dirichlet(x));
        y *= -1.0;
        lambda = std::sqrt(norms(y).l2sq / norms(x).l2sq);
        y *= 1.0 / std::sqrt(norms(y).l2sq);
        x = y;
      }
      worst_ratio = std::max(worst_ratio, lambda * h * h / 8.0);
    }
  }
  o.detail << "max lambda_max h^2/8 " << worst_ratio << "; ";
  o.require(worst_ratio <= 1.0 + 1e-6, "spectral bound");
}

void proxes(Outcome& o) {
  const auto pixel = [](double norm) {
    VectorField v(2);
    v.x[0] = 0.6 * norm;
    v.y[0] = 0.8 * norm;
    return v;
  };
  const auto magnitude = [](const VectorField& v) { return std::hypot(v.x[0], v.y[0]); };

  double worst_shrink = 0.0;
  for (int ms = 0; ms <= 10; ++ms) {
    const double mu = 0.5 * ms;
    for (int k = 0; k <= 100; ++k) {
      const double norm = 0.1 * k;
      const double oracle = oracles::grid_argmin(
          [&](double t) { return mu * t + 0.5 * (t - norm) * (t - norm); }, 0.0, norm, 1e-5);
      worst_shrink = std::max(worst_shrink, std::abs(magnitude(shrink_vec(pixel(norm), mu)) - oracle));
    }
  }

  double worst_mtv = 0.0;
  for (double a : {0.1, 0.5, 1.0}) {
    for (double scale : {1.5, 2.0, 10.0}) {
      const MtvParams p{a, scale / a};
      for (int k = 0; k <= 40; ++k) {
        const double norm = 0.25 * k;
        // The potential is nondecreasing, so the minimizer lies in [0, norm].
        const double oracle = oracles::grid_argmin(
            [&](double t) { return oracles::log_potential(t, a) + 0.5 * p.r * (t - norm) * (t - norm); }, 0.0, norm,
            1e-5);
        worst_mtv = std::max(worst_mtv, std::abs(magnitude(mtv_prox(pixel(norm), p)) - oracle));
      }
    }
  }
  o.detail << "shrink max error " << worst_shrink << ", log-potential max error " << worst_mtv << "; ";
  o.require(worst_shrink <= 1e-4, "shrink");
  o.require(worst_mtv <= 1e-4, "log-potential prox");
}

void transport(Outcome& o) {
  const std::size_t n = 8;
  double worst = 0.0;
  // Axis-aligned pairs, where the l1 edge-cost LP equals the Euclidean cost.
  for (const ScalarField& v : {dipole(n, 2, 1, 2, 6), dipole(n, 0, 3, 7, 3), dipole(n, 5, 0, 5, 7),
                               dipole(n, 1, 4, 6, 4)}) {
    const double lp = oracles::grid_transport_lp(v);
    worst = std::max(worst, std::abs(dual_lipschitz_norm(v, transport_config(v)) / lp - 1.0));
  }
  // Off-axis pairs against the conic reference values.
  for (const auto& ref : oracles::conic_8x8) {
    const ScalarField a = fixtures::delta(n, ref.ai, ref.aj);
    const ScalarField b = fixtures::delta(n, ref.bi, ref.bj);
    worst = std::max(worst, std::abs(w1_distance(a, b, transport_config(a - b)) / ref.distance - 1.0));
  }
  o.detail << "8x8 max relative error " << worst << "; ";
  o.require(worst <= 0.01, "8x8 oracles");

  double worst32 = 0.0;
  for (double h : {1.0, 0.25}) {
    for (std::size_t k : {1u, 4u, 8u}) {
      const ScalarField a = fixtures::delta(32, 10, 12, 1.0, h);
      const ScalarField b = fixtures::delta(32, 10, 12 + k, 1.0, h);
      const double d = w1_distance(a, b, transport_config(a - b));
      worst32 = std::max(worst32, std::abs(d / (static_cast<double>(k) * h) - 1.0));
    }
  }
  o.detail << "32x32 max relative error " << worst32 << "; ";
  o.require(worst32 <= 0.01, "32x32 point masses");
}

void step_sizes(Outcome& o) {
  double worst_cert = 0.0;
  for (double tau : {0.25, 1.0, 4.0, 16.0})
    for (double h : {1.0, 0.5, 0.1}) {
      PdhgConfig cfg;
      cfg.tau = tau;
      worst_cert = std::max(worst_cert, std::abs(cfg.step_certificate(h) - 0.5));
    }
  o.detail << "certificate defect " << worst_cert << "; ";
  o.require(worst_cert <= 1e-15, "certificate");

  double worst_residual = 0.0;
  double worst_ratio = 0.0;
  for (int kind = 0; kind < 3; ++kind) {
    for (double h : {1.0, 0.5}) {
      for (std::size_t n : {32u, 64u}) {
        ScalarField f1 = add_gaussian_noise(fixtures::scene(kind, n), 0.05, 20 + kind);
        f1 += -f1.mean();
        f1 = with_spacing(f1, h);
        const PdhgConfig cfg;
        const PdhgResult r = solve_v_subproblem(f1, cfg);
        o.require(r.converged, "PDHG converged (scene " + std::to_string(kind) + ")");
        worst_residual = std::max(worst_residual, r.trace.last("R_k") / (h * h));
        worst_ratio = std::max(worst_ratio, r.trace.last("constraint_ratio") / cfg.tolerance(h));
      }
    }
  }
  o.detail << "max final R_k/h^2 " << worst_residual << ", max constraint ratio/eps " << worst_ratio << "; ";
  o.require(worst_residual < 1.0, "residual below h^2");
  o.require(worst_ratio <= 10.0, "constraint ratio");
}

void linear_solve(Outcome& o) {
  double worst = 0.0;
  for (std::size_t n : {4u, 5u, 6u, 7u, 8u}) {
    for (bool blurred : {false, true}) {
      const double h = n == 5 ? 0.5 : 1.0;
      AlmConfig cfg;
      cfg.alpha = 3.0;
      cfg.r = 2.5;
      const ScalarField taps = fixtures::random_field(n, 70 + n, h, 0.1, 1.0);
      if (blurred) cfg.kernel = Kernel(taps);
      const ScalarField f2 = fixtures::random_field(n, 80 + n, h);
      const VectorField p = fixtures::random_vector(n, 90 + n, h);
      const VectorField eta = fixtures::random_vector(n, 95 + n, h);
      const dense::Matrix g = dense::dense_gradient(n, h);
      const dense::Matrix k = blurred ? dense::dense_kernel(taps) : dense::Matrix::Identity(n * n, n * n);
      const dense::Matrix a = cfg.alpha * k.transpose() * k + *cfg.r * g.transpose() * g;
      const dense::Vector b = cfg.alpha * k.transpose() * dense::flat(f2) + g.transpose() * dense::flat(eta) +
                              *cfg.r * g.transpose() * dense::flat(p);
      const dense::Vector expected = a.ldlt().solve(b);
      const dense::Vector got = dense::flat(solve_u_linear(f2, p, eta, cfg));
      worst = std::max(worst, (got - expected).norm() / expected.norm());
    }
  }
  o.detail << "max relative error " << worst << "; ";
  o.require(worst < 1e-8, "dense agreement");

  double worst_mean = 0.0;
  double worst_eta = 0.0;
  for (int kind = 0; kind < 3; ++kind) {
    const ScalarField f = add_gaussian_noise(fixtures::scene(kind, 64), 0.05, 30 + kind);
    ModelSpec rof;
    rof.variant = Variant::ROF;
    const Decomposition d = restore(f, rof);
    worst_mean = std::max(worst_mean, std::abs(d.u.mean() - f.mean()));
    AlmConfig cfg;
    cfg.tol_u = 1e-7;
    cfg.tol_res = 1e-8;
    cfg.max_iters = 20000;
    const AlmResult r = alm_solve(f, cfg);
    for (std::size_t k = 0; k < r.state.eta.x.size(); ++k) worst_eta = std::max(worst_eta, r.state.eta.magnitude(k));
  }
  o.detail << "max mean drift " << worst_mean << ", max |eta| " << worst_eta << "; ";
  o.require(worst_mean <= 1e-8, "mean preservation");
  o.require(worst_eta <= 1.1, "multiplier bound");
}

void meyer_disc(Outcome& o) {
  const std::size_t n = 128;
  const double radius = 32.0;
  const double contrast = 0.8;
  // The fidelity here is (alpha/2)|f-u|^2; alpha = 2 alpha_m gives the classical
  // alpha_m |f-u|^2 weighting, whose predicted contrast loss is 1/(alpha_m R).
  const double alpha_m = 0.1;
  ModelSpec rof;
  rof.variant = Variant::ROF;
  rof.fidelity_alpha = 2.0 * alpha_m;
  RestoreOptions opts;
  opts.alm_tol_u = 1e-7;
  opts.alm_tol_res = 1e-8;
  opts.alm_max_iters = 20000;
  const ScalarField f = fixtures::disc(n, radius, contrast);
  const Decomposition d = restore(f, rof, opts);
  const double loss = disc_stats(f - d.u, radius).first;
  const double predicted = 1.0 / (alpha_m * radius);
  o.detail << "alpha_m R a = " << alpha_m * radius * contrast << ", loss " << loss << " vs " << predicted << "; ";
  o.require(alpha_m * radius * contrast > 2.0, "alpha R a > 2");
  o.require(std::abs(loss / predicted - 1.0) <= 0.1, "contrast loss");
}

void alternating(Outcome& o) {
  RestoreOptions opts;
  opts.pdhg_eps = 1e-8;
  for (int kind = 0; kind < 3; ++kind) {
    const ScalarField f = add_gaussian_noise(fixtures::scene(kind, 64), 0.05, static_cast<std::uint64_t>(kind + 1));
    const Decomposition d = restore(f, ModelSpec{}, opts);
    Decomposition start;
    start.u = f;
    start.v = ScalarField(64);
    const double f0 = total_energy(f, start, ModelSpec{}).total;
    const std::size_t col = d.outer.column_index("energy");
    double previous = f0;
    double worst_rise = -1e300;
    for (const auto& row : d.outer.rows) {
      worst_rise = std::max(worst_rise, (row[col] - previous) / f0);
      previous = row[col];
    }
    const std::string tag = "scene " + std::to_string(kind);
    o.detail << tag << ": " << d.outer_iterations << " outer, worst rise/F0 " << worst_rise << "; ";
    o.require(d.converged && d.outer_iterations <= 30, tag + " convergence");
    o.require(worst_rise <= 1e-6, tag + " monotone energy");
  }
}

void optimality(Outcome& o) {
  const ScalarField f = add_gaussian_noise(fixtures::disc(64, 16, 0.8, 0.1), 0.05, 3);
  RestoreOptions opts;
  opts.pdhg_eps = 1e-10;
  opts.alm_tol_u = 1e-7;
  opts.alm_tol_res = 1e-8;
  opts.outer_tol = 1e-6;
  opts.max_outer = 60;
  const ModelSpec spec;
  const Decomposition d = restore(f, spec, opts);
  const OptimalityReport rep = optimality_report(f, d, spec, 100);
  o.detail << "pairing gap " << rep.pairing_gap << ", violation " << rep.dual_bound_violation << " over "
           << rep.probes << " probes; ";
  o.require(rep.pairing_gap <= 5e-2, "pairing gap");
  o.require(rep.dual_bound_violation <= 5e-2, "probe violation");
}

void calibration(Outcome& o) {
  const std::size_t n = 64;
  const double sigma = 25.0 / 255.0;
  const ScalarField f = add_gaussian_noise(fixtures::disc(n, 16, 0.8), sigma, 11);
  const double target = static_cast<double>(n) * sigma;
  RestoreOptions opts;
  opts.pdhg_eps = 1e-8;
  ModelSpec rof;
  rof.variant = Variant::ROF;
  const CalibrationResult a = calibrate_residual_norm(f, rof, target, CalibrationKnob::ALPHA, opts);
  const CalibrationResult b = calibrate_residual_norm(f, ModelSpec{}, target, CalibrationKnob::LAMBDA, opts);
  const double ra = l2(f - restore(f, a.spec, opts).u);
  const double rb = l2(f - restore(f, b.spec, opts).u);
  o.detail << "target " << target << ", ROF alpha " << a.spec.fidelity_alpha << " -> " << ra << ", OTTV lambda "
           << b.spec.transport_lambda << " -> " << rb << "; ";
  o.require(std::abs(ra / target - 1.0) <= 0.01, "ROF residual");
  o.require(std::abs(rb / target - 1.0) <= 0.01, "OTTV residual");
}

void contrast(Outcome& o) {
  const std::size_t n = 64;
  const double radius = 16.0;
  const double sigma = 25.0 / 255.0;
  const ScalarField f = add_gaussian_noise(fixtures::disc(n, radius, 0.8), sigma, 11);
  const double target = static_cast<double>(n) * sigma;
  RestoreOptions opts;
  opts.pdhg_eps = 1e-8;
  ModelSpec rof;
  rof.variant = Variant::ROF;
  const CalibrationResult a = calibrate_residual_norm(f, rof, target, CalibrationKnob::ALPHA, opts);
  const CalibrationResult b = calibrate_residual_norm(f, ModelSpec{}, target, CalibrationKnob::LAMBDA, opts);
  const auto [rof_mean, rof_mad] = disc_stats(f - restore(f, a.spec, opts).u, radius);
  const auto [ot_mean, ot_mad] = disc_stats(f - restore(f, b.spec, opts).u, radius);
  o.detail << "inside-disc MAD ROF " << rof_mad << ", OTTV " << ot_mad << " (means " << rof_mean << ", " << ot_mean
           << "); ";
  o.require(ot_mad <= 0.95 * rof_mad, "OTTV MAD at least 5% below ROF");
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;  // wall-clock limit; 0 when none applies
  std::function<void(Outcome&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::vector<int> expect_fail;
  std::vector<int> only;
  app.add_option("--expect-fail", expect_fail, "criteria known to fail")->delimiter(',');
  app.add_option("--only", only, "run only these criteria")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria = {
      {1, "operator adjoints and spectral bound", 5, operators},
      {2, "proximal maps against brute force", 30, proxes},
      {3, "W1 against transport oracles", 60, transport},
      {4, "PDHG step certificate and residual", 0, step_sizes},
      {5, "Fourier u-update and ROF mean", 0, linear_solve},
      {6, "Meyer disc contrast loss", 60, meyer_disc},
      {7, "alternating scheme descent and convergence", 0, alternating},
      {8, "optimality characterization", 0, optimality},
      {9, "residual-norm calibration", 0, calibration},
      {10, "contrast preservation at matched residuals", 0, contrast},
  };

  std::set<int> failed;
  std::set<int> ran;
  for (const Criterion& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    ran.insert(c.id);
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_s > 0) o.require(seconds < c.budget_s, "runtime budget " + std::to_string(c.budget_s) + " s");
    if (!o.pass) failed.insert(c.id);
    std::printf("%s %2d %s (%.1f s): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, seconds, o.detail.str().c_str());
    std::fflush(stdout);
  }

  std::set<int> expected;
  for (int id : expect_fail)
    if (ran.count(id)) expected.insert(id);
  for (int id : failed)
    if (!expected.count(id)) std::printf("unexpected failure: %d\n", id);
  for (int id : expected)
    if (!failed.count(id)) std::printf("unexpected pass: %d\n", id);
  return failed == expected ? 0 : 1;
}
