#include "ottv/ottv.h"

#include <algorithm>
#include <cmath>
#include <exception>
#include <new>
#include <string>
#include <utility>

#include "ottv/errors.hpp"
#include "ottv/image_io.hpp"
#include "ottv/restoration.hpp"
#include "ottv/trace.hpp"
#include "ottv/w1_solver.hpp"

struct ottv_field {
  ottv::ScalarField value;
};

struct ottv_result {
  ottv::Decomposition decomposition;
};

namespace {

thread_local std::string g_last_error;

constexpr double kW1RelativeEps = 1e-10;

ottv_status fail(ottv_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

// Runs `body`, translating exceptions into status codes.
template <class Body>
ottv_status guarded(Body&& body) {
  try {
    body();
    g_last_error.clear();
    return OTTV_OK;
  } catch (const ottv::ShapeError& e) {
    return fail(OTTV_ERR_SHAPE, e.what());
  } catch (const ottv::NumericalError& e) {
    return fail(OTTV_ERR_NUMERICAL, e.what());
  } catch (const ottv::IoError& e) {
    return fail(OTTV_ERR_IO, e.what());
  } catch (const ottv::CalibrationError& e) {
    return fail(OTTV_ERR_CALIBRATION, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(OTTV_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::bad_alloc&) {
    return fail(OTTV_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(OTTV_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(OTTV_ERR_INTERNAL, "unknown error");
  }
}

void require(bool condition, const char* message) {
  if (!condition) throw std::invalid_argument(message);
}

ottv_field* wrap(ottv::ScalarField field) { return new ottv_field{std::move(field)}; }

std::optional<ottv::Kernel> make_kernel(ottv_blur blur, double width, std::size_t n, double h) {
  switch (blur) {
    case OTTV_BLUR_NONE:
      return std::nullopt;
    case OTTV_BLUR_GAUSSIAN:
      require(width > 0.0, "Gaussian blur width must be positive");
      return ottv::Kernel::gaussian(n, width, h);
    case OTTV_BLUR_BOX:
      require(width >= 0.0 && width == std::floor(width), "box blur radius must be a non-negative integer");
      return ottv::Kernel::box(n, static_cast<std::size_t>(width), h);
  }
  throw std::invalid_argument("unknown blur kind");
}

ottv::ModelSpec make_spec(const ottv_params& p, const ottv::ScalarField& f) {
  ottv::ModelSpec spec;
  spec.fidelity_alpha = p.alpha;
  spec.transport_lambda = p.lambda;
  switch (p.model) {
    case OTTV_MODEL_OTTV:
      spec.variant = ottv::Variant::OTTV;
      spec.regularizer = p.use_mtv ? ottv::Regularizer::mtv(p.mtv_a) : ottv::Regularizer::tv();
      break;
    case OTTV_MODEL_ROF:
      spec.variant = ottv::Variant::ROF;
      break;
    case OTTV_MODEL_MTV:
      spec.variant = ottv::Variant::MTV_BASELINE;
      spec.regularizer = ottv::Regularizer::mtv(p.mtv_a);
      break;
    default:
      throw std::invalid_argument("unknown model");
  }
  spec.kernel = make_kernel(p.blur, p.blur_width, f.n(), f.h());
  return spec;
}

ottv::RestoreOptions make_options(const ottv_params& p) {
  ottv::RestoreOptions o;
  o.pdhg_tau = p.pdhg_tau;
  if (p.pdhg_eps > 0.0) o.pdhg_eps = p.pdhg_eps;
  o.pdhg_max_iters = p.pdhg_max_iters;
  if (p.alm_r > 0.0) o.alm_r = p.alm_r;
  o.alm_tol_u = p.alm_tol_u;
  o.alm_tol_res = p.alm_tol_res;
  o.alm_max_iters = p.alm_max_iters;
  o.max_outer = p.max_outer;
  o.outer_tol = p.outer_tol;
  return o;
}

double l2(const ottv::ScalarField& f) { return std::sqrt(ottv::norms(f).l2sq); }

}  // namespace

extern "C" {

const char* ottv_version(void) { return "0.1.0"; }

const char* ottv_last_error(void) { return g_last_error.c_str(); }

const char* ottv_status_name(ottv_status status) {
  switch (status) {
    case OTTV_OK: return "ok";
    case OTTV_ERR_INVALID_ARGUMENT: return "invalid argument";
    case OTTV_ERR_SHAPE: return "shape mismatch";
    case OTTV_ERR_NUMERICAL: return "numerical failure";
    case OTTV_ERR_IO: return "i/o error";
    case OTTV_ERR_CALIBRATION: return "calibration failure";
    case OTTV_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

ottv_status ottv_field_create(size_t n, double h, const double* values, ottv_field** out) {
  return guarded([&] {
    require(out != nullptr, "out must not be null");
    ottv::ScalarField field(n, h);
    if (values != nullptr) {
      for (std::size_t k = 0; k < field.size(); ++k) field[k] = values[k];
      require(field.all_finite(), "field values must be finite");
    }
    *out = wrap(std::move(field));
  });
}

ottv_status ottv_field_load(const char* path, ottv_field** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "path and out must not be null");
    *out = wrap(ottv::load_image(path));
  });
}

ottv_status ottv_field_save(const ottv_field* field, const char* path, double offset) {
  return guarded([&] {
    require(field != nullptr && path != nullptr, "field and path must not be null");
    ottv::save_image(field->value, path, offset);
  });
}

ottv_status ottv_field_dims(const ottv_field* field, size_t* n, double* h) {
  return guarded([&] {
    require(field != nullptr, "field must not be null");
    if (n != nullptr) *n = field->value.n();
    if (h != nullptr) *h = field->value.h();
  });
}

ottv_status ottv_field_read(const ottv_field* field, double* values, size_t count) {
  return guarded([&] {
    require(field != nullptr && values != nullptr, "field and values must not be null");
    if (count != field->value.size()) throw ottv::ShapeError("buffer length does not match n*n");
    for (std::size_t k = 0; k < count; ++k) values[k] = field->value[k];
  });
}

void ottv_field_free(ottv_field* field) { delete field; }

ottv_status ottv_field_add_noise(const ottv_field* field, double sigma, uint64_t seed, ottv_field** out) {
  return guarded([&] {
    require(field != nullptr && out != nullptr, "field and out must not be null");
    *out = wrap(ottv::add_gaussian_noise(field->value, sigma, seed));
  });
}

ottv_status ottv_field_blur(const ottv_field* field, ottv_blur blur, double width, ottv_field** out) {
  return guarded([&] {
    require(field != nullptr && out != nullptr, "field and out must not be null");
    const auto kernel = make_kernel(blur, width, field->value.n(), field->value.h());
    *out = wrap(kernel ? ottv::convolve(*kernel, field->value) : field->value);
  });
}

ottv_status ottv_field_norm(const ottv_field* field, double* out) {
  return guarded([&] {
    require(field != nullptr && out != nullptr, "field and out must not be null");
    *out = l2(field->value);
  });
}

ottv_status ottv_psnr(const ottv_field* u, const ottv_field* reference, double* out) {
  return guarded([&] {
    require(u != nullptr && reference != nullptr && out != nullptr, "arguments must not be null");
    *out = ottv::psnr(u->value, reference->value);
  });
}

ottv_status ottv_w1_distance(const ottv_field* a, const ottv_field* b, int normalize, double tau, double eps,
                             size_t max_iters, double* out) {
  return guarded([&] {
    require(a != nullptr && b != nullptr && out != nullptr, "arguments must not be null");
    ottv::ScalarField mu = a->value;
    ottv::ScalarField nu = b->value;
    if (normalize) {
      const double mass_a = mu.sum();
      const double mass_b = nu.sum();
      require(mass_a > 0.0 && mass_b > 0.0, "cannot normalize an image with zero mass");
      mu *= 1.0 / mass_a;
      nu *= 1.0 / mass_b;
    }
    // Defaults: a large dual step suits the pinned-texture iteration, and the
    // tolerance scales with the squared difference so unit-mass inputs converge.
    ottv::PdhgConfig cfg;
    cfg.tau = tau > 0.0 ? tau : 16.0;
    const double h = mu.h();
    cfg.eps = eps > 0.0 ? eps : kW1RelativeEps * h * h * std::max(ottv::norms(mu - nu).l2sq, 1e-300);
    cfg.max_iters = max_iters > 0 ? max_iters : 200000;
    *out = ottv::w1_distance(mu, nu, cfg);
  });
}

void ottv_params_default(ottv_params* params) {
  if (params == nullptr) return;
  const ottv::ModelSpec spec;
  const ottv::RestoreOptions o;
  const ottv::MtvParams mtv;
  *params = ottv_params{};
  params->model = OTTV_MODEL_OTTV;
  params->alpha = spec.fidelity_alpha;
  params->lambda = spec.transport_lambda;
  params->use_mtv = 0;
  params->mtv_a = mtv.a;
  params->blur = OTTV_BLUR_NONE;
  params->blur_width = 0.0;
  params->pdhg_tau = o.pdhg_tau;
  params->pdhg_eps = 0.0;
  params->pdhg_max_iters = o.pdhg_max_iters;
  params->alm_r = 0.0;
  params->alm_tol_u = o.alm_tol_u;
  params->alm_tol_res = o.alm_tol_res;
  params->alm_max_iters = o.alm_max_iters;
  params->max_outer = o.max_outer;
  params->outer_tol = o.outer_tol;
}

ottv_status ottv_restore(const ottv_field* f, const ottv_params* params, ottv_result** out) {
  return guarded([&] {
    require(f != nullptr && params != nullptr && out != nullptr, "arguments must not be null");
    const ottv::ModelSpec spec = make_spec(*params, f->value);
    *out = new ottv_result{ottv::restore(f->value, spec, make_options(*params))};
  });
}

ottv_status ottv_calibrate(const ottv_field* f, const ottv_params* params, double target, ottv_knob knob,
                           double rel_tol, ottv_params* tuned, ottv_result** out) {
  return guarded([&] {
    require(f != nullptr && params != nullptr && tuned != nullptr, "arguments must not be null");
    require(rel_tol > 0.0, "rel_tol must be positive");
    require(knob == OTTV_KNOB_ALPHA || knob == OTTV_KNOB_LAMBDA, "unknown calibration knob");
    const ottv::ModelSpec spec = make_spec(*params, f->value);
    const ottv::RestoreOptions opts = make_options(*params);
    const auto which = knob == OTTV_KNOB_ALPHA ? ottv::CalibrationKnob::ALPHA : ottv::CalibrationKnob::LAMBDA;
    const ottv::CalibrationResult cal = ottv::calibrate_residual_norm(f->value, spec, target, which, opts, rel_tol);
    ottv_params result = *params;
    result.alpha = cal.spec.fidelity_alpha;
    result.lambda = cal.spec.transport_lambda;
    if (out != nullptr) *out = new ottv_result{ottv::restore(f->value, cal.spec, opts)};
    *tuned = result;
  });
}

ottv_status ottv_result_component(const ottv_result* result, ottv_component which, ottv_field** out) {
  return guarded([&] {
    require(result != nullptr && out != nullptr, "result and out must not be null");
    const ottv::Decomposition& d = result->decomposition;
    switch (which) {
      case OTTV_COMPONENT_U: *out = wrap(d.u); return;
      case OTTV_COMPONENT_V: *out = wrap(d.v); return;
      case OTTV_COMPONENT_W: *out = wrap(d.w()); return;
      case OTTV_COMPONENT_RESIDUAL: *out = wrap(d.f - d.blurred_u()); return;
      case OTTV_COMPONENT_BLURRED_U: *out = wrap(d.blurred_u()); return;
      case OTTV_COMPONENT_POTENTIAL: *out = wrap(d.potential); return;
    }
    throw std::invalid_argument("unknown component");
  });
}

ottv_status ottv_result_metrics(const ottv_result* result, ottv_metrics* out) {
  return guarded([&] {
    require(result != nullptr && out != nullptr, "result and out must not be null");
    const ottv::Decomposition& d = result->decomposition;
    ottv_metrics m{};
    m.energy = d.terms.total;
    m.regularizer = d.terms.regularizer;
    m.fidelity = d.terms.fidelity;
    m.transport = d.terms.transport;
    m.transport_lagrangian = d.terms.transport_lagrangian;
    m.residual_norm = l2(d.f - d.blurred_u());
    m.remainder_norm = l2(d.w());
    m.texture_norm = l2(d.v);
    m.outer_iterations = d.outer_iterations;
    m.pdhg_iterations = d.total_pdhg_iterations;
    m.alm_iterations = d.total_alm_iterations;
    m.converged = d.converged ? 1 : 0;
    *out = m;
  });
}

ottv_status ottv_result_write_trace(const ottv_result* result, ottv_trace which, const char* path) {
  return guarded([&] {
    require(result != nullptr && path != nullptr, "result and path must not be null");
    const ottv::Decomposition& d = result->decomposition;
    switch (which) {
      case OTTV_TRACE_OUTER: ottv::write_trace(d.outer, path); return;
      case OTTV_TRACE_PDHG: ottv::write_trace(d.pdhg, path); return;
      case OTTV_TRACE_ALM: ottv::write_trace(d.alm, path); return;
    }
    throw std::invalid_argument("unknown trace");
  });
}

void ottv_result_free(ottv_result* result) { delete result; }

}  // extern "C"
