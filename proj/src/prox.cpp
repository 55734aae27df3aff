#include "ottv/prox.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ottv {

void MtvParams::validate() const {
  if (!(a > 0.0)) throw std::invalid_argument("MTV: a must be positive");
  if (!(r * a > 1.0)) throw std::invalid_argument("MTV: penalty r must exceed 1/a");
}

VectorField shrink_vec(const VectorField& x, double threshold) {
  if (!(threshold >= 0.0)) throw std::invalid_argument("shrink_vec: negative threshold");
  VectorField out(x.n(), x.h());
  for (std::size_t k = 0; k < x.x.size(); ++k) {
    const double mag = x.magnitude(k);
    if (mag <= threshold || mag == 0.0) continue;
    const double s = 1.0 - threshold / mag;
    out.x[k] = s * x.x[k];
    out.y[k] = s * x.y[k];
  }
  return out;
}

double mtv_potential(double t, double a) {
  if (!(a > 0.0)) throw std::invalid_argument("mtv_potential: a must be positive");
  t = std::abs(t);
  if (t <= a) return t * t / (2.0 * a);
  return a * std::log(t) + a / 2.0 - a * std::log(a);
}

double mtv_prox_scale(double w_norm, const MtvParams& params) {
  const double a = params.a;
  const double r = params.r;
  if (w_norm <= a + 1.0 / r) return r / (1.0 / a + r);
  // Larger root of r t^2 - r|w| t + a = 0, expressed as a multiple of |w|.
  const double disc = std::max(0.0, 1.0 - 4.0 * a / (r * w_norm * w_norm));
  return 0.5 * (1.0 + std::sqrt(disc));
}

VectorField mtv_prox(const VectorField& w, const MtvParams& params) {
  params.validate();
  VectorField out(w.n(), w.h());
  for (std::size_t k = 0; k < w.x.size(); ++k) {
    const double mag = w.magnitude(k);
    if (mag == 0.0) continue;
    const double s = mtv_prox_scale(mag, params);
    out.x[k] = s * w.x[k];
    out.y[k] = s * w.y[k];
  }
  return out;
}

}  // namespace ottv
