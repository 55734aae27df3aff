#pragma once

#include "ottv/grid.hpp"

namespace ottv {

/// Parameters of the modified-TV potential and the penalty weight it is
/// paired with inside the augmented Lagrangian.
struct MtvParams {
  double a = 0.1;   // quadratic/logarithmic branch threshold on |grad u|
  double r = 20.0;  // penalty weight; the prox is well defined only for r > 1/a

  /// Throws std::invalid_argument unless a > 0 and r > 1/a.
  void validate() const;
};

/// Per-pixel Euclidean soft threshold: argmin_z t|z| + |z - x|^2 / 2.
/// Throws std::invalid_argument for a negative threshold.
VectorField shrink_vec(const VectorField& x, double threshold);

/// phi_a(t): t^2/(2a) for t <= a, a ln t + a/2 - a ln a above.
double mtv_potential(double t, double a);

/// Scale s such that s*w minimizes phi_a(|p|) + (r/2)|p - w|^2 for |w| = w_norm.
double mtv_prox_scale(double w_norm, const MtvParams& params);

/// Per-pixel minimizer of phi_a(|p|) + (r/2)|p - w|^2.
VectorField mtv_prox(const VectorField& w, const MtvParams& params);

}  // namespace ottv
