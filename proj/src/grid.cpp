#include "ottv/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "fft.hpp"
#include "ottv/errors.hpp"

namespace ottv {

namespace {

void require_same(const ScalarField& a, const ScalarField& b, const char* what) {
  if (!a.same_grid(b)) {
    throw ShapeError(std::string(what) + ": grid mismatch (" + std::to_string(a.n()) + " vs " +
                     std::to_string(b.n()) + ")");
  }
}

}  // namespace

ScalarField::ScalarField(std::size_t n, double h) : n_(n), h_(h), data_(n * n, 0.0) {
  if (n < 2) throw std::invalid_argument("ScalarField: n must be >= 2");
  if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("ScalarField: h must be positive");
}

ScalarField::ScalarField(std::size_t n, double h, std::vector<double> values) : ScalarField(n, h) {
  if (values.size() != n * n) throw std::invalid_argument("ScalarField: expected n*n values");
  data_ = std::move(values);
  if (!all_finite()) throw std::invalid_argument("ScalarField: non-finite value");
}

ScalarField ScalarField::constant(std::size_t n, double value, double h) {
  ScalarField f(n, h);
  std::fill(f.data_.begin(), f.data_.end(), value);
  return f;
}

bool ScalarField::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double ScalarField::sum() const { return std::accumulate(data_.begin(), data_.end(), 0.0); }

double ScalarField::mean() const { return sum() / static_cast<double>(data_.size()); }

ScalarField& ScalarField::operator+=(const ScalarField& rhs) {
  require_same(*this, rhs, "operator+=");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += rhs.data_[k];
  return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& rhs) {
  require_same(*this, rhs, "operator-=");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= rhs.data_[k];
  return *this;
}

ScalarField& ScalarField::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

ScalarField& ScalarField::operator+=(double c) {
  for (double& v : data_) v += c;
  return *this;
}

VectorField::VectorField(ScalarField first, ScalarField second) : x(std::move(first)), y(std::move(second)) {
  require_same(x, y, "VectorField");
}

double VectorField::magnitude(std::size_t k) const { return std::hypot(x[k], y[k]); }

VectorField& VectorField::operator+=(const VectorField& rhs) {
  x += rhs.x;
  y += rhs.y;
  return *this;
}

VectorField& VectorField::operator-=(const VectorField& rhs) {
  x -= rhs.x;
  y -= rhs.y;
  return *this;
}

VectorField& VectorField::operator*=(double s) {
  x *= s;
  y *= s;
  return *this;
}

double inner(const ScalarField& a, const ScalarField& b) {
  require_same(a, b, "inner");
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) acc += a[k] * b[k];
  return acc;
}

double inner(const VectorField& a, const VectorField& b) { return inner(a.x, b.x) + inner(a.y, b.y); }

Norms norms(const ScalarField& x) {
  Norms out;
  for (double v : x.values()) {
    out.l2sq += v * v;
    out.one_two += std::abs(v);
  }
  return out;
}

Norms norms(const VectorField& m) {
  Norms out;
  for (std::size_t k = 0; k < m.x.size(); ++k) {
    const double a = m.x[k];
    const double b = m.y[k];
    out.l2sq += a * a + b * b;
    out.one_two += std::sqrt(a * a + b * b);
  }
  return out;
}

ScalarField div_dirichlet(const VectorField& m) {
  const std::size_t n = m.n();
  const double inv_h = 1.0 / m.h();
  ScalarField out(n, m.h());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double dx;
      if (i == 0) {
        dx = m.x(0, j);
      } else if (i == n - 1) {
        dx = -m.x(n - 2, j);
      } else {
        dx = m.x(i, j) - m.x(i - 1, j);
      }
      double dy;
      if (j == 0) {
        dy = m.y(i, 0);
      } else if (j == n - 1) {
        dy = -m.y(i, n - 2);
      } else {
        dy = m.y(i, j) - m.y(i, j - 1);
      }
      out(i, j) = (dx + dy) * inv_h;
    }
  }
  return out;
}

VectorField grad_adjoint_dirichlet(const ScalarField& phi) {
  const std::size_t n = phi.n();
  const double inv_h = 1.0 / phi.h();
  VectorField out(n, phi.h());
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) out.x(i, j) = (phi(i + 1, j) - phi(i, j)) * inv_h;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j + 1 < n; ++j) out.y(i, j) = (phi(i, j + 1) - phi(i, j)) * inv_h;
  }
  return out;
}

VectorField grad_periodic(const ScalarField& u) {
  const std::size_t n = u.n();
  const double inv_h = 1.0 / u.h();
  VectorField out(n, u.h());
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t ip = (i + 1 == n) ? 0 : i + 1;
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t jp = (j + 1 == n) ? 0 : j + 1;
      out.x(i, j) = (u(ip, j) - u(i, j)) * inv_h;
      out.y(i, j) = (u(i, jp) - u(i, j)) * inv_h;
    }
  }
  return out;
}

ScalarField div_periodic(const VectorField& p) {
  const std::size_t n = p.n();
  const double inv_h = 1.0 / p.h();
  ScalarField out(n, p.h());
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t im = (i == 0) ? n - 1 : i - 1;
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t jm = (j == 0) ? n - 1 : j - 1;
      out(i, j) = (p.x(i, j) - p.x(im, j) + p.y(i, j) - p.y(i, jm)) * inv_h;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Kernel

Kernel::Kernel(ScalarField taps, bool normalize) : taps_(std::move(taps)) {
  if (!taps_.all_finite()) throw std::invalid_argument("Kernel: non-finite tap");
  const std::size_t n = taps_.n();
  if (normalize) {
    const double s = taps_.sum();
    if (s == 0.0) throw std::invalid_argument("Kernel: taps sum to zero, cannot normalize");
    taps_ *= 1.0 / s;
  }

  const std::size_t c = n / 2;
  identity_ = true;
  for (std::size_t i = 0; i < n && identity_; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double expect = (i == c && j == c) ? 1.0 : 0.0;
      if (taps_(i, j) != expect) {
        identity_ = false;
        break;
      }
    }
  }

  // Move the center tap to the origin before transforming.
  std::vector<double> shifted(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      shifted[i * n + j] = taps_((i + c) % n, (j + c) % n);
    }
  }
  auto& fft = detail::fft_for(n);
  spectrum_.resize(fft.spectrum_size());
  fft.forward(shifted, spectrum_);
}

Kernel Kernel::identity(std::size_t n, double h) {
  ScalarField taps(n, h);
  taps(n / 2, n / 2) = 1.0;
  return Kernel(std::move(taps), false);
}

Kernel Kernel::gaussian(std::size_t n, double sigma, double h) {
  if (!(sigma > 0.0)) throw std::invalid_argument("Kernel::gaussian: sigma must be positive");
  ScalarField taps(n, h);
  const auto c = static_cast<double>(n / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double di = static_cast<double>(i) - c;
      const double dj = static_cast<double>(j) - c;
      taps(i, j) = std::exp(-(di * di + dj * dj) / (2.0 * sigma * sigma));
    }
  }
  return Kernel(std::move(taps), true);
}

Kernel Kernel::box(std::size_t n, std::size_t radius, double h) {
  if (2 * radius + 1 > n) throw std::invalid_argument("Kernel::box: radius too large for grid");
  ScalarField taps(n, h);
  const std::size_t c = n / 2;
  for (std::size_t i = c - radius; i <= c + radius; ++i) {
    for (std::size_t j = c - radius; j <= c + radius; ++j) taps(i, j) = 1.0;
  }
  return Kernel(std::move(taps), true);
}

namespace {

ScalarField apply_spectrum(const Kernel& k, const ScalarField& u, bool conjugate) {
  if (k.n() != u.n()) throw ShapeError("convolve: kernel and field sizes differ");
  if (k.is_identity()) return u;
  auto& fft = detail::fft_for(u.n());
  std::vector<std::complex<double>> spec(fft.spectrum_size());
  fft.forward(u.values(), spec);
  const auto& ks = k.spectrum();
  for (std::size_t q = 0; q < spec.size(); ++q) spec[q] *= conjugate ? std::conj(ks[q]) : ks[q];
  ScalarField out(u.n(), u.h());
  fft.inverse(spec, out.values());
  return out;
}

}  // namespace

ScalarField convolve(const Kernel& k, const ScalarField& u) { return apply_spectrum(k, u, false); }

ScalarField convolve_adjoint(const Kernel& k, const ScalarField& u) { return apply_spectrum(k, u, true); }

}  // namespace ottv
