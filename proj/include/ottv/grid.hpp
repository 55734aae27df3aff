#pragma once

// Grid functions on an n x n lattice with spacing h, and the finite-difference
// operators used by the transport and total-variation solvers.
//
// Index convention: (i, j) is row-major, i is the first ("x") direction and
// j the second ("y") direction. The first component of a VectorField pairs
// with differences along i.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace ottv {

class ScalarField {
 public:
  ScalarField() = default;
  /// Zero field. Throws std::invalid_argument for n < 2 or h <= 0.
  explicit ScalarField(std::size_t n, double h = 1.0);
  /// Throws std::invalid_argument if values.size() != n*n or any value is non-finite.
  ScalarField(std::size_t n, double h, std::vector<double> values);

  static ScalarField constant(std::size_t n, double value, double h = 1.0);

  std::size_t n() const { return n_; }
  double h() const { return h_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
  double& operator[](std::size_t k) { return data_[k]; }
  double operator[](std::size_t k) const { return data_[k]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  bool same_grid(const ScalarField& other) const { return n_ == other.n_ && h_ == other.h_; }
  bool all_finite() const;
  double sum() const;
  double mean() const;

  ScalarField& operator+=(const ScalarField& rhs);
  ScalarField& operator-=(const ScalarField& rhs);
  ScalarField& operator*=(double s);
  ScalarField& operator+=(double c);

  friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
  friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
  friend ScalarField operator*(double s, ScalarField a) { return a *= s; }
  friend ScalarField operator*(ScalarField a, double s) { return a *= s; }

  bool operator==(const ScalarField&) const = default;

 private:
  std::size_t n_ = 0;
  double h_ = 1.0;
  std::vector<double> data_;
};

struct VectorField {
  ScalarField x;
  ScalarField y;

  VectorField() = default;
  explicit VectorField(std::size_t n, double h = 1.0) : x(n, h), y(n, h) {}
  /// Throws ShapeError if the components live on different grids.
  VectorField(ScalarField first, ScalarField second);

  std::size_t n() const { return x.n(); }
  double h() const { return x.h(); }
  bool same_grid(const VectorField& other) const { return x.same_grid(other.x); }
  bool all_finite() const { return x.all_finite() && y.all_finite(); }

  /// Euclidean norm of the pixel vector at flat index k.
  double magnitude(std::size_t k) const;

  VectorField& operator+=(const VectorField& rhs);
  VectorField& operator-=(const VectorField& rhs);
  VectorField& operator*=(double s);

  friend VectorField operator+(VectorField a, const VectorField& b) { return a += b; }
  friend VectorField operator-(VectorField a, const VectorField& b) { return a -= b; }
  friend VectorField operator*(double s, VectorField a) { return a *= s; }

  bool operator==(const VectorField&) const = default;
};

struct Norms {
  double l2sq = 0.0;     // sum of squared pixel magnitudes
  double one_two = 0.0;  // sum of pixel Euclidean magnitudes
};

/// Throws ShapeError on grid mismatch.
double inner(const ScalarField& a, const ScalarField& b);
double inner(const VectorField& a, const VectorField& b);
Norms norms(const ScalarField& x);
Norms norms(const VectorField& m);

// Backward differences with homogeneous Dirichlet (zero-flux) boundary.
// Row i = 0 takes m1(0, j)/h, the last row takes -m1(n-2, j)/h; the last row
// of m1 (and last column of m2) never enters. The output sums to zero.
ScalarField div_dirichlet(const VectorField& m);
// Exact negative transpose of div_dirichlet: forward differences, zero in the
// last row (x component) and last column (y component).
VectorField grad_adjoint_dirichlet(const ScalarField& phi);

// Forward differences with wraparound.
VectorField grad_periodic(const ScalarField& u);
// Backward differences with wraparound; the negative adjoint of grad_periodic.
ScalarField div_periodic(const VectorField& p);

/// Circular convolution kernel over the full grid. Taps are center-aligned:
/// tap (n/2, n/2) multiplies the pixel itself.
class Kernel {
 public:
  /// Throws std::invalid_argument for non-finite taps or (with normalize) a
  /// zero tap sum.
  explicit Kernel(ScalarField taps, bool normalize = true);

  static Kernel identity(std::size_t n, double h = 1.0);
  /// Isotropic Gaussian with standard deviation `sigma` in pixels, periodized.
  static Kernel gaussian(std::size_t n, double sigma, double h = 1.0);
  /// Uniform (2*radius+1)^2 box.
  static Kernel box(std::size_t n, std::size_t radius, double h = 1.0);

  const ScalarField& taps() const { return taps_; }
  std::size_t n() const { return taps_.n(); }
  bool is_identity() const { return identity_; }

  /// Half spectrum of the origin-shifted taps, layout n x (n/2 + 1) row-major.
  const std::vector<std::complex<double>>& spectrum() const { return spectrum_; }
  /// Zero-frequency value, i.e. the tap sum.
  double dc_gain() const { return spectrum_.front().real(); }

 private:
  ScalarField taps_;
  std::vector<std::complex<double>> spectrum_;
  bool identity_ = false;
};

/// K * u. Throws ShapeError on grid mismatch.
ScalarField convolve(const Kernel& k, const ScalarField& u);
/// K^T * u (conjugate spectrum).
ScalarField convolve_adjoint(const Kernel& k, const ScalarField& u);

}  // namespace ottv
