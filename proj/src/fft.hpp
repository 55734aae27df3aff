#pragma once

// Thin RAII wrapper over FFTW real-to-complex 2D transforms.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <fftw3.h>

namespace ottv::detail {

class Fft2d {
 public:
  explicit Fft2d(std::size_t n);
  ~Fft2d();
  Fft2d(const Fft2d&) = delete;
  Fft2d& operator=(const Fft2d&) = delete;

  std::size_t n() const { return n_; }
  std::size_t half() const { return n_ / 2 + 1; }
  std::size_t spectrum_size() const { return n_ * half(); }

  /// Unnormalized forward transform of an n*n real array.
  void forward(std::span<const double> in, std::span<std::complex<double>> out);
  /// Inverse transform including the 1/n^2 normalization.
  void inverse(std::span<const std::complex<double>> in, std::span<double> out);

 private:
  std::size_t n_;
  double* real_ = nullptr;
  fftw_complex* spec_ = nullptr;
  fftw_plan fwd_ = nullptr;
  fftw_plan inv_ = nullptr;
};

/// Per-thread cached transform for grid side n.
Fft2d& fft_for(std::size_t n);

}  // namespace ottv::detail
