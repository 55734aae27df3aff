#include "fft.hpp"

#include <algorithm>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <new>

namespace ottv::detail {

namespace {
// FFTW's planner is not reentrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

Fft2d::Fft2d(std::size_t n) : n_(n) {
  std::lock_guard lock(planner_mutex());
  real_ = fftw_alloc_real(n_ * n_);
  spec_ = fftw_alloc_complex(spectrum_size());
  if (real_ == nullptr || spec_ == nullptr) {
    fftw_free(real_);
    fftw_free(spec_);
    throw std::bad_alloc();
  }
  const int ni = static_cast<int>(n_);
  fwd_ = fftw_plan_dft_r2c_2d(ni, ni, real_, spec_, FFTW_ESTIMATE);
  inv_ = fftw_plan_dft_c2r_2d(ni, ni, spec_, real_, FFTW_ESTIMATE);
}

Fft2d::~Fft2d() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(fwd_);
  fftw_destroy_plan(inv_);
  fftw_free(real_);
  fftw_free(spec_);
}

void Fft2d::forward(std::span<const double> in, std::span<std::complex<double>> out) {
  std::copy(in.begin(), in.end(), real_);
  fftw_execute(fwd_);
  const auto* src = reinterpret_cast<const std::complex<double>*>(spec_);
  std::copy(src, src + spectrum_size(), out.begin());
}

void Fft2d::inverse(std::span<const std::complex<double>> in, std::span<double> out) {
  // c2r destroys its input, so always work on the internal buffer.
  std::memcpy(spec_, in.data(), spectrum_size() * sizeof(fftw_complex));
  fftw_execute(inv_);
  const double scale = 1.0 / static_cast<double>(n_ * n_);
  for (std::size_t k = 0; k < n_ * n_; ++k) out[k] = real_[k] * scale;
}

Fft2d& fft_for(std::size_t n) {
  thread_local std::map<std::size_t, std::unique_ptr<Fft2d>> cache;
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<Fft2d>(n);
  return *slot;
}

}  // namespace ottv::detail
