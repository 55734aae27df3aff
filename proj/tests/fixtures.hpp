#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "ottv/grid.hpp"

namespace fixtures {

inline ottv::ScalarField random_field(std::size_t n, std::uint64_t seed, double h = 1.0, double lo = -1.0,
                                      double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  ottv::ScalarField f(n, h);
  for (std::size_t k = 0; k < f.size(); ++k) f[k] = dist(rng);
  return f;
}

inline ottv::VectorField random_vector(std::size_t n, std::uint64_t seed, double h = 1.0) {
  return ottv::VectorField(random_field(n, seed, h), random_field(n, seed + 7919, h));
}

inline bool inside_disc(std::size_t n, double radius, std::size_t i, std::size_t j) {
  const double c = static_cast<double>(n) / 2.0;
  const double di = static_cast<double>(i) + 0.5 - c;
  const double dj = static_cast<double>(j) + 0.5 - c;
  return di * di + dj * dj <= radius * radius;
}

/// a on a centred disc of the given radius in pixels, `background` elsewhere.
inline ottv::ScalarField disc(std::size_t n, double radius, double a, double background = 0.0) {
  ottv::ScalarField f(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) f(i, j) = inside_disc(n, radius, i, j) ? a : background;
  return f;
}

/// Three synthetic scenes: a disc, a rectangle beside a striped patch, and a
/// ramp with a sinusoidal band.
inline ottv::ScalarField scene(int kind, std::size_t n) {
  constexpr double kPi = 3.14159265358979323846;
  ottv::ScalarField f(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double x = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
      const double y = (static_cast<double>(j) + 0.5) / static_cast<double>(n);
      double value = 0.2;
      if (kind == 0) {
        if ((x - 0.5) * (x - 0.5) + (y - 0.5) * (y - 0.5) < 0.09) value = 0.8;
      } else if (kind == 1) {
        if (x > 0.2 && x < 0.6 && y > 0.3 && y < 0.8) value = 0.7;
        if (x > 0.5) value += 0.1 * std::sin(2 * kPi * 8 * y);
      } else {
        value = 0.3 + 0.4 * x;
        if (y > 0.5) value += 0.15 * std::sin(2 * kPi * 10 * x);
      }
      f(i, j) = value;
    }
  }
  return f;
}

inline ottv::ScalarField delta(std::size_t n, std::size_t i, std::size_t j, double value = 1.0, double h = 1.0) {
  ottv::ScalarField f(n, h);
  f(i, j) = value;
  return f;
}

}  // namespace fixtures
