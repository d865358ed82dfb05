#pragma once

#include <cmath>
#include <string>

#include "colander/error.hpp"

namespace colander {

// Spatial dimension, d >= 2.
class Dim {
 public:
  constexpr Dim() = default;
  explicit Dim(int d) : d_(d) {
    if (d < 2) throw DomainError("dimension must be at least 2, got " + std::to_string(d));
  }
  constexpr int value() const noexcept { return d_; }
  constexpr operator int() const noexcept { return d_; }

 private:
  int d_ = 2;
};

// Capacity kernel: log t for d = 2, -t^{-(d-2)} for d >= 3.
inline double kernel_eval(Dim d, double t) {
  if (!(t > 0.0)) throw DomainError("kernel argument must be positive");
  if (d.value() == 2) return std::log(t);
  return -std::pow(t, -(d.value() - 2.0));
}

// Inverse of kernel_eval on its range.
inline double kernel_inverse(Dim d, double y) {
  if (d.value() == 2) return std::exp(y);
  if (!(y < 0.0)) throw DomainError("Newtonian kernel values are negative");
  return std::pow(-y, -1.0 / (d.value() - 2.0));
}

// Shifted kernel used for the negative wells: ker for d = 2, 1 + ker for
// d >= 3. Vanishes at t = 1 in every dimension.
inline double kernel_tilde(Dim d, double t) {
  return d.value() == 2 ? kernel_eval(d, t) : 1.0 + kernel_eval(d, t);
}

inline double kernel_tilde_inverse(Dim d, double y) {
  return d.value() == 2 ? kernel_inverse(d, y) : kernel_inverse(d, y - 1.0);
}

// Radial derivative of kernel_tilde at t = 1: max{1, d-2}.
inline double kernel_slope_at_one(Dim d) { return d.value() == 2 ? 1.0 : d.value() - 2.0; }

}  // namespace colander
