#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>

#include "colander/error.hpp"

namespace colander {

// Adaptive Gauss-Kronrod (7/15) quadrature of f over [a, b]. Bisection depth
// is capped at 20 levels, i.e. at most 2^20 subintervals.
struct QuadratureResult {
  double value;
  double error;
};

template <class F>
QuadratureResult integrate(F&& f, double a, double b, double rel_tol = 1e-12) {
  if (a == b) return {0.0, 0.0};
  double err = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, 20, rel_tol, &err);
  if (!std::isfinite(v)) throw SolverError("quadrature produced a non-finite value");
  return {v, err};
}

}  // namespace colander
