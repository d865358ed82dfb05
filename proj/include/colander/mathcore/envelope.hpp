#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "colander/error.hpp"
#include "colander/mathcore/profile.hpp"
#include "colander/mathcore/quadrature.hpp"

namespace colander {

inline double phi_eval(const Profile& p, double t) {
  if (t < 0.0) throw DomainError("phi is defined for t >= 0");
  return p.phi(t);
}

// Integral of phi over [1, rho].
inline double envelope_integral(const Profile& p, double rho) {
  if (!(rho >= 1.0)) throw DomainError("envelope integral needs rho >= 1");
  return integrate([&](double t) { return p.phi(t); }, 1.0, rho).value;
}

// Phi(x): integral of 1/R over [0, x].
inline double big_phi(const Profile& p, double x) {
  if (!(x >= 0.0)) throw DomainError("big_phi needs x >= 0");
  return integrate([&](double t) { return 1.0 / p.R_at(t); }, 0.0, x).value;
}

// Tabulated antiderivative F(r) = integral_1^r phi for fast repeated
// evaluation on [0, r_max]: exact cumulative sums on a uniform knot grid plus
// an 8-point Gauss-Legendre rule on the partial cell. Beyond r_max it falls
// back to adaptive quadrature.
class EnvelopeTable {
 public:
  EnvelopeTable() = default;
  EnvelopeTable(const Profile& p, double r_max, double step)
      : profile_(&p), step_(step), r_max_(r_max) {
    const auto n = static_cast<std::size_t>(std::ceil(r_max / step)) + 1;
    knots_.resize(n + 1);
    knots_[0] = -integrate([&](double t) { return p.phi(t); }, 0.0, 1.0).value;
    for (std::size_t i = 1; i <= n; ++i)
      knots_[i] = knots_[i - 1] + gauss8((i - 1) * step, i * step);
    r_max_ = n * step;
  }

  double operator()(double r) const {
    if (r < 0.0) throw DomainError("envelope table needs r >= 0");
    if (r > r_max_) return knots_.back() + integrate([&](double t) { return profile_->phi(t); }, r_max_, r).value;
    const auto i = std::min(static_cast<std::size_t>(r / step_), knots_.size() - 2);
    return knots_[i] + gauss8(i * step_, r);
  }

 private:
  double gauss8(double a, double b) const {
    static constexpr std::array<double, 4> x{0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                                             0.9602898564975363};
    static constexpr std::array<double, 4> w{0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                                             0.1012285362903763};
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double s = 0.0;
    for (int k = 0; k < 4; ++k) s += w[k] * (profile_->phi(c - h * x[k]) + profile_->phi(c + h * x[k]));
    return s * h;
  }

  const Profile* profile_ = nullptr;
  double step_ = 1.0;
  double r_max_ = 0.0;
  std::vector<double> knots_;
};

}  // namespace colander
