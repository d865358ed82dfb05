#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include <boost/math/special_functions/legendre.hpp>

#include "colander/error.hpp"

namespace colander {

// Harmonic extension into the unit ball of boundary data that depends only on
// c = cos(angle to a fixed axis). In the plane the data are expanded in
// cos(n theta) from an equal-angle rule; in space in Legendre polynomials P_l(c)
// from a Gauss-Legendre rule. Both are spectrally accurate for smooth data.
class ZonalExtension {
 public:
  ZonalExtension() = default;

  ZonalExtension(int d, const std::function<double(double)>& g, int nodes) : d_(d), nodes_(nodes) {
    if (d != 2 && d != 3) throw UnsupportedDimension("zonal extensions are implemented for d = 2 and d = 3");
    if (nodes < 16) throw PreconditionError("zonal extension needs at least 16 nodes");
    if (d == 2) {
      std::vector<double> gv(nodes);
      for (int j = 0; j < nodes; ++j) gv[j] = g(std::cos(2.0 * std::numbers::pi * j / nodes));
      const int n_max = nodes / 2 - 1;
      a_.assign(n_max + 1, 0.0);
      for (int n = 0; n <= n_max; ++n) {
        double s = 0.0;
        for (int j = 0; j < nodes; ++j) s += gv[j] * std::cos(2.0 * std::numbers::pi * n * j / nodes);
        a_[n] = (n == 0 ? 1.0 : 2.0) * s / nodes;
      }
    } else {
      const auto pos = boost::math::legendre_p_zeros<double>(nodes);
      std::vector<double> t, w;
      for (double x : pos) {
        const double dp = boost::math::legendre_p_prime(nodes, x);
        const double wx = 2.0 / ((1.0 - x * x) * dp * dp);
        t.push_back(x);
        w.push_back(wx);
        if (x != 0.0) {
          t.push_back(-x);
          w.push_back(wx);
        }
      }
      std::vector<double> gv(t.size());
      for (std::size_t j = 0; j < t.size(); ++j) gv[j] = g(t[j]);
      const int l_max = nodes / 2;
      a_.assign(l_max + 1, 0.0);
      for (int l = 0; l <= l_max; ++l) {
        double s = 0.0;
        for (std::size_t j = 0; j < t.size(); ++j) s += w[j] * gv[j] * boost::math::legendre_p(l, t[j]);
        a_[l] = 0.5 * (2 * l + 1) * s;
      }
    }
    // Drop the tail that sits at the rounding level of the data.
    double gmax = 0.0;
    for (double a : a_) gmax = std::max(gmax, std::abs(a));
    const double floor = 1e-15 * gmax;
    while (a_.size() > 1 && std::abs(a_.back()) <= floor) a_.pop_back();
  }

  int d() const noexcept { return d_; }
  int nodes() const noexcept { return nodes_; }
  const std::vector<double>& coefficients() const noexcept { return a_; }

  // Extension at radius r in [0, 1] and axis cosine c.
  double value(double r, double c) const { return sum(r, c, false); }

  // Outward radial derivative on the unit sphere.
  double normal_derivative(double c) const { return sum(1.0, c, true); }

 private:
  double sum(double r, double c, bool derivative) const {
    c = std::clamp(c, -1.0, 1.0);
    double s = 0.0, rp = 1.0;
    if (d_ == 2) {
      // cos(n theta) by the Chebyshev recurrence in c = cos(theta).
      double t0 = 1.0, t1 = c;
      for (std::size_t n = 0; n < a_.size(); ++n) {
        const double tn = n == 0 ? t0 : t1;
        s += (derivative ? static_cast<double>(n) : rp) * a_[n] * tn;
        rp *= r;
        if (n >= 1) {
          const double t2 = 2.0 * c * t1 - t0;
          t0 = t1;
          t1 = t2;
        }
      }
    } else {
      double p0 = 1.0, p1 = c;
      for (std::size_t l = 0; l < a_.size(); ++l) {
        const double pl = l == 0 ? p0 : p1;
        s += (derivative ? static_cast<double>(l) : rp) * a_[l] * pl;
        rp *= r;
        if (l >= 1) {
          const double p2 = ((2.0 * l + 1.0) * c * p1 - l * p0) / (l + 1.0);
          p0 = p1;
          p1 = p2;
        }
      }
    }
    return s;
  }

  int d_ = 2;
  int nodes_ = 0;
  std::vector<double> a_;
};

}  // namespace colander
