#pragma once

#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include "colander/error.hpp"
#include "colander/mathcore/kernel.hpp"
#include "colander/vec.hpp"

namespace colander {

// Weighted point masses. `self` holds the kernel average over each node's
// surface patch and replaces the singular value when a query hits a node.
template <int D>
struct DiscreteMeasure {
  std::vector<Vec<D>> nodes;
  std::vector<double> weights;
  std::vector<double> self;

  std::size_t size() const noexcept { return nodes.size(); }

  double total_mass() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
  }

  DiscreteMeasure translated(const Vec<D>& shift) const {
    DiscreteMeasure m = *this;
    for (auto& x : m.nodes) x = x + shift;
    return m;
  }
};

// n nodes on the sphere |x - c| = r: equal angles in the plane, a Fibonacci
// spiral in space.
template <int D>
std::vector<Vec<D>> sphere_nodes(const Vec<D>& c, double r, int n) {
  static_assert(D == 2 || D == 3, "sphere nodes are implemented for d = 2 and d = 3");
  std::vector<Vec<D>> out(n);
  if constexpr (D == 2) {
    for (int i = 0; i < n; ++i) {
      const double a = 2.0 * std::numbers::pi * i / n;
      out[i] = c + Vec<2>{r * std::cos(a), r * std::sin(a)};
    }
  } else {
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < n; ++i) {
      const double z = 1.0 - (2.0 * i + 1.0) / n;
      const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
      out[i] = c + Vec<3>{r * s * std::cos(golden * i), r * s * std::sin(golden * i), r * z};
    }
  }
  return out;
}

// Kernel average over one node's patch when a sphere of radius r carries n
// nodes. Planar patch: a segment of length h = 2 pi r / n seen from its
// midpoint, log(h/2) - 1. Spatial patch: a disc of area 4 pi r^2 / n seen from
// its center, -2/a with a the disc radius.
inline double patch_self_term(int d, double r, int n) {
  if (d == 2) {
    const double h = 2.0 * std::numbers::pi * r / n;
    return std::log(0.5 * h) - 1.0;
  }
  if (d == 3) {
    const double a = std::sqrt(4.0 * r * r / n);
    return -2.0 / a;
  }
  throw UnsupportedDimension("patch self-term is implemented for d = 2 and d = 3");
}

// Uniform probability measure on |x - c| = r.
template <int D>
DiscreteMeasure<D> uniform_sphere_measure(const Vec<D>& c, double r, int n) {
  DiscreteMeasure<D> m;
  m.nodes = sphere_nodes<D>(c, r, n);
  m.weights.assign(n, 1.0 / n);
  m.self.assign(n, patch_self_term(D, r, n));
  return m;
}

// sum_i w_i ker_d(|x - x_i|); a query that lands on a node uses its patch average.
template <int D>
double potential_eval(const DiscreteMeasure<D>& mu, const Vec<D>& x) {
  double s = 0.0;
  for (std::size_t i = 0; i < mu.nodes.size(); ++i) {
    const double t = distance(x, mu.nodes[i]);
    if (t > 0.0) {
      s += mu.weights[i] * (D == 2 ? std::log(t) : -std::pow(t, -(D - 2)));
    } else {
      if (mu.self.empty()) throw DomainError("potential evaluated at a node of a measure without patch terms");
      s += mu.weights[i] * mu.self[i];
    }
  }
  return s;
}

// Rn^{d-2} * sum over lattice points of -U_mu(x - lambda), where each measure is
// given relative to its lattice point.
template <int D>
double barrier_eval(const std::vector<std::pair<Vec<D>, DiscreteMeasure<D>>>& lattice, double Rn, const Vec<D>& x) {
  double s = 0.0;
  for (const auto& [lambda, mu] : lattice) s -= potential_eval(mu, x - lambda);
  return std::pow(Rn, D - 2) * s;
}

}  // namespace colander
