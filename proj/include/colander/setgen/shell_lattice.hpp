#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "colander/error.hpp"
#include "colander/mathcore/func_spec.hpp"
#include "colander/mathcore/profile.hpp"
#include "colander/random.hpp"
#include "colander/setgen/ball_union.hpp"

namespace colander {

template <int D>
struct Shell {
  int k = 0;
  double radius = 0.0;  // 2 rho_k
  double well_radius = 0.0;  // R0 at the shell radius
  std::vector<Vec<D>> centers;
};

// Points on spheres |x| = 2 rho_k, pairwise further apart than
// R0(|a|) + R0(|b|) + 2, and within 4 R0 of every point of their sphere.
template <int D>
struct ShellLattice {
  std::vector<Shell<D>> shells;
  double r0 = 0.0;  // R0(t) <= t/2 for every t >= r0 on the scanned range

  std::size_t total_centers() const {
    std::size_t n = 0;
    for (const auto& s : shells) n += s.centers.size();
    return n;
  }
};

// Smallest grid point t in [0, t_max] with R0(s) <= s/2 for every grid s >= t,
// refined by bisection on the last crossing.
inline double half_radius_threshold(const FuncSpec& R0, double t_max) {
  const int n = 4096;
  auto excess = [&](double t) { return R0(t) - 0.5 * t; };
  int last_bad = -1;
  for (int i = 0; i <= n; ++i)
    if (excess(t_max * i / n) > 0.0) last_bad = i;
  if (last_bad < 0) return 0.0;
  if (last_bad == n) throw GeometryError("R0(t) <= t/2 never holds on the scanned range");
  double lo = t_max * last_bad / n, hi = t_max * (last_bad + 1) / n;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    (excess(mid) > 0.0 ? lo : hi) = mid;
  }
  return hi;
}

namespace detail {

inline std::vector<Vec<2>> circle_centers(double radius, double sep, double cover, double phase) {
  // Largest count whose neighbouring chord still exceeds the separation.
  int n = 1;
  if (2.0 * radius > sep) n = static_cast<int>(std::floor(std::numbers::pi / std::asin(std::min(1.0, sep / (2.0 * radius)))));
  while (n > 1 && !(2.0 * radius * std::sin(std::numbers::pi / n) > sep)) --n;
  const double reach = n == 1 ? 2.0 * radius : 2.0 * radius * std::sin(std::numbers::pi / (2.0 * n));
  if (reach > cover) throw GeometryError("no equal-angle placement on radius " + std::to_string(radius) + " both separates and covers");
  std::vector<Vec<2>> out(n);
  for (int i = 0; i < n; ++i) {
    const double a = phase + 2.0 * std::numbers::pi * i / n;
    out[i] = {radius * std::cos(a), radius * std::sin(a)};
  }
  return out;
}

inline std::vector<Vec<3>> fibonacci_sphere(int n, double radius) {
  std::vector<Vec<3>> out(n);
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / n;
    const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double a = golden * i;
    out[i] = {radius * s * std::cos(a), radius * s * std::sin(a), radius * z};
  }
  return out;
}

inline Vec<3> rotate(const Vec<3>& x, double yaw, double pitch) {
  const double cy = std::cos(yaw), sy = std::sin(yaw), cp = std::cos(pitch), sp = std::sin(pitch);
  const Vec<3> a{cy * x[0] - sy * x[1], sy * x[0] + cy * x[1], x[2]};
  return {cp * a[0] + sp * a[2], a[1], -sp * a[0] + cp * a[2]};
}

// Rotated Fibonacci sets are tried from the densest count downwards; the first
// that is strictly separated and whose largest gap over a fine candidate mesh
// stays below the covering radius is kept. If none is found, points spaced a
// bit above the separation are pruned and topped up wherever a hole is left.
inline std::vector<Vec<3>> sphere_centers(double radius, double sep, double cover, double yaw, double pitch) {
  auto make_union = [](const std::vector<Vec<3>>& pts) {
    std::vector<Ball<3>> b;
    b.reserve(pts.size());
    for (const auto& p : pts) b.push_back({p, 1e-300});
    return BallUnion<3>(std::move(b));
  };
  const double area = 4.0 * std::numbers::pi * radius * radius;
  const double h = 0.1 * std::min(cover, sep);
  const int m = std::max(64, static_cast<int>(std::lround(area / (h * h))));
  const std::vector<Vec<3>> candidates = fibonacci_sphere(m, radius);

  const double cell = 0.5 * std::sqrt(3.0);
  const int n_hi = static_cast<int>(area / (cell * sep * sep)) + 2;
  const int n_lo = std::max(1, static_cast<int>(area / (cell * 2.25 * cover * cover)));
  for (int n = n_hi; n >= n_lo; --n) {
    std::vector<Vec<3>> pts = fibonacci_sphere(n, radius);
    for (auto& p : pts) p = rotate(p, yaw, pitch);
    const BallUnion<3> index = make_union(pts);
    bool separated = true;
    for (std::size_t i = 0; separated && i < pts.size(); ++i) separated = index.centers_within(pts[i], sep).size() == 1;
    if (!separated) continue;
    double worst = 0.0;
    for (const auto& c : candidates) worst = std::max(worst, index.nearest(c).gap);
    if (worst <= cover - h) return pts;
  }

  auto prune = [&](double spacing) {
    const int n = std::max(1, static_cast<int>(std::lround(area / (0.5 * std::sqrt(3.0) * spacing * spacing))));
    std::vector<Vec<3>> seed_pts = fibonacci_sphere(n, radius);
    for (auto& p : seed_pts) p = rotate(p, yaw, pitch);
    // Greedy prune; accepted points are indexed in batches, the tail scanned directly.
    std::vector<Vec<3>> kept;
    BallUnion<3> pruned;
    std::size_t indexed = 0;
    for (const auto& p : seed_pts) {
      bool ok = pruned.empty() || pruned.nearest(p).gap > sep;
      for (std::size_t j = indexed; ok && j < kept.size(); ++j) ok = distance(p, kept[j]) > sep;
      if (!ok) continue;
      kept.push_back(p);
      if (kept.size() - indexed >= 256) {
        pruned = make_union(kept);
        indexed = kept.size();
      }
    }
    return kept;
  };

  std::vector<Vec<3>> kept = prune(std::min(1.3 * sep, 1.2 * cover));
  BallUnion<3> index = make_union(kept);
  std::vector<Vec<3>> added;
  for (const auto& c : candidates) {
    double gap = index.size() ? index.nearest(c).gap : std::numeric_limits<double>::infinity();
    for (const auto& a : added) gap = std::min(gap, distance(c, a));
    if (gap > cover - h && gap > sep) {
      added.push_back(c);
      if (added.size() > 128) {
        kept.insert(kept.end(), added.begin(), added.end());
        added.clear();
        index = make_union(kept);
      }
    }
  }
  kept.insert(kept.end(), added.begin(), added.end());
  return kept;
}

}  // namespace detail

// Checks both lattice properties; covering is tested at `samples` random
// directions per shell. Throws GeometryError on the first failure.
template <int D>
void verify_shell_lattice(const ShellLattice<D>& lat, std::uint64_t seed, int samples = 10000) {
  for (const auto& s : lat.shells) {
    const double sep = 2.0 * s.well_radius + 2.0;
    std::vector<Ball<D>> b;
    for (const auto& c : s.centers) b.push_back({c, 1e-300});
    const BallUnion<D> idx(b);
    for (std::size_t i = 0; i < s.centers.size(); ++i) {
      const auto near = idx.centers_within(s.centers[i], sep);
      if (near.size() != 1)
        throw GeometryError("shell " + std::to_string(s.k) + ": separation violated at center " + std::to_string(i));
    }
    StreamRng rng(seed, static_cast<std::uint64_t>(s.k));
    for (int i = 0; i < samples; ++i) {
      const Vec<D> x = s.radius * uniform_on_sphere<D>(rng);
      if (!(idx.nearest(x).gap <= 4.0 * s.well_radius))
        throw GeometryError("shell " + std::to_string(s.k) + ": covering violated");
    }
  }
}

// Shells at radius 2 rho_k for k = 1..k_max with rho_k >= r0.
template <int D>
ShellLattice<D> make_shell_lattice(const Profile& p, const FuncSpec& R0, int k_max, std::uint64_t seed) {
  static_assert(D == 2 || D == 3, "shell lattices are implemented for d = 2 and d = 3");
  if (p.d().value() != D) throw PreconditionError("profile dimension does not match");
  if (k_max < 0) throw PreconditionError("k_max must be non-negative");
  std::vector<double> rho{0.0};
  for (int k = 0; k < k_max; ++k) rho.push_back(rho.back() + p.R_at(rho.back()));

  ShellLattice<D> lat;
  lat.r0 = half_radius_threshold(R0, std::max(4.0 * rho.back(), 64.0 * (R0(0.0) + 1.0)));
  StreamRng rng(seed, 0);
  for (int k = 1; k <= k_max; ++k) {
    if (rho[k] < lat.r0) continue;
    Shell<D> s;
    s.k = k;
    s.radius = 2.0 * rho[k];
    s.well_radius = R0(s.radius);
    if (s.well_radius > 0.5 * s.radius) throw GeometryError("R0 exceeds half the shell radius at shell " + std::to_string(k));
    const double sep = 2.0 * s.well_radius + 2.0;
    const double cover = 4.0 * s.well_radius;
    if constexpr (D == 2) {
      s.centers = detail::circle_centers(s.radius, sep, cover, 2.0 * std::numbers::pi * rng.uniform());
    } else {
      const double yaw = 2.0 * std::numbers::pi * rng.uniform();
      const double pitch = std::numbers::pi * rng.uniform();
      s.centers = detail::sphere_centers(s.radius, sep, cover, yaw, pitch);
    }
    lat.shells.push_back(std::move(s));
  }
  verify_shell_lattice(lat, derive_seed(seed, "shell-cover"));
  return lat;
}

}  // namespace colander
