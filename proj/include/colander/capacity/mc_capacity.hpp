#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "colander/error.hpp"
#include "colander/estimate.hpp"
#include "colander/parallel.hpp"
#include "colander/random.hpp"
#include "colander/setgen/ball_union.hpp"

namespace colander {

struct McCapacity {
  double capacity = 0.0;
  double std_error = 0.0;
  double launch_radius = 0.0;
  EstimateCI hits;  // hitting frequency from the launch sphere
};

struct McCapacityOptions {
  double launch_factor = 100.0;  // launch radius = launch_factor * diam(S)
  double delta_factor = 1e-4;  // absorption shell = delta_factor * smallest radius
  long max_steps = 100000;
};

// Newtonian capacity in R^3 from Brownian hitting: a path started uniformly on
// a sphere of radius L around S hits S with probability cap(S)/L. Walks use
// walk-on-spheres; once outside the launch sphere a walk escapes for good with
// probability 1 - L/|x|, otherwise it re-enters at a point drawn from the
// exterior harmonic measure.
template <int D>
McCapacity mc_capacity_d3(const BallUnion<D>& S, std::int64_t n_walks, std::uint64_t seed,
                          const McCapacityOptions& opt = {}) {
  if constexpr (D < 3) {
    throw UnsupportedDimension("hitting-probability capacity needs d >= 3");
  } else {
    static_assert(D == 3, "mc_capacity_d3 samples the exterior harmonic measure of R^3");
    McCapacity out;
    if (S.empty()) return out;
    if (n_walks < 1) throw PreconditionError("n_walks must be positive");

    Vec<3> lo{}, hi{};
    double rmin = S[0].radius;
    for (int k = 0; k < 3; ++k) lo[k] = hi[k] = S[0].center[k];
    for (const auto& b : S.balls()) {
      rmin = std::min(rmin, b.radius);
      for (int k = 0; k < 3; ++k) {
        lo[k] = std::min(lo[k], b.center[k] - b.radius);
        hi[k] = std::max(hi[k], b.center[k] + b.radius);
      }
    }
    const Vec<3> mid = 0.5 * (lo + hi);
    double diam = 0.0;
    for (const auto& b : S.balls()) diam = std::max(diam, 2.0 * (distance(b.center, mid) + b.radius));
    const double L = opt.launch_factor * diam;
    const double delta = opt.delta_factor * rmin;
    out.launch_radius = L;

    std::vector<std::int64_t> hit(thread_count(), 0), miss(thread_count(), 0), cut(thread_count(), 0);
    parallel_chunks(static_cast<std::size_t>(n_walks), [&](std::size_t a, std::size_t b, unsigned w) {
      for (std::size_t i = a; i < b; ++i) {
        StreamRng rng(seed, i);
        Vec<3> x = mid + L * uniform_on_sphere<3>(rng);
        int outcome = 0;  // 1 hit, -1 escape
        for (long step = 0; step < opt.max_steps && outcome == 0; ++step) {
          const Vec<3> rel = x - mid;
          const double R = norm(rel);
          if (R > L) {
            if (rng.uniform() >= L / R) {
              outcome = -1;
              break;
            }
            // Distance s to the re-entry point has density ~ s^-2 on [R-L, R+L].
            const double u = rng.uniform();
            const double inv = 1.0 / (R - L) - u * (1.0 / (R - L) - 1.0 / (R + L));
            const double s = 1.0 / inv;
            const double cos_t = std::clamp((R * R + L * L - s * s) / (2.0 * R * L), -1.0, 1.0);
            const double sin_t = std::sqrt(std::max(0.0, 1.0 - cos_t * cos_t));
            const Vec<3> e = (1.0 / R) * rel;
            const Vec<3> helper = std::abs(e[0]) < 0.9 ? Vec<3>{1.0, 0.0, 0.0} : Vec<3>{0.0, 1.0, 0.0};
            Vec<3> f = helper - dot(helper, e) * e;
            f = (1.0 / norm(f)) * f;
            const Vec<3> g{e[1] * f[2] - e[2] * f[1], e[2] * f[0] - e[0] * f[2], e[0] * f[1] - e[1] * f[0]};
            const double phi = 2.0 * std::numbers::pi * rng.uniform();
            // Re-entry lands on the launch sphere; step straight on from there.
            x = mid + L * (cos_t * e + (sin_t * std::cos(phi)) * f + (sin_t * std::sin(phi)) * g);
          }
          const double gap = S.nearest(x).gap;
          if (gap < delta) {
            outcome = 1;
            break;
          }
          x = x + gap * uniform_on_sphere<3>(rng);
        }
        if (outcome == 1)
          ++hit[w];
        else if (outcome == -1)
          ++miss[w];
        else
          ++cut[w];
      }
    });
    std::int64_t h = 0, m = 0, c = 0;
    for (std::size_t w = 0; w < hit.size(); ++w) {
      h += hit[w];
      m += miss[w];
      c += cut[w];
    }
    out.hits = EstimateCI::from_counts(h, m, c);
    out.capacity = L * out.hits.p_hat;
    out.std_error = L * out.hits.std_error;
    return out;
  }
}

}  // namespace colander
