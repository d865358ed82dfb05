#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "colander/error.hpp"
#include "colander/estimate.hpp"
#include "colander/parallel.hpp"
#include "colander/random.hpp"
#include "colander/setgen/colander.hpp"
#include "json.hpp"

namespace colander {

struct WoSConfig {
  double delta = 1e-4;  // absorption shell thickness
  std::int64_t n_walks = 100000;
  std::int64_t max_steps = 1000000;
  std::uint64_t seed = 0;

  void validate(double rho_outer) const {
    if (!(delta > 0.0) || !(delta <= 1e-2 * rho_outer))
      throw ConfigError("delta must lie in (0, 1e-2 * rho_outer]");
    if (n_walks < 1) throw ConfigError("n_walks must be at least 1");
    if (max_steps < 1000) throw ConfigError("max_steps must be at least 1000");
  }
};

inline void to_json(nlohmann::json& j, const WoSConfig& c) {
  j = nlohmann::json{{"delta", c.delta}, {"n_walks", c.n_walks}, {"max_steps", c.max_steps}, {"seed", c.seed}};
}

inline WoSConfig wos_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("wos config must be a JSON object");
  WoSConfig c;
  for (const auto& [k, v] : j.items()) {
    if (k == "delta")
      c.delta = v.get<double>();
    else if (k == "n_walks")
      c.n_walks = v.get<std::int64_t>();
    else if (k == "max_steps")
      c.max_steps = v.get<std::int64_t>();
    else if (k == "seed")
      c.seed = v.get<std::uint64_t>();
    else
      throw ConfigError("unknown key '" + k + "' in wos config");
  }
  return c;
}

// Walk-on-spheres in B(0, outer) minus the balls of E. Walk i draws from
// stream i of cfg.seed; the outer sphere is tested first, so balls lying
// outside B(0, outer) can never absorb a walk. Returns escape counts.
template <int D>
EstimateCI escape_walks(const BallUnion<D>& E, double outer, const Vec<D>& x0, const WoSConfig& cfg) {
  cfg.validate(outer);
  if (!(norm(x0) < outer)) throw DomainError("start point is outside the outer sphere");
  if (!E.empty() && !(E.nearest(x0).gap > 0.0)) throw DomainError("start point lies inside an obstacle");
  const unsigned workers = thread_count();
  std::vector<std::int64_t> win(workers, 0), lose(workers, 0), cut(workers, 0);
  parallel_chunks(
      static_cast<std::size_t>(cfg.n_walks),
      [&](std::size_t lo, std::size_t hi, unsigned w) {
        for (std::size_t i = lo; i < hi; ++i) {
          StreamRng rng(cfg.seed, i);
          Vec<D> x = x0;
          int outcome = 0;
          for (std::int64_t step = 0; step < cfg.max_steps; ++step) {
            const double to_outer = outer - norm(x);
            if (to_outer < cfg.delta) {
              outcome = 1;
              break;
            }
            const double to_obstacle = E.empty() ? to_outer : E.nearest(x).gap;
            if (to_obstacle < cfg.delta) {
              outcome = -1;
              break;
            }
            x = x + std::min(to_outer, to_obstacle) * uniform_on_sphere<D>(rng);
          }
          if (outcome > 0)
            ++win[w];
          else if (outcome < 0)
            ++lose[w];
          else
            ++cut[w];
        }
      },
      workers);
  std::int64_t s = 0, f = 0, c = 0;
  for (unsigned w = 0; w < workers; ++w) {
    s += win[w];
    f += lose[w];
    c += cut[w];
  }
  return EstimateCI::from_counts(s, f, c);
}

// Probability that Brownian motion from x0 leaves the colander through its outer sphere.
template <int D>
EstimateCI wos_escape(const Colander<D>& c, const Vec<D>& x0, const WoSConfig& cfg) {
  (void)signed_distance(x0, c);
  return escape_walks(c.obstacles(), c.rho_outer(), x0, cfg);
}

// Probability that Brownian motion from x hits E before leaving B(0, outer).
template <int D>
EstimateCI wos_hit(const BallUnion<D>& E, double outer, const Vec<D>& x, const WoSConfig& cfg) {
  return escape_walks(E, outer, x, cfg).complement();
}

}  // namespace colander
