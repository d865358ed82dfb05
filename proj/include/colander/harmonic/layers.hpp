#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "colander/error.hpp"
#include "colander/harmonic/wos.hpp"
#include "colander/mathcore/rho_sequence.hpp"
#include "colander/random.hpp"
#include "colander/setgen/colander.hpp"
#include "json.hpp"

namespace colander {

struct LayerStat {
  int k = 0;
  double rho_k = 0.0;  // rho_k of the profile; the layer sphere has radius A * rho_k
  EstimateCI inf_hat;
  EstimateCI sup_hat;
  int m_points = 0;
};

struct LayerScheme {
  double A = 2.0;
  double alpha = 1.0;
  std::vector<LayerStat> layers;
  bool alpha_hypothesis = false;  // sup_hat <= 1 - 1/alpha on every layer
};

struct LayerBounds {
  double lower = 1.0;
  double upper = 1.0;
  double lower_sigma = 0.0;
  double upper_sigma = 0.0;
  double base = 1.0;  // escape estimate from the origin through the first layer sphere
  double outer_radius = 0.0;  // A * rho_{n+1}: the bounds concern escape through this sphere
  LayerScheme scheme;
};

namespace detail {

// m equally spaced points on the sphere |x| = r, rotated by a seeded phase
// (d = 2) or a Fibonacci set under a seeded rotation (d = 3).
template <int D>
std::vector<Vec<D>> layer_points(double r, int m, std::uint64_t seed) {
  static_assert(D == 2 || D == 3, "layer sampling is implemented for d = 2 and d = 3");
  StreamRng rng(seed, 0);
  std::vector<Vec<D>> out(static_cast<std::size_t>(m));
  if constexpr (D == 2) {
    const double phase = 2.0 * std::numbers::pi * rng.uniform();
    for (int i = 0; i < m; ++i) {
      const double a = phase + 2.0 * std::numbers::pi * i / m;
      out[i] = Vec<2>{r * std::cos(a), r * std::sin(a)};
    }
  } else {
    const double yaw = 2.0 * std::numbers::pi * rng.uniform();
    const double pitch = std::acos(1.0 - 2.0 * rng.uniform());
    const double cy = std::cos(yaw), sy = std::sin(yaw), cp = std::cos(pitch), sp = std::sin(pitch);
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < m; ++i) {
      const double z = 1.0 - (2.0 * i + 1.0) / m;
      const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double x = s * std::cos(golden * i), y = s * std::sin(golden * i);
      const double x1 = cp * x + sp * z, z1 = -sp * x + cp * z;
      out[i] = Vec<3>{r * (cy * x1 - sy * y), r * (sy * x1 + cy * y), r * z1};
    }
  }
  return out;
}

}  // namespace detail

// Empirical layered bounds for escape from the origin through the sphere of
// radius A rho_{n+1}. Layer k samples m points on |x| = A rho_k and estimates
// the probability of hitting the obstacles before leaving B(0, A rho_{k+1}).
// The inf and sup over the sphere are replaced by min and max over the samples.
template <int D>
LayerBounds layer_bounds(const Colander<D>& c, double A, int n, int m_points, const WoSConfig& cfg) {
  if (!c.profile()) throw PreconditionError("layer_bounds needs a colander with a profile");
  if (n < 1) throw PreconditionError("layer_bounds needs n >= 1");
  if (m_points < 8) throw PreconditionError("layer_bounds needs at least 8 points per layer");
  if (!(A >= 1.0)) throw PreconditionError("layer scale A must be at least 1");
  const RhoSequence seq = rho_sequence(*c.profile(), n + 1);
  const BallUnion<D>& E = c.obstacles();

  LayerBounds out;
  out.outer_radius = A * seq.rho[n + 1];
  out.scheme.A = A;

  // The obstacles may reach the first layer domain; the escape probability
  // through its boundary multiplies both bounds.
  double base_rel = 0.0;
  const double r1 = A * seq.rho[1];
  if (!E.empty() && E.nearest(Vec<D>{}).gap < r1) {
    WoSConfig bc = cfg;
    bc.seed = derive_seed(cfg.seed, "layers:base");
    const EstimateCI b = escape_walks(E, r1, Vec<D>{}, bc);
    if (!(b.p_hat > 0.0)) throw AlphaError("no walk escaped the first layer");
    out.base = b.p_hat;
    base_rel = b.std_error / b.p_hat;
  }

  double max_sup = 0.0, sum_sup = 0.0, sum_inf = 0.0, var_sup = 0.0, var_inf = 0.0;
  for (int k = 1; k <= n; ++k) {
    const double inner = A * seq.rho[k], outer = A * seq.rho[k + 1];
    const auto pts = detail::layer_points<D>(inner, m_points, derive_seed(cfg.seed, "layers:points:" + std::to_string(k)));
    LayerStat st;
    st.k = k;
    st.rho_k = seq.rho[k];
    st.m_points = m_points;
    bool first = true;
    for (int j = 0; j < m_points; ++j) {
      EstimateCI h;
      if (!E.empty() && E.nearest(pts[j]).gap <= 0.0) {
        h = EstimateCI::from_counts(cfg.n_walks, 0, 0);  // the point is already in the set
      } else {
        WoSConfig pc = cfg;
        pc.seed = derive_seed(cfg.seed, "layers:walks:" + std::to_string(k) + ":" + std::to_string(j));
        h = wos_hit(E, outer, pts[j], pc);
      }
      if (first || h.p_hat < st.inf_hat.p_hat) st.inf_hat = h;
      if (first || h.p_hat > st.sup_hat.p_hat) st.sup_hat = h;
      first = false;
    }
    max_sup = std::max(max_sup, st.sup_hat.p_hat);
    sum_sup += st.sup_hat.p_hat;
    sum_inf += st.inf_hat.p_hat;
    var_sup += st.sup_hat.std_error * st.sup_hat.std_error;
    var_inf += st.inf_hat.std_error * st.inf_hat.std_error;
    out.scheme.layers.push_back(st);
  }
  if (!(max_sup < 1.0)) throw AlphaError("a layer hit estimate reached 1; the layered bound needs every sup below 1");

  const double alpha = 1.0 / (1.0 - max_sup);
  out.scheme.alpha = alpha;
  out.scheme.alpha_hypothesis = true;
  for (const auto& st : out.scheme.layers)
    if (st.sup_hat.p_hat > 1.0 - 1.0 / alpha + 1e-15) out.scheme.alpha_hypothesis = false;

  out.lower = out.base * std::exp(-alpha * sum_sup);
  out.upper = out.base * std::exp(-sum_inf);
  out.lower_sigma = out.lower * std::sqrt(alpha * alpha * var_sup + base_rel * base_rel);
  out.upper_sigma = out.upper * std::sqrt(var_inf + base_rel * base_rel);
  return out;
}

inline void to_json(nlohmann::json& j, const LayerBounds& b) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& st : b.scheme.layers)
    layers.push_back({{"k", st.k}, {"rho_k", st.rho_k}, {"inf_hat", st.inf_hat}, {"sup_hat", st.sup_hat}, {"m_points", st.m_points}});
  j = nlohmann::json{{"lower", b.lower},
                     {"upper", b.upper},
                     {"lower_sigma", b.lower_sigma},
                     {"upper_sigma", b.upper_sigma},
                     {"base", b.base},
                     {"outer_radius", b.outer_radius},
                     {"A", b.scheme.A},
                     {"alpha", b.scheme.alpha},
                     {"alpha_hypothesis", b.scheme.alpha_hypothesis},
                     {"bounds", "empirical"},
                     {"layers", layers}};
}

}  // namespace colander
