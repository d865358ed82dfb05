#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "colander/construction/construction.hpp"
#include "colander/estimate.hpp"
#include "colander/harmonic/wos.hpp"
#include "colander/setgen/colander.hpp"
#include "json.hpp"

namespace colander {

// B(0, rho) with the certified zero balls B(lambda, R0 eps0) that meet it removed.
template <int D>
Colander<D> zero_set_colander(const Construction<D>& c, double rho) {
  const auto zeros = certified_zero_balls(c);
  std::vector<Ball<D>> kept;
  for (const auto& b : zeros.balls())
    if (norm(b.center) - b.radius < rho) kept.push_back(b);
  return Colander<D>(rho, BallUnion<D>(std::move(kept)));
}

struct HeartCheck {
  double rho = 0.0;
  double lhs = 0.0;  // u(0)
  double rhs = 0.0;  // M_hat(rho) * min(1, p_hat + 3 stderr)
  double M_hat = 0.0;
  EstimateCI omega;
  bool holds = false;
};

inline void to_json(nlohmann::json& j, const HeartCheck& h) {
  j = nlohmann::json{{"rho", h.rho},   {"lhs", h.lhs},         {"rhs", h.rhs},
                     {"M_hat", h.M_hat}, {"p_hat", h.omega.p_hat}, {"stderr", h.omega.std_error},
                     {"holds", h.holds}};
}

// u(0) <= M_u(rho) * omega(0, outer sphere; colander), with u <= 0 on the
// removed balls. The harmonic measure is replaced by its upper 3-sigma value.
template <int D>
HeartCheck heart_check(const Construction<D>& c, const Colander<D>& col, const WoSConfig& cfg,
                       int samples_per_sphere = D == 2 ? 4096 : 8192) {
  const double rho = col.rho_outer();
  if (!(rho > c.r1)) throw PreconditionError("heart_check needs rho > r1");
  HeartCheck h;
  h.rho = rho;
  h.lhs = u_eval(c, Vec<D>{});
  h.M_hat = sphere_max(c, rho, samples_per_sphere);
  h.omega = wos_escape(col, Vec<D>{}, cfg);
  h.rhs = h.M_hat * std::min(1.0, h.omega.p_hat + 3.0 * h.omega.std_error);
  h.holds = h.lhs <= h.rhs;
  return h;
}

}  // namespace colander
