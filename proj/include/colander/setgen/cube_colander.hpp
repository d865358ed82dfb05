#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "colander/error.hpp"
#include "colander/mathcore/profile.hpp"
#include "colander/setgen/colander.hpp"

namespace colander {

namespace detail {

// Calls f(center) for every lattice cube center (i + 1/2) * side with |i_k| <= reach.
template <int D, class F>
void for_each_cube_center(double side, long reach, F&& f) {
  std::array<long, D> idx;
  idx.fill(-reach - 1);
  for (;;) {
    Vec<D> c{};
    for (int k = 0; k < D; ++k) c[k] = (static_cast<double>(idx[k]) + 0.5) * side;
    f(c);
    int k = D - 1;
    while (k >= 0 && idx[k] == reach) idx[k--] = -reach - 1;
    if (k < 0) return;
    ++idx[k];
  }
}

}  // namespace detail

// One ball of radius eps(|c|) R(|c|) * fill at the center c of every lattice
// cube contained in B(0, rho). The annulus rho_{n-1} <= |c| < rho_n uses the
// lattice of side side_factor * R(rho_n), so the cube size follows the scale R.
template <int D>
Colander<D> make_cube_colander(const Profile& p, double rho, double fill, double side_factor = 4.0) {
  if (p.d().value() != D) throw PreconditionError("profile dimension does not match");
  if (!(rho > p.R_at(0.0))) throw PreconditionError("cube colander needs rho > R(0)");
  if (!(fill > 0.0 && fill <= 1.0)) throw PreconditionError("fill must lie in (0, 1]");
  if (!(side_factor > 0.0)) throw PreconditionError("side_factor must be positive");

  std::vector<Ball<D>> balls;
  double inner = 0.0;
  while (inner < rho) {
    const double outer = inner + p.R_at(inner);
    const double side = side_factor * p.R_at(outer);
    const long reach = static_cast<long>(std::ceil(outer / side)) + 1;
    detail::for_each_cube_center<D>(side, reach, [&](const Vec<D>& c) {
      const double r = norm(c);
      if (r < inner || r >= outer) return;
      double far2 = 0.0;
      for (int k = 0; k < D; ++k) far2 += (std::abs(c[k]) + 0.5 * side) * (std::abs(c[k]) + 0.5 * side);
      if (!(std::sqrt(far2) < rho)) return;
      balls.push_back({c, p.eps_at(r) * p.R_at(r) * fill});
    });
    inner = outer;
  }
  return Colander<D>(rho, BallUnion<D>(std::move(balls)), p);
}

}  // namespace colander
