#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>

#include "colander/error.hpp"
#include "colander/mathcore/profile.hpp"
#include "colander/setgen/ball_union.hpp"

namespace colander {

// B(0, rho_outer) with a union of balls removed.
template <int D>
class Colander {
 public:
  Colander(double rho_outer, BallUnion<D> obstacles, std::optional<Profile> profile = std::nullopt)
      : rho_(rho_outer), obstacles_(std::move(obstacles)), profile_(std::move(profile)) {
    if (!(rho_ > 0.0) || !std::isfinite(rho_)) throw GeometryError("rho_outer must be positive");
    if (profile_) {
      if (profile_->d().value() != D) throw GeometryError("profile dimension does not match the colander");
      if (!(rho_ > profile_->R_at(0.0))) throw GeometryError("rho_outer must exceed R(0)");
    }
    for (std::size_t i = 0; i < obstacles_.size(); ++i)
      if (!(norm(obstacles_[i].center) - obstacles_[i].radius < rho_))
        throw GeometryError("obstacle " + std::to_string(i) + " does not meet B(0, rho_outer)");
  }

  double rho_outer() const noexcept { return rho_; }
  const BallUnion<D>& obstacles() const noexcept { return obstacles_; }
  const std::optional<Profile>& profile() const noexcept { return profile_; }

  // Same centers and outer radius, every obstacle radius multiplied by s.
  Colander with_scaled_radii(double s) const { return Colander(rho_, obstacles_.scaled_radii(s), profile_); }

 private:
  double rho_;
  BallUnion<D> obstacles_;
  std::optional<Profile> profile_;
};

struct SignedDistance {
  double to_outer;
  double to_obstacle;  // +inf without obstacles
  std::size_t nearest_obstacle_index;  // BallUnion::npos without obstacles
};

template <int D>
SignedDistance signed_distance(const Vec<D>& x, const Colander<D>& c) {
  const double to_outer = c.rho_outer() - norm(x);
  if (!(to_outer > 0.0)) throw DomainError("point is outside B(0, rho_outer)");
  const auto nb = c.obstacles().nearest(x);
  if (!(nb.gap > 0.0)) throw DomainError("point lies inside an obstacle");
  return {to_outer, nb.gap, nb.index};
}

}  // namespace colander
