#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string_view>
#include <vector>

#include "colander/error.hpp"
#include "colander/mathcore/profile.hpp"
#include "colander/random.hpp"
#include "colander/setgen/ball_union.hpp"

namespace colander {

template <int D>
using CapacityOracle = std::function<double(const BallUnion<D>&)>;

enum class RecurrenceMode { raw, ratio, volume };

inline RecurrenceMode recurrence_mode_from_string(std::string_view s) {
  if (s == "raw") return RecurrenceMode::raw;
  if (s == "ratio") return RecurrenceMode::ratio;
  if (s == "volume") return RecurrenceMode::volume;
  throw ConfigError("unknown recurrence mode '" + std::string(s) + "'");
}

// Under-approximation of B(x, R) ∩ E by balls: members are the balls whose
// center lies in the open ball B(x, R); a member sticking out of B(x, R) is
// replaced by the largest ball inscribed in its lens with B(x, R).
template <int D>
struct ClippedSet {
  BallUnion<D> balls;
  std::size_t shrunk = 0;
};

template <int D>
ClippedSet<D> clip_to_ball(const BallUnion<D>& E, const Vec<D>& x, double R) {
  std::vector<Ball<D>> out;
  std::size_t shrunk = 0;
  for (std::size_t i : E.centers_within(x, R)) {
    const Ball<D>& b = E[i];
    const double dist = distance(b.center, x);
    if (!(dist < R)) continue;
    if (dist + b.radius <= R) {
      out.push_back(b);
      continue;
    }
    // Lens along the ray from x through the center spans [dist - r, R].
    const double inner = std::max(dist - b.radius, -R);
    const double rad = 0.5 * (R - inner);
    const double mid = 0.5 * (R + inner);
    const Vec<D> dir = dist > 0.0 ? (1.0 / dist) * (b.center - x) : unit_axis<D>(0);
    out.push_back({x + mid * dir, std::min(rad, b.radius)});
    ++shrunk;
  }
  return {BallUnion<D>(std::move(out)), shrunk};
}

// Capacity of a ball union: 0 when empty, the exact radius for a single ball,
// otherwise whatever the oracle reports.
template <int D>
double union_capacity(const BallUnion<D>& S, const CapacityOracle<D>& oracle) {
  if (S.empty()) return 0.0;
  if (S.size() == 1) return S[0].radius;
  return oracle(S);
}

template <int D>
struct ProbeResult {
  Vec<D> probe{};
  double lhs = 0.0;
  double rhs = 0.0;
  double stderr_lhs = 0.0;  // volume mode only
  std::size_t members = 0;
  std::size_t shrunk = 0;
  bool pass = false;
};

template <int D>
struct RecurrenceReport {
  RecurrenceMode mode = RecurrenceMode::ratio;
  std::vector<ProbeResult<D>> probes;

  bool all_pass() const {
    return std::all_of(probes.begin(), probes.end(), [](const auto& r) { return r.pass; });
  }
  std::size_t failures() const {
    return static_cast<std::size_t>(std::count_if(probes.begin(), probes.end(), [](const auto& r) { return !r.pass; }));
  }
};

namespace detail {

// m_d(B(x,R) ∩ E) by stratified sampling over the balls meeting B(x,R).
// A point of ball j counts when it lies in B(x,R) and in no earlier ball, so
// overlaps are not counted twice. Balls inside B(x,R) that touch no other
// candidate contribute their exact volume.
template <int D>
std::pair<double, double> clipped_volume(const BallUnion<D>& E, const Vec<D>& x, double R, std::uint64_t seed,
                                         std::uint64_t stream, long samples) {
  const auto idx = E.balls_meeting(x, R);
  std::vector<char> exact(idx.size(), 1);
  for (std::size_t a = 0; a < idx.size(); ++a) {
    const Ball<D>& b = E[idx[a]];
    if (distance(b.center, x) + b.radius > R) exact[a] = 0;
    for (std::size_t c = 0; c < idx.size() && exact[a]; ++c)
      if (c != a && distance(b.center, E[idx[c]].center) < b.radius + E[idx[c]].radius) exact[a] = 0;
  }
  const double vol_unit = unit_ball_volume(D);
  const long uncertain = std::count(exact.begin(), exact.end(), char{0});
  const long per_ball = uncertain > 0 ? std::max(1000L, samples / uncertain) : 0;
  double volume = 0.0, var = 0.0;
  StreamRng rng(seed, stream);
  for (std::size_t a = 0; a < idx.size(); ++a) {
    const Ball<D>& b = E[idx[a]];
    const double vb = vol_unit * std::pow(b.radius, D);
    if (exact[a]) {
      volume += vb;
      continue;
    }
    long hits = 0;
    for (long s = 0; s < per_ball; ++s) {
      const Vec<D> y = b.center + b.radius * uniform_in_ball<D>(rng);
      if (distance(y, x) > R) continue;
      bool earlier = false;
      for (std::size_t c = 0; c < a && !earlier; ++c)
        earlier = distance(y, E[idx[c]].center) <= E[idx[c]].radius;
      if (!earlier) ++hits;
    }
    const double f = static_cast<double>(hits) / per_ball;
    volume += vb * f;
    var += vb * vb * f * (1.0 - f) / per_ball;
  }
  return {volume, std::sqrt(var)};
}

}  // namespace detail

// Evaluates the recurrence inequality at every probe x with R = R(|x|), eps = eps(|x|):
//   raw:    C(B(x,R) ∩ E) > R eps
//   ratio:  C(B(x,R) ∩ E) / C(B(x,R)) > C(B(x,eps))
//   volume: m(B(x,R) ∩ E) / m(B(x,R)) > m(B(x,eps))
// Strict inequalities; ties fail.
template <int D>
RecurrenceReport<D> recurrence_check(const BallUnion<D>& E, const Profile& p, const std::vector<Vec<D>>& probes,
                                     RecurrenceMode mode, const CapacityOracle<D>& oracle = {},
                                     std::uint64_t seed = 0, long volume_samples = 100000) {
  if (p.d().value() != D) throw PreconditionError("profile dimension does not match");
  if (mode != RecurrenceMode::volume && !oracle) throw ConfigError("capacity modes need a capacity oracle");
  RecurrenceReport<D> rep;
  rep.mode = mode;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const Vec<D>& x = probes[i];
    const double t = norm(x);
    const double R = p.R_at(t);
    const double eps = p.eps_at(t);
    ProbeResult<D> r;
    r.probe = x;
    if (mode == RecurrenceMode::volume) {
      const auto [vol, se] = detail::clipped_volume(E, x, R, seed, i, volume_samples);
      const double ball = unit_ball_volume(D) * std::pow(R, D);
      r.members = E.balls_meeting(x, R).size();
      r.lhs = vol / ball;
      r.stderr_lhs = se / ball;
      r.rhs = unit_ball_volume(D) * std::pow(eps, D);
    } else {
      const ClippedSet<D> clip = clip_to_ball(E, x, R);
      r.members = clip.balls.size();
      r.shrunk = clip.shrunk;
      const double cap = union_capacity(clip.balls, oracle);
      if (mode == RecurrenceMode::raw) {
        r.lhs = cap;
        r.rhs = R * eps;
      } else {
        r.lhs = cap / R;
        r.rhs = eps;
      }
    }
    r.pass = r.lhs > r.rhs;
    rep.probes.push_back(r);
  }
  return rep;
}

}  // namespace colander
