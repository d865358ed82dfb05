#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "colander/capacity/measure.hpp"
#include "colander/construction/zonal.hpp"
#include "colander/error.hpp"
#include "colander/mathcore/envelope.hpp"
#include "colander/mathcore/kernel.hpp"
#include "colander/mathcore/profile.hpp"
#include "colander/setgen/ball_union.hpp"
#include "colander/setgen/shell_lattice.hpp"
#include "json.hpp"

namespace colander {

// How the well depth A at each shell is chosen.
//   green:   a fixed fraction of the smallest gap between the outward normal
//            derivatives of v and of its harmonic extension over the well, which
//            is exactly the gluing condition on the well boundary;
//   submean: bisection for the largest depth whose sub-mean-value margins stay
//            non-negative at 24 probes on and just outside the well boundary.
enum class WellPolicy { green, submean };

inline WellPolicy well_policy_from_string(const std::string& s) {
  if (s == "green") return WellPolicy::green;
  if (s == "submean") return WellPolicy::submean;
  throw ConfigError("unknown well policy '" + s + "'");
}

inline std::string to_string(WellPolicy p) { return p == WellPolicy::green ? "green" : "submean"; }

struct ConstructionOptions {
  int k_max = 12;  // outermost shell index of the lattice
  std::uint64_t seed = 0;  // lattice phases
  std::optional<double> C;  // growth constant; by default doubled from the minimal value until every shell is feasible
  int max_doublings = 12;
  WellPolicy well_policy = WellPolicy::green;
  double well_safety = 0.95;  // fraction of the gluing bound used by the green policy
  int poisson_nodes = 0;  // 0: 512 equal-angle nodes (d = 2), 256 Gauss-Legendre nodes (d = 3)
  double sentinel = -1e30;  // value returned at well centers, where the kernel term is -infinity
};

// Quantities shared by every well on one shell: v is radial, so the Poisson
// extension and the depth depend on the shell radius only.
struct ShellWell {
  int k = 0;
  double radius = 0.0;  // |lambda|
  double well_radius = 0.0;  // R0(|lambda|)
  double A = 0.0;
  double log_eps0 = 0.0;  // log eps0(|lambda|)
  double certified_log_ratio = 0.0;  // log(r / R0) for the closed-form zero radius bound
  double gluing_gap = 0.0;  // min over the well boundary of (normal derivative of v) - (of its extension)
  ZonalExtension extension;
};

template <int D>
struct Construction {
  std::shared_ptr<const Profile> profile;
  FuncSpec R0 = FuncSpec::constant(1.0);
  FuncSpec eps0 = FuncSpec::constant(0.5);
  ShellLattice<D> lattice;  // every shell the lattice produced; shells inside r1 are not used
  std::vector<ShellWell> wells;  // one entry per used shell
  BallUnion<D> well_balls;  // B(lambda, R0(|lambda|)) for every used lambda
  std::vector<int> ball_well;  // index into wells for every ball
  ConstructionOptions options;
  EnvelopeTable envelope;  // integral_1^t phi
  double C = 0.0;
  double C_minimal = 0.0;
  int doublings = 0;
  double sigma_d = 0.0;
  double r0 = 0.0;
  double r1 = 0.0;
  double inner_scale = 0.0;  // r1 - sigma_d R0(0)
  double bump_frequency = 0.0;  // pi sqrt(d - 1) / (sigma_d R(0))
  double bump_width = 0.0;  // sigma_d R(0) / 2
  double C1 = 0.0, C2 = 0.0, C3 = 0.0;
  double well_scale = 1.0;  // diagnostic multiplier on every A

  Dim dim() const { return Dim(D); }
  double v(double t) const { return std::exp(C * envelope(t)); }
  double dv(double t) const { return C * profile->phi(t) * v(t); }

  // Same function with every well depth multiplied by s; such functions are
  // not certified subharmonic and serve monotonicity diagnostics only.
  Construction with_well_scale(double s) const {
    Construction c = *this;
    c.well_scale = well_scale * s;
    return c;
  }
};

struct UValue {
  double value = 0.0;
  bool singular = false;  // evaluated at a well center
};

namespace detail {

// Boundary data of v over the well at distance L from the origin, as a
// function of the cosine of the angle to the well's outward axis.
template <int D>
auto well_boundary_data(const Construction<D>& c, double L, double R0) {
  return [&c, L, R0](double cs) { return c.v(std::sqrt(std::max(0.0, L * L + 2.0 * L * R0 * cs + R0 * R0))); };
}

// Inner branch of w at normalized offset xi = (x - lambda) / R0 with axis cosine cs.
inline double well_value(const ShellWell& w, int d, double r, double cs, double A) {
  return w.extension.value(r, cs) + A * kernel_tilde(Dim(d), r);
}

template <int D>
double v1_eval(const Construction<D>& c, const Vec<D>& x) {
  const double r = norm(x);
  const double ker = r > 0.0 ? c.C1 * kernel_tilde(Dim(D), r / c.inner_scale) : -std::numeric_limits<double>::infinity();
  double s = std::cosh(c.bump_frequency * x[0]);
  for (int j = 1; j < D; ++j) {
    if (!(std::abs(x[j]) < c.bump_width)) {
      s = 0.0;
      break;
    }
    s *= std::cos(std::numbers::pi * x[j] / (2.0 * c.bump_width));
  }
  return std::max(ker, s);
}

template <int D>
UValue w_eval(const Construction<D>& c, const Vec<D>& x) {
  if (!c.well_balls.empty()) {
    const auto nb = c.well_balls.nearest(x);
    if (nb.gap < 0.0) {
      const auto& ball = c.well_balls[nb.index];
      const ShellWell& w = c.wells[static_cast<std::size_t>(c.ball_well[nb.index])];
      const Vec<D> off = x - ball.center;
      const double r = norm(off) / ball.radius;
      if (r == 0.0) return {c.options.sentinel, true};
      const double cs = dot(off, ball.center) / (norm(off) * norm(ball.center));
      return {well_value(w, D, r, cs, c.well_scale * w.A), false};
    }
  }
  return {c.v(norm(x)), false};
}

// Smallest over the well boundary of d_n v - d_n (P v), in units of the unit ball.
inline double gluing_gap(const ShellWell& w, const std::function<double(double)>& dv, int samples = 2049) {
  double gap = std::numeric_limits<double>::infinity();
  const double L = w.radius, R0 = w.well_radius;
  for (int i = 0; i < samples; ++i) {
    const double cs = std::cos(std::numbers::pi * i / (samples - 1));
    const double y = std::sqrt(std::max(0.0, L * L + 2.0 * L * R0 * cs + R0 * R0));
    const double outer = y > 0.0 ? R0 * dv(y) * (L * cs + R0) / y : 0.0;
    gap = std::min(gap, outer - w.extension.normal_derivative(cs));
  }
  return gap;
}

}  // namespace detail

template <int D>
UValue u_eval_flagged(const Construction<D>& c, const Vec<D>& x) {
  if (norm(x) <= c.r1) return {detail::v1_eval(c, x), false};
  const UValue w = detail::w_eval(c, x);
  if (w.singular) return w;
  return {c.C2 * w.value - c.C3, false};
}

template <int D>
double u_eval(const Construction<D>& c, const Vec<D>& x) {
  return u_eval_flagged(c, x).value;
}

struct SubmeanResult {
  double worst_margin = std::numeric_limits<double>::infinity();
  std::vector<double> margins;  // one per radius
  double scale = 0.0;  // largest |u| seen, for judging rounding
};

// Spherical average of u over dB(x, r) by an equal-angle (d = 2) or Fibonacci
// (d = 3) rule, minus u(x).
template <int D>
SubmeanResult submean_check(const Construction<D>& c, const Vec<D>& x, const std::vector<double>& radii, int quad_nodes) {
  SubmeanResult out;
  const double ux = u_eval(c, x);
  out.scale = std::abs(ux);
  for (double r : radii) {
    if (!(r > 0.0)) throw PreconditionError("sub-mean radii must be positive");
    double s = 0.0;
    for (const auto& p : sphere_nodes<D>(x, r, quad_nodes)) {
      const double up = u_eval(c, p);
      out.scale = std::max(out.scale, std::abs(up));
      s += up;
    }
    const double m = s / quad_nodes - ux;
    out.margins.push_back(m);
    out.worst_margin = std::min(out.worst_margin, m);
  }
  return out;
}

struct ZeroRadius {
  double radius = 0.0;
  double log_ratio = -std::numeric_limits<double>::infinity();  // log(radius / R0)
  double certified_log_ratio = -std::numeric_limits<double>::infinity();  // closed-form lower bound
};

namespace detail {

// Largest normalized radius q in (0, 1] with max over |xi| = q of the inner
// branch at most the level, by 64 bisection steps on k = ker~(q). The branch
// maximum over a sphere grows with q, so the sign change is unique.
inline double zero_kernel_level(const ShellWell& w, int d, double A, double level) {
  auto excess = [&](double k) {
    const double q = kernel_tilde_inverse(Dim(d), k);
    double m = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 128; ++i) m = std::max(m, w.extension.value(q, std::cos(std::numbers::pi * i / 128)));
    return m + A * k - level;
  };
  if (excess(0.0) <= 0.0) return 0.0;
  const double vmax = std::max(w.extension.value(1.0, 1.0), w.extension.coefficients()[0]);
  double lo = std::min(-1.0, (level - vmax) / A - 1.0);
  while (excess(lo) > 0.0) lo *= 2.0;
  double hi = 0.0;
  for (int it = 0; it < 64; ++it) {
    const double mid = 0.5 * (lo + hi);
    (excess(mid) <= 0.0 ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace detail

// Zero radius of the well at lattice point lambda: the largest r with u <= 0 on
// B(lambda, r) according to the sampled sphere maximum of the inner branch.
template <int D>
ZeroRadius zero_radius(const Construction<D>& c, const Vec<D>& lambda) {
  if (c.well_balls.empty()) throw PreconditionError("the construction has no wells");
  const auto nb = c.well_balls.nearest(lambda);
  const auto& ball = c.well_balls[nb.index];
  if (distance(ball.center, lambda) > 1e-9 * std::max(1.0, norm(lambda)))
    throw PreconditionError("point is not a lattice point of the construction");
  const ShellWell& w = c.wells[static_cast<std::size_t>(c.ball_well[nb.index])];
  ZeroRadius z;
  z.certified_log_ratio = w.certified_log_ratio;
  const double A = c.well_scale * w.A;
  const double level = c.C3 / c.C2;
  if (!(A > 0.0)) {
    // Without a well the extension of positive data stays above the level.
    if (w.extension.coefficients()[0] > level) return z;
    throw ConstructionInfeasible("u is positive at no point of the well", w.k);
  }
  const double k = detail::zero_kernel_level(w, D, A, level);
  z.log_ratio = D == 2 ? k : -std::log1p(-k);
  z.radius = ball.radius * std::exp(z.log_ratio);
  return z;
}

namespace detail {

// Closed-form zero radius bound: P v <= max of v over the well boundary.
inline double certified_log_ratio(const ShellWell& w, int d, double level, double vmax) {
  const double k = (level - vmax) / w.A;
  if (k >= 0.0) return 0.0;
  return d == 2 ? k : -std::log1p(-k);
}

}  // namespace detail

// Builds u for the profile (R, eps) with wells of radius R0 = R/7 and target
// ratio eps0(t) = 7 eps(t/2).
template <int D>
Construction<D> build_construction(const Profile& p, const ConstructionOptions& opt = {}) {
  static_assert(D == 2 || D == 3, "constructions are implemented for d = 2 and d = 3");
  if (p.d().value() != D) throw PreconditionError("profile dimension does not match");
  if (opt.k_max < 2) throw PreconditionError("k_max must be at least 2");
  if (!(opt.well_safety > 0.0 && opt.well_safety <= 1.0)) throw PreconditionError("well_safety must lie in (0, 1]");

  Construction<D> c;
  c.profile = std::make_shared<const Profile>(p);
  c.options = opt;
  c.R0 = p.R().scaled(1.0 / 7.0);
  c.eps0 = p.eps().arg_scaled(0.5).scaled(7.0);
  // The well profile (R0, eps0) rejects eps0 >= 1 through its own validation.
  const Profile well_profile{Dim(D), c.R0, c.eps0};
  c.lattice = make_shell_lattice<D>(well_profile, c.R0, opt.k_max, opt.seed);
  c.r0 = c.lattice.r0;
  if (c.lattice.shells.empty()) throw ConstructionInfeasible("the lattice has no shell beyond r0", opt.k_max);

  const double r_max = c.lattice.shells.back().radius + 2.0 * c.lattice.shells.back().well_radius + 1.0;
  const ProfileReport rep = p.validate(std::max(10.0 * r_max, 100.0));
  if (!rep.d_inv_phi_bounded) throw ProfileError("d/dt (1/phi) is not bounded on the sampled range");
  c.C_minimal = 2.0 * std::max(2.0 * rep.sup_d_inv_phi, 1.0);
  c.envelope = EnvelopeTable(*c.profile, r_max + 1.0, 0.01);

  // r1: midpoint of [r0, inner edge of the first kept shell minus R0 + 1].
  std::size_t first = 0;
  for (; first < c.lattice.shells.size(); ++first) {
    const auto& s = c.lattice.shells[first];
    if (s.radius - 2.0 * s.well_radius - 1.0 > c.r0) break;
  }
  if (first == c.lattice.shells.size()) throw ConstructionInfeasible("no room for r1 below the shells", opt.k_max);
  {
    const auto& s = c.lattice.shells[first];
    c.r1 = 0.5 * (c.r0 + s.radius - 2.0 * s.well_radius - 1.0);
  }
  c.sigma_d = std::min(0.5, unit_ball_volume(D));
  c.inner_scale = c.r1 - c.sigma_d * c.R0(0.0);
  if (!(c.inner_scale > 0.0)) throw ConstructionInfeasible("r1 does not exceed sigma_d R0(0)", 0);
  c.bump_width = 0.5 * c.sigma_d * p.R_at(0.0);
  c.bump_frequency = std::numbers::pi * std::sqrt(D - 1.0) / (c.sigma_d * p.R_at(0.0));
  const double t1 = c.r1 / c.inner_scale;
  c.C1 = std::max(std::exp(c.r1), std::cosh(c.bump_frequency * c.r1)) / kernel_tilde(Dim(D), t1);
  // d/dr of C1 ker~(r / inner_scale) at r1.
  const double inner_slope = c.C1 * (D == 2 ? 1.0 / t1 : (D - 2.0) * std::pow(t1, -(D - 1.0))) / c.inner_scale;
  const double v1_at_r1 = c.C1 * kernel_tilde(Dim(D), t1);

  const int nodes = opt.poisson_nodes > 0 ? opt.poisson_nodes : (D == 2 ? 512 : 256);
  const double slope_one = kernel_slope_at_one(Dim(D));
  double C = opt.C.value_or(c.C_minimal);
  if (!(C > 0.0)) throw PreconditionError("C must be positive");
  const int attempts = opt.C ? 1 : opt.max_doublings + 1;
  int bad_shell = -1;
  for (int attempt = 0; attempt < attempts; ++attempt, C *= 2.0) {
    c.C = C;
    c.doublings = attempt;
    c.C2 = inner_slope / c.dv(c.r1);
    c.C3 = c.C2 * c.v(c.r1) - v1_at_r1;
    const double level = c.C3 / c.C2;
    c.wells.clear();
    bad_shell = -1;
    for (std::size_t i = first; i < c.lattice.shells.size(); ++i) {
      const auto& s = c.lattice.shells[i];
      ShellWell w;
      w.k = s.k;
      w.radius = s.radius;
      w.well_radius = s.well_radius;
      w.log_eps0 = c.eps0.log_value(s.radius);
      w.extension = ZonalExtension(D, detail::well_boundary_data(c, s.radius, s.well_radius), nodes);
      if (!std::isfinite(w.extension.coefficients()[0])) throw SolverError("v overflows on shell " + std::to_string(s.k));
      w.gluing_gap = detail::gluing_gap(w, [&c](double t) { return c.dv(t); });
      if (!(w.gluing_gap > 0.0)) {
        bad_shell = s.k;
        break;
      }
      w.A = opt.well_safety * w.gluing_gap / slope_one;
      w.certified_log_ratio = detail::certified_log_ratio(w, D, level, c.v(s.radius + s.well_radius));
      if (w.certified_log_ratio < w.log_eps0) {
        bad_shell = s.k;
        break;
      }
      c.wells.push_back(std::move(w));
    }
    if (bad_shell < 0) break;
  }
  if (bad_shell >= 0) throw ConstructionInfeasible("no growth constant makes every well deep enough", bad_shell);

  std::vector<Ball<D>> balls;
  for (std::size_t i = first; i < c.lattice.shells.size(); ++i)
    for (const auto& lam : c.lattice.shells[i].centers) {
      balls.push_back({lam, c.lattice.shells[i].well_radius});
      c.ball_well.push_back(static_cast<int>(i - first));
    }
  c.well_balls = BallUnion<D>(std::move(balls));

  if (opt.well_policy == WellPolicy::submean) {
    // Probe 24 points on and just outside one well per shell.
    for (std::size_t wi = 0; wi < c.wells.size(); ++wi) {
      ShellWell& w = c.wells[wi];
      const auto& shell = c.lattice.shells[first + wi];
      const Vec<D> lam = shell.centers.front();
      std::vector<Vec<D>> probes;
      const auto dirs = sphere_nodes<D>(Vec<D>{}, 1.0, 12);
      for (const auto& u : dirs)
        for (double f : {1.0, 1.05}) probes.push_back(lam + (f * w.well_radius) * u);
      const double green = w.A;
      auto passes = [&](double A) {
        w.A = A;
        for (const auto& x : probes) {
          const auto r = submean_check(c, x, {w.well_radius / 8.0, w.well_radius / 4.0}, D == 2 ? 256 : 1024);
          if (r.worst_margin < -1e-9 * std::max(1.0, r.scale)) return false;
        }
        return true;
      };
      double lo = 0.0, hi = 4.0 * green / opt.well_safety;
      if (passes(hi)) {
        lo = hi;
      } else {
        for (int it = 0; it < 30; ++it) {
          const double mid = 0.5 * (lo + hi);
          (passes(mid) ? lo : hi) = mid;
        }
      }
      w.A = lo;
      w.certified_log_ratio = detail::certified_log_ratio(w, D, c.C3 / c.C2, c.v(w.radius + w.well_radius));
      if (!(w.A > 0.0) || w.certified_log_ratio < w.log_eps0)
        throw ConstructionInfeasible("sub-mean well depth is too shallow", w.k);
    }
  }
  return c;
}

// Every used well as a ball of the given radius function of the shell.
template <int D, class F>
BallUnion<D> well_ball_union(const Construction<D>& c, F radius_of_well) {
  std::vector<Ball<D>> out;
  for (std::size_t i = 0; i < c.well_balls.size(); ++i) {
    const double r = radius_of_well(c.wells[static_cast<std::size_t>(c.ball_well[i])]);
    if (r > 0.0) out.push_back({c.well_balls[i].center, r});
  }
  return BallUnion<D>(std::move(out));
}

// Balls B(lambda, r_lambda) with the bisected zero radius of every well.
template <int D>
BallUnion<D> zero_balls(const Construction<D>& c) {
  std::vector<double> r(c.wells.size(), -1.0);
  for (std::size_t i = 0; i < c.well_balls.size(); ++i) {
    const auto wi = static_cast<std::size_t>(c.ball_well[i]);
    if (r[wi] < 0.0) r[wi] = zero_radius(c, c.well_balls[i].center).radius;
  }
  std::vector<Ball<D>> out;
  for (std::size_t i = 0; i < c.well_balls.size(); ++i) {
    const double ri = r[static_cast<std::size_t>(c.ball_well[i])];
    if (ri > 0.0) out.push_back({c.well_balls[i].center, ri});
  }
  return BallUnion<D>(std::move(out));
}

// Balls B(lambda, R0 eps0) whose zero set the build certifies.
template <int D>
BallUnion<D> certified_zero_balls(const Construction<D>& c) {
  return well_ball_union(c, [](const ShellWell& w) { return w.well_radius * std::exp(w.log_eps0); });
}

struct GrowthPoint {
  double rho = 0.0;
  double M_hat = 0.0;
  double ratio = 0.0;  // log M_hat / integral_1^rho phi
  bool flagged = false;  // M_hat <= 0
};

// Maximum of u over quasi-uniform points of |x| = rho.
template <int D>
double sphere_max(const Construction<D>& c, double rho, int samples) {
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& x : sphere_nodes<D>(Vec<D>{}, rho, samples)) m = std::max(m, u_eval(c, x));
  return m;
}

template <int D>
std::vector<GrowthPoint> growth_profile(const Construction<D>& c, const std::vector<double>& rhos, int samples_per_sphere) {
  std::vector<GrowthPoint> out;
  for (std::size_t i = 0; i < rhos.size(); ++i) {
    if (!(rhos[i] > c.r1)) throw PreconditionError("growth radii must exceed r1");
    if (i > 0 && !(rhos[i] > rhos[i - 1])) throw PreconditionError("growth radii must increase");
    GrowthPoint g;
    g.rho = rhos[i];
    g.M_hat = sphere_max(c, rhos[i], samples_per_sphere);
    g.flagged = !(g.M_hat > 0.0);
    g.ratio = g.flagged ? std::numeric_limits<double>::quiet_NaN() : std::log(g.M_hat) / envelope_integral(*c.profile, rhos[i]);
    out.push_back(g);
  }
  return out;
}

template <int D>
void to_json(nlohmann::json& j, const Construction<D>& c) {
  nlohmann::json shells = nlohmann::json::array();
  for (const auto& s : c.lattice.shells)
    shells.push_back({{"k", s.k}, {"radius", s.radius}, {"well_radius", s.well_radius}, {"centers", s.centers.size()}});
  nlohmann::json wells = nlohmann::json::array();
  for (const auto& w : c.wells)
    wells.push_back({{"k", w.k},
                     {"radius", w.radius},
                     {"well_radius", w.well_radius},
                     {"A", w.A},
                     {"gluing_gap", w.gluing_gap},
                     {"log_eps0", w.log_eps0},
                     {"certified_log_ratio", w.certified_log_ratio},
                     {"coefficients", w.extension.coefficients().size()}});
  j = nlohmann::json{{"d", D},
                     {"profile", c.profile->R()},
                     {"eps", c.profile->eps()},
                     {"R0", c.R0},
                     {"eps0", c.eps0},
                     {"C", c.C},
                     {"C_minimal", c.C_minimal},
                     {"doublings", c.doublings},
                     {"C1", c.C1},
                     {"C2", c.C2},
                     {"C3", c.C3},
                     {"r0", c.r0},
                     {"r1", c.r1},
                     {"sigma_d", c.sigma_d},
                     {"bump_frequency", c.bump_frequency},
                     {"bump_width", c.bump_width},
                     {"well_scale", c.well_scale},
                     {"lattice", {{"seed", c.options.seed}, {"k_max", c.options.k_max}, {"centers", c.lattice.total_centers()}, {"shells", shells}}},
                     {"A_table", wells},
                     {"quadrature",
                      {{"rule", D == 2 ? "equal-angle cosine series" : "Gauss-Legendre zonal series"},
                       {"nodes", c.wells.empty() ? 0 : c.wells.front().extension.nodes()}}},
                     {"well_policy", to_string(c.options.well_policy)},
                     {"well_safety", c.options.well_safety},
                     {"sentinel", c.options.sentinel}};
}

}  // namespace colander
