#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "colander/construction/construction.hpp"
#include "colander/construction/heart.hpp"
#include "colander/construction/zonal.hpp"
#include "colander/random.hpp"
#include "colander/setgen/recurrence.hpp"

using namespace colander;

namespace {

// R = 7 so that R0 = 1, eps = e^{-L}/7 so that eps0 = e^{-L}.
template <int D>
Profile flat_profile(double L) {
  return Profile(Dim(D), FuncSpec::constant(7.0), FuncSpec::exp_gauge(L, {0.0}, 0.0).scaled(1.0 / 7.0));
}

const Construction<2>& planar() {
  static const Construction<2> c = [] {
    ConstructionOptions o;
    o.k_max = 10;
    return build_construction<2>(flat_profile<2>(100.0), o);
  }();
  return c;
}

const Construction<3>& spatial() {
  static const Construction<3> c = [] {
    ConstructionOptions o;
    o.k_max = 6;
    return build_construction<3>(flat_profile<3>(9.0), o);
  }();
  return c;
}

double shell_radius(const Construction<2>& c, int k) {
  for (const auto& s : c.lattice.shells)
    if (s.k == k) return s.radius;
  ADD_FAILURE() << "no shell " << k;
  return 0.0;
}

template <int D>
Vec<D> random_point(StreamRng& rng, double r) {
  return r * uniform_on_sphere<D>(rng);
}

}  // namespace

TEST(ZonalExtension, ReproducesHarmonicPolynomials) {
  const ZonalExtension lin2(2, [](double c) { return c; }, 64);
  const ZonalExtension lin3(3, [](double c) { return c; }, 64);
  const ZonalExtension sq3(3, [](double c) { return c * c; }, 64);
  // cos(2 theta) = 2c^2 - 1 extends to r^2 cos(2 theta).
  const ZonalExtension sq2(2, [](double c) { return 2.0 * c * c - 1.0; }, 64);
  for (double r : {0.0, 0.3, 0.8, 1.0})
    for (double c : {-1.0, -0.4, 0.2, 0.9}) {
      EXPECT_NEAR(lin2.value(r, c), r * c, 1e-13);
      EXPECT_NEAR(lin3.value(r, c), r * c, 1e-13);
      EXPECT_NEAR(sq2.value(r, c), r * r * (2.0 * c * c - 1.0), 1e-13);
      EXPECT_NEAR(sq3.value(r, c), (r * r * (3.0 * c * c - 1.0) + 1.0) / 3.0, 1e-13);
    }
  // Rounding noise in the coefficients is weighted by the degree here.
  EXPECT_NEAR(lin2.normal_derivative(0.5), 0.5, 1e-12);
  EXPECT_NEAR(sq3.normal_derivative(1.0), 4.0 / 3.0, 1e-12);
}

TEST(ZonalExtension, CenterValueIsTheSphericalMean) {
  const auto g = [](double c) { return std::exp(c); };
  EXPECT_NEAR(ZonalExtension(2, g, 512).value(0.0, 0.3), std::cyl_bessel_i(0.0, 1.0), 1e-14);
  EXPECT_NEAR(ZonalExtension(3, g, 256).value(0.0, 0.3), std::sinh(1.0), 1e-14);
  // Boundary data are reproduced.
  const ZonalExtension e(3, g, 256);
  for (double c : {-0.95, 0.0, 0.6}) EXPECT_NEAR(e.value(1.0, c), g(c), 1e-13);
}

TEST(ZonalExtension, Errors) {
  EXPECT_THROW(ZonalExtension(4, [](double) { return 1.0; }, 64), UnsupportedDimension);
  EXPECT_THROW(ZonalExtension(2, [](double) { return 1.0; }, 8), PreconditionError);
}

TEST(Construction, ExampleProfileBuilds) {
  ConstructionOptions o;
  o.k_max = 12;
  const auto c = build_construction<2>(flat_profile<2>(9.0), o);
  EXPECT_TRUE(std::isfinite(c.C) && std::isfinite(c.r1) && std::isfinite(c.C1));
  EXPECT_GE(c.C, c.C_minimal);
  // C1 ker~(r1 / (r1 - sigma_d R0(0))) >= e^{r1}
  EXPECT_GE(c.C1 * std::log(c.r1 / (c.r1 - 0.5)), std::exp(c.r1) * (1.0 - 1e-12));
  EXPECT_GE(u_eval(c, Vec<2>{}), 1.0);
}

TEST(Construction, Invariants) {
  const auto& c = planar();
  const Profile p = flat_profile<2>(100.0);
  for (double t : {0.0, 3.0, 17.0}) {
    EXPECT_DOUBLE_EQ(c.R0(t), p.R_at(t) / 7.0);
    EXPECT_NEAR(c.eps0.log_value(t), std::log(7.0) + p.eps().log_value(t / 2.0), 1e-12);
  }
  EXPECT_DOUBLE_EQ(c.sigma_d, 0.5);
  EXPECT_DOUBLE_EQ(spatial().sigma_d, 0.5);
  // Constant R and eps: 1/phi is constant, so the minimal C is 2.
  EXPECT_DOUBLE_EQ(c.C_minimal, 2.0);
  EXPECT_GE(c.r1, c.r0);
  for (const auto& w : c.wells) EXPECT_GT(std::abs(c.r1 - w.radius), w.well_radius + 1.0);
  for (const auto& w : c.wells) {
    EXPECT_GT(w.A, 0.0);
    EXPECT_GT(w.gluing_gap, 0.0);
  }
}

TEST(Construction, OriginValue) {
  // The kernel branch is -infinity at 0 and s(0) = cosh(0) = 1.
  EXPECT_DOUBLE_EQ(u_eval(planar(), Vec<2>{}), 1.0);
  EXPECT_DOUBLE_EQ(u_eval(spatial(), Vec<3>{}), 1.0);
}

TEST(Construction, FarFieldIsTheClosedForm) {
  const auto& c = planar();
  const Vec<2> x{0.0, 7.0};  // between shells 3 and 4
  ASSERT_GT(c.well_balls.nearest(x).gap, 0.0);
  const double phi = 1.0 / (7.0 * std::sqrt(100.0 + std::log(7.0)));
  const double v = std::exp(c.C * (7.0 - 1.0) * phi);
  EXPECT_NEAR(u_eval(c, x), c.C2 * v - c.C3, 1e-9 * c.C2 * v);
}

TEST(Construction, ContinuousAcrossGluingSpheres) {
  const auto& c = planar();
  StreamRng rng(5, 0);
  for (int i = 0; i < 50; ++i) {
    const auto& b = c.well_balls[static_cast<std::size_t>(rng.uniform() * c.well_balls.size())];
    const Vec<2> dir = uniform_on_sphere<2>(rng);
    const double in = u_eval(c, b.center + (b.radius * (1.0 - 1e-12)) * dir);
    const double out = u_eval(c, b.center + (b.radius * (1.0 + 1e-12)) * dir);
    EXPECT_NEAR(in, out, 1e-6);
  }
  for (int i = 0; i < 20; ++i) {
    const Vec<2> dir = uniform_on_sphere<2>(rng);
    EXPECT_NEAR(u_eval(c, (c.r1 * (1.0 - 1e-13)) * dir), u_eval(c, (c.r1 * (1.0 + 1e-13)) * dir), 1e-6);
  }
  const auto& s = spatial();
  for (int i = 0; i < 20; ++i) {
    const auto& b = s.well_balls[static_cast<std::size_t>(rng.uniform() * s.well_balls.size())];
    const Vec<3> dir = uniform_on_sphere<3>(rng);
    EXPECT_NEAR(u_eval(s, b.center + (b.radius * (1.0 - 1e-12)) * dir),
                u_eval(s, b.center + (b.radius * (1.0 + 1e-12)) * dir), 1e-6);
  }
}

TEST(Construction, SubMeanValueAtTwoHundredProbes) {
  const auto& c = planar();
  const double outer = shell_radius(c, c.options.k_max - 1);
  StreamRng rng(11, 0);
  double worst = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 200; ++i) {
    Vec<2> x;
    const auto& b = c.well_balls[static_cast<std::size_t>(rng.uniform() * c.well_balls.size())];
    const Vec<2> dir = uniform_on_sphere<2>(rng);
    switch (i % 3) {
      case 0:  // anywhere beyond r1
        x = random_point<2>(rng, c.r1 + 0.3 + (outer - c.r1 - 0.3) * rng.uniform());
        break;
      case 1:  // inside a well, away from its center
        x = b.center + ((0.3 + 0.4 * rng.uniform()) * b.radius) * dir;
        break;
      default:  // on a gluing sphere
        x = b.center + b.radius * dir;
    }
    const auto r = submean_check(c, x, {c.R0(norm(x)) / 8.0, c.R0(norm(x)) / 4.0}, 512);
    worst = std::min(worst, r.worst_margin);
    EXPECT_GE(r.worst_margin, -1e-6) << x[0] << "," << x[1];
  }
  RecordProperty("worst_margin", std::to_string(worst));
}

TEST(Construction, SubMeanExamples) {
  const auto& c = planar();
  // Far field: the margin of a smooth subharmonic v is positive.
  EXPECT_GE(submean_check(c, Vec<2>{0.0, 7.0}, {0.05, 0.1}, 512).worst_margin, -1e-8);
  // A sphere around a well center sees values far above the center value.
  const Vec<2> lam = c.well_balls[0].center;
  const Vec<2> near_center = lam + Vec<2>{1e-9, 0.0};
  EXPECT_GT(submean_check(c, near_center, {0.125, 0.25}, 512).worst_margin, 1.0);
}

TEST(Construction, ZeroRadiusAtTenShells) {
  const auto& c = planar();
  StreamRng rng(3, 0);
  for (int i = 0; i < 10; ++i) {
    const auto& b = c.well_balls[static_cast<std::size_t>(rng.uniform() * c.well_balls.size())];
    const auto z = zero_radius(c, b.center);
    const double log_eps0 = c.eps0.log_value(norm(b.center));
    EXPECT_GE(z.log_ratio, log_eps0);
    EXPECT_GE(z.log_ratio, z.certified_log_ratio - 1e-9);
    EXPECT_GE(z.certified_log_ratio, log_eps0);
    // Direct evaluation of the inner branch in well coordinates, where radii
    // far below the spacing of doubles near lambda stay resolvable.
    const auto& w = c.wells[static_cast<std::size_t>(c.ball_well[c.well_balls.nearest(b.center).index])];
    auto branch_max = [&](double log_q) {
      double m = -std::numeric_limits<double>::infinity();
      for (int j = 0; j <= 256; ++j) {
        const double cs = std::cos(std::numbers::pi * j / 256);
        m = std::max(m, c.C2 * (w.extension.value(std::exp(log_q), cs) + w.A * log_q) - c.C3);
      }
      return m;
    };
    EXPECT_LE(branch_max(z.log_ratio - 1e-3), 0.0);
    EXPECT_GT(branch_max(z.log_ratio + 1e-2), 0.0);
  }
  const auto& s = spatial();
  for (std::size_t i = 0; i < s.well_balls.size(); i += 97) {
    const auto z = zero_radius(s, s.well_balls[i].center);
    EXPECT_GE(z.log_ratio, s.eps0.log_value(norm(s.well_balls[i].center)));
    double in = -std::numeric_limits<double>::infinity();
    for (const auto& y : sphere_nodes<3>(s.well_balls[i].center, 0.999 * z.radius, 400)) in = std::max(in, u_eval(s, y));
    EXPECT_LE(in, 0.0);
  }
}

TEST(Construction, ZeroRadiusUnderWellScaling) {
  const auto& c = planar();
  const Vec<2> lam = c.well_balls[7].center;
  EXPECT_EQ(zero_radius(c.with_well_scale(0.0), lam).radius, 0.0);
  double prev = 0.0;
  for (double s : {0.25, 0.5, 1.0, 2.0, 4.0}) {
    const double r = zero_radius(c.with_well_scale(s), lam).radius;
    EXPECT_GE(r, prev) << s;
    prev = r;
  }
  EXPECT_THROW(zero_radius(c, lam + Vec<2>{0.3, 0.0}), PreconditionError);
}

TEST(Construction, VolumeRecurrenceAtHundredProbes) {
  const auto& c = planar();
  const BallUnion<2> Z = zero_balls(c);
  EXPECT_EQ(Z.size(), c.well_balls.size());
  const double outer = shell_radius(c, c.options.k_max - 1);
  StreamRng rng(17, 0);
  std::vector<Vec<2>> probes;
  for (int i = 0; i < 100; ++i) probes.push_back(random_point<2>(rng, c.r1 + (outer - c.r1) * rng.uniform()));
  const auto rep = recurrence_check(Z, *c.profile, probes, RecurrenceMode::volume, {}, 23);
  EXPECT_TRUE(rep.all_pass()) << rep.failures() << " failures";
}

TEST(Construction, GrowthRatioDoesNotIncrease) {
  const auto& c = planar();
  std::vector<double> rhos;
  for (int k = 5; k <= 10; ++k) rhos.push_back(shell_radius(c, k));
  const auto g = growth_profile(c, rhos, 2048);
  ASSERT_EQ(g.size(), 6u);
  for (const auto& p : g) {
    EXPECT_FALSE(p.flagged);
    EXPECT_GT(p.ratio, 0.0);
    EXPECT_LT(p.ratio, 10.0 * c.C);
  }
  EXPECT_LE(g[5].ratio, g[3].ratio);
  // Far-field sphere: the maximum is the closed form.
  const double rho = 15.0;
  EXPECT_NEAR(growth_profile(c, {rho}, 2048)[0].M_hat, c.C2 * c.v(rho) - c.C3, 1e-9 * c.C2 * c.v(rho));
  EXPECT_THROW(growth_profile(c, {c.r1}, 64), PreconditionError);
  EXPECT_THROW(growth_profile(c, {10.0, 9.0}, 64), PreconditionError);
}

TEST(Construction, HeartInequality) {
  const auto& c = planar();
  WoSConfig cfg;
  cfg.n_walks = 20000;
  cfg.delta = 1e-3;
  cfg.seed = 29;
  for (int k : {5, 8}) {
    const double rho = shell_radius(c, k);
    const auto h = heart_check(c, zero_set_colander(c, rho), cfg);
    EXPECT_GE(h.lhs, 1.0);
    EXPECT_TRUE(h.holds) << "rho " << rho << ": " << h.lhs << " > " << h.rhs;
  }
  // Without wells nothing is removed, omega = 1 and the maximum principle applies.
  const auto flat = c.with_well_scale(0.0);
  const auto h = heart_check(flat, Colander<2>(shell_radius(c, 5), BallUnion<2>{}), cfg);
  EXPECT_EQ(h.omega.p_hat, 1.0);
  EXPECT_TRUE(h.holds);
  EXPECT_THROW(heart_check(c, Colander<2>(c.r1, BallUnion<2>{}), cfg), PreconditionError);
}

TEST(Construction, RejectsUnsuitableProfiles) {
  // 1/phi = 7 (1+t)^2 has an unbounded derivative.
  const Profile steep(Dim(2), FuncSpec::constant(7.0), FuncSpec::exp_gauge(1.0, {4.0}, 1.0).scaled(1.0 / 7.0));
  EXPECT_THROW(build_construction<2>(steep), ProfileError);
  // eps0 = 7 * 0.2 >= 1.
  const Profile wide(Dim(2), FuncSpec::constant(7.0), FuncSpec::constant(0.2));
  EXPECT_THROW(build_construction<2>(wide), ProfileError);
  ConstructionOptions o;
  o.k_max = 1;
  EXPECT_THROW(build_construction<2>(flat_profile<2>(9.0), o), PreconditionError);
}

TEST(Construction, SubmeanPolicyBuilds) {
  ConstructionOptions o;
  o.k_max = 5;
  o.well_policy = WellPolicy::submean;
  const auto c = build_construction<2>(flat_profile<2>(100.0), o);
  for (const auto& w : c.wells) {
    EXPECT_GT(w.A, 0.0);
    EXPECT_GE(w.certified_log_ratio, w.log_eps0);
  }
  EXPECT_EQ(well_policy_from_string("green"), WellPolicy::green);
  EXPECT_THROW(well_policy_from_string("other"), ConfigError);
}

TEST(Construction, DeterministicAndManifest) {
  ConstructionOptions o;
  o.k_max = 10;
  const auto again = build_construction<2>(flat_profile<2>(100.0), o);
  const auto& c = planar();
  StreamRng rng(1, 0);
  for (int i = 0; i < 50; ++i) {
    const Vec<2> x = random_point<2>(rng, 20.0 * rng.uniform());
    EXPECT_EQ(u_eval(c, x), u_eval(again, x));
  }
  const nlohmann::json j = c;
  for (const char* k : {"C", "C1", "C2", "C3", "r0", "r1", "sigma_d", "A_table", "lattice", "quadrature"})
    EXPECT_TRUE(j.contains(k)) << k;
  EXPECT_EQ(j["A_table"].size(), c.wells.size());
  EXPECT_EQ(j["lattice"]["centers"].get<std::size_t>(), c.lattice.total_centers());
  EXPECT_EQ(j.dump(), nlohmann::json(again).dump());
}
