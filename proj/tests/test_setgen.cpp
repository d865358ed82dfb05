#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "colander/setgen/cube_colander.hpp"
#include "colander/setgen/io.hpp"
#include "colander/setgen/recurrence.hpp"
#include "colander/setgen/shell_lattice.hpp"

using namespace colander;

namespace {

Profile constant_profile(int d, double R, double eps) {
  return Profile(Dim(d), FuncSpec::constant(R), FuncSpec::constant(eps));
}

template <int D>
BallUnion<D> random_union(StreamRng& rng, int n, double box, double rmax) {
  std::vector<Ball<D>> b;
  for (int i = 0; i < n; ++i) {
    Vec<D> c{};
    for (auto& x : c) x = box * (2.0 * rng.uniform() - 1.0);
    b.push_back({c, rmax * rng.uniform_pos()});
  }
  return BallUnion<D>(std::move(b));
}

// Reference for the volume estimator: plain rejection sampling in B(x, R).
template <int D>
double plain_volume_fraction(const BallUnion<D>& E, const Vec<D>& x, double R, long n) {
  StreamRng rng(77, 0);
  long hits = 0;
  for (long i = 0; i < n; ++i)
    if (E.nearest_brute(x + R * uniform_in_ball<D>(rng)).gap <= 0.0) ++hits;
  return static_cast<double>(hits) / n;
}

}  // namespace

TEST(BallUnion, RejectsNonPositiveRadius) {
  EXPECT_THROW(BallUnion<2>({{{0.0, 0.0}, 0.0}}), GeometryError);
  EXPECT_THROW(BallUnion<2>({{{0.0, 0.0}, -1.0}}), GeometryError);
}

TEST(BallUnion, NearestMatchesBruteForceExactly) {
  StreamRng rng(2024, 1);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform() * 300);
    const auto u2 = random_union<2>(rng, n, 20.0, 2.0);
    const auto u3 = random_union<3>(rng, n, 20.0, 2.0);
    for (int q = 0; q < 5; ++q) {
      const Vec<2> x2{30.0 * (2.0 * rng.uniform() - 1.0), 30.0 * (2.0 * rng.uniform() - 1.0)};
      const auto a = u2.nearest(x2), b = u2.nearest_brute(x2);
      ASSERT_EQ(a.gap, b.gap);
      ASSERT_EQ(a.index, b.index);
      const Vec<3> x3{30.0 * (2.0 * rng.uniform() - 1.0), 30.0 * (2.0 * rng.uniform() - 1.0), 30.0 * rng.uniform()};
      const auto c = u3.nearest(x3), e = u3.nearest_brute(x3);
      ASSERT_EQ(c.gap, e.gap);
      ASSERT_EQ(c.index, e.index);
    }
  }
}

TEST(BallUnion, RangeQueriesMatchBruteForce) {
  StreamRng rng(5, 5);
  const auto u = random_union<2>(rng, 500, 30.0, 1.5);
  for (int q = 0; q < 200; ++q) {
    const Vec<2> x{40.0 * (2.0 * rng.uniform() - 1.0), 40.0 * (2.0 * rng.uniform() - 1.0)};
    const double R = 10.0 * rng.uniform();
    std::vector<std::size_t> centers, meeting;
    for (std::size_t i = 0; i < u.size(); ++i) {
      if (distance(x, u[i].center) <= R) centers.push_back(i);
      if (distance(x, u[i].center) <= R + u[i].radius) meeting.push_back(i);
    }
    EXPECT_EQ(u.centers_within(x, R), centers);
    EXPECT_EQ(u.balls_meeting(x, R), meeting);
  }
}

TEST(SignedDistance, Examples) {
  const Colander<2> empty(10.0, BallUnion<2>{});
  const auto a = signed_distance(Vec<2>{3.0, 0.0}, empty);
  EXPECT_EQ(a.to_outer, 7.0);
  EXPECT_TRUE(std::isinf(a.to_obstacle));
  EXPECT_EQ(a.nearest_obstacle_index, BallUnion<2>::npos);

  const Colander<2> one(4.0, BallUnion<2>({{{0.0, 0.0}, 1.0}}));
  const auto b = signed_distance(Vec<2>{2.0, 0.0}, one);
  EXPECT_EQ(b.to_outer, 2.0);
  EXPECT_EQ(b.to_obstacle, 1.0);
  EXPECT_EQ(b.nearest_obstacle_index, 0u);

  EXPECT_THROW(signed_distance(Vec<2>{0.5, 0.0}, one), DomainError);
  EXPECT_THROW(signed_distance(Vec<2>{4.0, 0.0}, one), DomainError);
}

TEST(SignedDistance, PositiveInsideDomainAndMonotoneInRadii) {
  StreamRng rng(11, 3);
  for (int trial = 0; trial < 200; ++trial) {
    const auto u = random_union<3>(rng, 40, 6.0, 1.0);
    const Colander<3> c(12.0, u);
    const Colander<3> fat = c.with_scaled_radii(1.3);
    for (int q = 0; q < 20; ++q) {
      const Vec<3> x = 11.9 * uniform_in_ball<3>(rng);
      const auto fat_gap = fat.obstacles().nearest(x).gap;
      if (fat_gap <= 0.0) continue;
      const auto sd = signed_distance(x, c);
      EXPECT_GT(sd.to_obstacle, 0.0);
      EXPECT_GT(sd.to_outer, 0.0);
      EXPECT_EQ(sd.to_obstacle, u.nearest_brute(x).gap);
      EXPECT_LE(signed_distance(x, fat).to_obstacle, sd.to_obstacle);
    }
  }
}

TEST(Colander, RejectsObstaclesOutsideAndSmallRho) {
  EXPECT_THROW(Colander<2>(4.0, BallUnion<2>({{{6.0, 0.0}, 1.0}})), GeometryError);
  EXPECT_NO_THROW(Colander<2>(4.0, BallUnion<2>({{{4.5, 0.0}, 1.0}})));
  EXPECT_THROW(Colander<2>(1.0, BallUnion<2>{}, constant_profile(2, 1.0, 0.1)), GeometryError);
}

TEST(ShellLattice, EqualAnglePlacementInThePlane) {
  // rho_k = k, so shell 50 sits at radius 100.
  const auto lat = make_shell_lattice<2>(constant_profile(2, 1.0, 0.1), FuncSpec::constant(1.0), 50, 9);
  EXPECT_DOUBLE_EQ(lat.r0, 2.0);
  ASSERT_FALSE(lat.shells.empty());
  const auto& s = lat.shells.back();
  EXPECT_EQ(s.k, 50);
  EXPECT_DOUBLE_EQ(s.radius, 100.0);
  const auto n = static_cast<double>(s.centers.size());
  EXPECT_GE(n, std::ceil(2.0 * std::numbers::pi * 100.0 / 8.0));
  EXPECT_LE(n, std::floor(2.0 * std::numbers::pi * 100.0 / 4.0));
  for (std::size_t i = 0; i < s.centers.size(); ++i) {
    EXPECT_NEAR(norm(s.centers[i]), 100.0, 1e-9);
    for (std::size_t j = i + 1; j < s.centers.size(); ++j) ASSERT_GT(distance(s.centers[i], s.centers[j]), 4.0);
  }
  // Dense angular sweep for covering.
  for (int i = 0; i < 100000; ++i) {
    const double a = 2.0 * std::numbers::pi * i / 100000.0;
    const Vec<2> x{100.0 * std::cos(a), 100.0 * std::sin(a)};
    double best = 1e300;
    for (const auto& c : s.centers) best = std::min(best, distance(x, c));
    ASSERT_LE(best, 4.0);
  }
}

TEST(ShellLattice, EmptyBelowFirstValidShell) {
  const auto lat = make_shell_lattice<2>(constant_profile(2, 1.0, 0.1), FuncSpec::constant(1.0), 1, 9);
  EXPECT_TRUE(lat.shells.empty());
}

TEST(ShellLattice, SphereSeparatesAndCovers) {
  // R = 25 puts shell 2 at radius 100.
  const auto lat = make_shell_lattice<3>(constant_profile(3, 25.0, 0.1), FuncSpec::constant(1.0), 2, 4);
  ASSERT_EQ(lat.shells.size(), 2u);
  const auto& s = lat.shells[1];
  EXPECT_DOUBLE_EQ(s.radius, 100.0);
  std::vector<Ball<3>> b;
  for (const auto& c : s.centers) b.push_back({c, 1e-300});
  const BallUnion<3> idx(b);
  for (std::size_t i = 0; i < s.centers.size(); ++i) {
    EXPECT_NEAR(norm(s.centers[i]), 100.0, 1e-9);
    for (std::size_t j = i + 1; j < s.centers.size(); ++j) ASSERT_GT(distance(s.centers[i], s.centers[j]), 4.0);
  }
  StreamRng rng(123, 0);
  for (int i = 0; i < 10000; ++i) ASSERT_LE(idx.nearest(100.0 * uniform_on_sphere<3>(rng)).gap, 4.0);
}

TEST(ShellLattice, DeterministicGivenSeed) {
  const Profile p = constant_profile(3, 6.0, 0.1);
  const auto a = make_shell_lattice<3>(p, FuncSpec::constant(1.0), 4, 17);
  const auto b = make_shell_lattice<3>(p, FuncSpec::constant(1.0), 4, 17);
  ASSERT_EQ(a.shells.size(), b.shells.size());
  for (std::size_t i = 0; i < a.shells.size(); ++i) EXPECT_EQ(a.shells[i].centers, b.shells[i].centers);
}

TEST(CubeColander, Examples) {
  const Profile p = constant_profile(2, 1.0, 0.1);
  const auto c = make_cube_colander<2>(p, 10.0, 1.0);
  ASSERT_GT(c.obstacles().size(), 0u);
  for (const auto& b : c.obstacles().balls()) {
    EXPECT_DOUBLE_EQ(b.radius, 0.1);
    // Centers sit at (i + 1/2) * 4 and the whole cube lies in B(0, 10).
    for (int k = 0; k < 2; ++k) EXPECT_DOUBLE_EQ(std::fmod(std::abs(b.center[k]) - 2.0, 4.0), 0.0);
    EXPECT_LT(std::hypot(std::abs(b.center[0]) + 2.0, std::abs(b.center[1]) + 2.0), 10.0);
  }
  // Cells with center (±2, ±2) and (±6, ±2), (±2, ±6): corners at distance sqrt(32), sqrt(80).
  EXPECT_EQ(c.obstacles().size(), 12u);

  EXPECT_EQ(make_cube_colander<2>(p, 2.0, 1.0).obstacles().size(), 0u);
  EXPECT_THROW(make_cube_colander<2>(p, 0.5, 1.0), PreconditionError);
  EXPECT_THROW(make_cube_colander<2>(p, 10.0, 1.5), PreconditionError);
}

TEST(CubeColander, RadiiFollowTheProfile) {
  const Profile p(Dim(3), FuncSpec::gauge(1.0, {0.5}, 1.0), FuncSpec::constant(0.2));
  const auto c = make_cube_colander<3>(p, 30.0, 0.5);
  ASSERT_GT(c.obstacles().size(), 0u);
  for (const auto& b : c.obstacles().balls()) {
    const double t = norm(b.center);
    EXPECT_NEAR(b.radius, 0.5 * 0.2 * std::sqrt(1.0 + t), 1e-12);
  }
}

TEST(Recurrence, EmptySetFailsEverywhere) {
  const Profile p = constant_profile(2, 1.0, 0.1);
  const CapacityOracle<2> never = [](const BallUnion<2>&) -> double { throw SolverError("unused"); };
  const std::vector<Vec<2>> probes{{0.0, 0.0}, {5.0, 1.0}};
  for (auto mode : {RecurrenceMode::raw, RecurrenceMode::ratio, RecurrenceMode::volume}) {
    const auto rep = recurrence_check(BallUnion<2>{}, p, probes, mode, never);
    EXPECT_EQ(rep.failures(), 2u);
    for (const auto& r : rep.probes) EXPECT_EQ(r.lhs, 0.0);
  }
}

TEST(Recurrence, FullCoverPassesRatioMode) {
  const Profile p = constant_profile(2, 1.0, 0.1);
  const BallUnion<2> E({{{3.0, 0.0}, 1.5}});
  const auto rep = recurrence_check(E, p, {{3.2, 0.1}}, RecurrenceMode::ratio, CapacityOracle<2>{[](const BallUnion<2>&) { return 0.0; }});
  EXPECT_DOUBLE_EQ(rep.probes[0].lhs, 1.0);
  EXPECT_TRUE(rep.all_pass());
}

TEST(Recurrence, SingleBallOfRadiusEpsRTiesAndFails) {
  const Profile p = constant_profile(2, 2.0, 0.25);
  const BallUnion<2> E({{{1.0, 1.0}, 0.5}});
  const CapacityOracle<2> oracle = [](const BallUnion<2>&) { return 0.0; };
  const auto rep = recurrence_check(E, p, {{1.0, 1.0}}, RecurrenceMode::raw, oracle);
  EXPECT_EQ(rep.probes[0].lhs, rep.probes[0].rhs);
  EXPECT_FALSE(rep.all_pass());
}

TEST(Recurrence, CapacityModesNeedOracle) {
  const Profile p = constant_profile(2, 1.0, 0.1);
  EXPECT_THROW(recurrence_check(BallUnion<2>{}, p, {{0.0, 0.0}}, RecurrenceMode::raw), ConfigError);
  EXPECT_THROW(recurrence_check(BallUnion<2>{}, p, {{0.0, 0.0}}, RecurrenceMode::ratio), ConfigError);
  EXPECT_NO_THROW(recurrence_check(BallUnion<2>{}, p, {{0.0, 0.0}}, RecurrenceMode::volume));
}

TEST(Recurrence, ClippingInscribesStraddlingBalls) {
  const BallUnion<2> E({{{0.9, 0.0}, 0.3}, {{0.0, 0.2}, 0.1}, {{2.0, 0.0}, 0.5}});
  const auto clip = clip_to_ball(E, Vec<2>{0.0, 0.0}, 1.0);
  ASSERT_EQ(clip.balls.size(), 2u);
  EXPECT_EQ(clip.shrunk, 1u);
  // Lens [0.6, 1.0] on the axis gives an inscribed ball of radius 0.2 at 0.8.
  EXPECT_NEAR(clip.balls[0].radius, 0.2, 1e-15);
  EXPECT_NEAR(clip.balls[0].center[0], 0.8, 1e-15);
  for (const auto& b : clip.balls.balls()) EXPECT_LE(norm(b.center) + b.radius, 1.0 + 1e-15);
}

TEST(Recurrence, VolumeModeMatchesPlainSampling) {
  const Profile p = constant_profile(2, 1.0, 0.1);
  // Exact stratum: one ball well inside.
  const BallUnion<2> inner({{{0.1, 0.0}, 0.3}});
  const auto a = recurrence_check(inner, p, {{0.0, 0.0}}, RecurrenceMode::volume);
  EXPECT_NEAR(a.probes[0].lhs, 0.09, 1e-15);
  EXPECT_EQ(a.probes[0].stderr_lhs, 0.0);
  EXPECT_NEAR(a.probes[0].rhs, std::numbers::pi * 0.01, 1e-15);
  EXPECT_TRUE(a.all_pass());
  const auto small = recurrence_check(BallUnion<2>({{{0.1, 0.0}, 0.15}}), p, {{0.0, 0.0}}, RecurrenceMode::volume);
  EXPECT_FALSE(small.all_pass());  // 0.0225 < pi * 0.01

  // Overlapping and straddling balls.
  const BallUnion<2> messy({{{0.5, 0.0}, 0.4}, {{0.7, 0.2}, 0.3}, {{-0.9, 0.0}, 0.3}});
  const auto b = recurrence_check(messy, p, {{0.0, 0.0}}, RecurrenceMode::volume, {}, 3);
  const double reference = plain_volume_fraction(messy, Vec<2>{0.0, 0.0}, 1.0, 400000);
  const double ref_se = std::sqrt(reference * (1.0 - reference) / 400000.0);
  EXPECT_GT(b.probes[0].stderr_lhs, 0.0);
  EXPECT_NEAR(b.probes[0].lhs, reference, 4.0 * std::hypot(b.probes[0].stderr_lhs, ref_se));
}

TEST(SetgenIo, CsvRoundTripIsExact) {
  StreamRng rng(8, 8);
  const auto u = random_union<3>(rng, 50, 6.0, 1.0);
  std::stringstream ss;
  write_balls_csv(ss, u);
  EXPECT_EQ(ss.str().substr(0, ss.str().find('\n')), "cx_1,cx_2,cx_3,r");
  const auto back = read_balls_csv<3>(ss);
  EXPECT_EQ(back.balls(), u.balls());

  const Colander<3> c(12.0, u, constant_profile(3, 1.0, 0.1));
  std::stringstream s2;
  write_balls_csv(s2, c.obstacles());
  const auto again = colander_from_files<3>(s2, colander_sidecar(c));
  EXPECT_EQ(again.rho_outer(), 12.0);
  EXPECT_EQ(again.obstacles().balls(), u.balls());
  ASSERT_TRUE(again.profile().has_value());
}
