#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "colander/capacity/equilibrium.hpp"
#include "colander/capacity/mc_capacity.hpp"
#include "colander/random.hpp"
#include "colander/setgen/cube_colander.hpp"
#include "colander/setgen/recurrence.hpp"

using namespace colander;

namespace {

// Capacity of two equal spheres (radius a, centers L apart) held at the same
// potential, summed over the image-charge chain.
double two_sphere_capacity_by_images(double a, double L) {
  double total = 0.0;
  double q = a, pos = 0.0;  // charge and its distance from its own sphere's center
  for (int k = 0; k < 200 && std::abs(q) > 1e-18; ++k) {
    total += q;
    const double d = L - pos;  // distance to the other center
    q = -q * a / d;
    pos = a * a / d;
  }
  return 2.0 * total;
}

}  // namespace

TEST(Equilibrium, SingleBallPlane) {
  for (double r : {0.5, 1.0, 2.0}) {
    const auto [mu, res] = equilibrium_solve<2>(BallUnion<2>({{{0.3, -1.0}, r}}), 512);
    EXPECT_NEAR(res.capacity / r, 1.0, 5e-3) << r;
    EXPECT_LE(res.residual, 1e-6 * std::max(std::abs(res.robin), 1.0));
    EXPECT_NEAR(mu.total_mass(), 1.0, 1e-12);
    for (double w : mu.weights) EXPECT_GE(w, 0.0);
  }
}

TEST(Equilibrium, SingleBallSpace) {
  for (double r : {0.5, 1.0, 2.0}) {
    const auto [mu, res] = equilibrium_solve<3>(BallUnion<3>({{{0.0, 1.0, 2.0}, r}}), 2048);
    EXPECT_NEAR(res.capacity / r, 1.0, 5e-3) << r;
    EXPECT_LE(res.residual, 1e-6 * std::max(std::abs(res.robin), 1.0));
    EXPECT_NEAR(mu.total_mass(), 1.0, 1e-12);
  }
}

TEST(Equilibrium, TwoDistantDiscs) {
  // Half the mass on each disc: robin ~ (log r + log L) / 2, capacity ~ sqrt(r L).
  const auto res = equilibrium_solve<2>(BallUnion<2>({{{0.0, 0.0}, 1.0}, {{1e4, 0.0}, 1.0}}), 128).second;
  EXPECT_NEAR(res.capacity, 100.0, 5.0);
}

TEST(Equilibrium, TwoSpheresMatchImageCharges) {
  for (double L : {2.5, 4.0, 10.0}) {
    const auto res = equilibrium_solve<3>(BallUnion<3>({{{0.0, 0.0, 0.0}, 1.0}, {{L, 0.0, 0.0}, 1.0}}), 1024).second;
    EXPECT_NEAR(res.capacity / two_sphere_capacity_by_images(1.0, L), 1.0, 5e-3) << L;
  }
}

TEST(Equilibrium, OverlappingBallsDropBuriedNodes) {
  const BallUnion<2> S({{{0.0, 0.0}, 1.0}, {{0.5, 0.0}, 1.0}});
  const auto [mu, res] = equilibrium_solve<2>(S, 256);
  EXPECT_LT(mu.size(), 512u);
  for (const auto& x : mu.nodes) EXPECT_GE(S.nearest(x).gap, -1e-12);
  // Contains the unit disc, sits inside a disc of radius 1.25.
  EXPECT_GT(res.capacity, 1.0);
  EXPECT_LT(res.capacity, 1.25);
}

TEST(Equilibrium, Preconditions) {
  EXPECT_THROW(equilibrium_solve<2>(BallUnion<2>{}, 64), PreconditionError);
  EXPECT_THROW(equilibrium_solve<2>(BallUnion<2>({{{0.0, 0.0}, 1.0}}), 4), PreconditionError);
  EXPECT_THROW(equilibrium_solve<3>(BallUnion<3>({{{0.0, 0.0, 0.0}, 1.0}}), 32), PreconditionError);
}

TEST(Equilibrium, MonotoneUnderInclusion) {
  StreamRng rng(3, 3);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Ball<2>> balls;
    for (int i = 0; i < 4; ++i) balls.push_back({{8.0 * rng.uniform(), 8.0 * rng.uniform()}, 0.2 + 0.3 * rng.uniform()});
    const BallUnion<2> small(std::vector<Ball<2>>(balls.begin(), balls.begin() + 3));
    const BallUnion<2> big(balls);
    const auto a = equilibrium_solve<2>(small, 128).second;
    const auto b = equilibrium_solve<2>(big, 128).second;
    EXPECT_LE(a.capacity, b.capacity * (1.0 + 1e-3) + a.surface_residual);
  }
}

TEST(Equilibrium, SurfaceResidualShrinksWithNodes) {
  const BallUnion<2> S({{{0.0, 0.0}, 1.0}, {{3.0, 0.5}, 0.7}, {{-1.0, 2.5}, 0.4}});
  double prev = std::numeric_limits<double>::infinity();
  for (int n : {32, 64, 128, 256}) {
    const double r = equilibrium_solve<2>(S, n).second.surface_residual;
    EXPECT_LE(r, 0.5 * prev * 1.05) << n;
    prev = r;
  }
}

TEST(Equilibrium, PotentialDominatesRobinOffTheSet) {
  // With ker = log the equilibrium potential equals robin on the set and is
  // at least robin everywhere else.
  const BallUnion<2> S({{{0.0, 0.0}, 1.0}, {{3.0, 0.0}, 0.5}, {{1.0, 3.0}, 0.8}});
  const auto [mu, res] = equilibrium_solve<2>(S, 256);
  StreamRng rng(99, 0);
  int checked = 0;
  while (checked < 1000) {
    const Vec<2> x{-6.0 + 14.0 * rng.uniform(), -6.0 + 14.0 * rng.uniform()};
    if (S.nearest(x).gap < 0.05) continue;
    EXPECT_GE(potential_eval(mu, x), res.robin - 10.0 * res.surface_residual);
    ++checked;
  }
}

TEST(Equilibrium, ProjectedGradientAgreesWithDenseSolve) {
  const BallUnion<2> S({{{0.0, 0.0}, 1.0}, {{2.6, 0.0}, 0.6}});
  EquilibriumOptions pg;
  pg.dense_limit = 0;
  pg.pg_tolerance = 1e-8;
  const auto dense = equilibrium_solve<2>(S, 32).second;
  const auto iter = equilibrium_solve<2>(S, 32, 0.0, pg).second;
  EXPECT_FALSE(iter.dense);
  EXPECT_NEAR(iter.capacity, dense.capacity, 1e-6 * dense.capacity);
}

TEST(Equilibrium, JsonCarriesContractFields) {
  const auto res = equilibrium_solve<2>(BallUnion<2>({{{0.0, 0.0}, 1.0}}), 64).second;
  const nlohmann::json j = res;
  for (const char* k : {"capacity", "robin", "residual", "nodes", "seed"}) EXPECT_TRUE(j.contains(k)) << k;
}

TEST(Potential, CircleAverages) {
  const auto mu = uniform_sphere_measure<2>({0.0, 0.0}, 1.0, 256);
  EXPECT_NEAR(potential_eval(mu, Vec<2>{2.0, 0.0}), std::log(2.0), 1e-14);
  EXPECT_NEAR(potential_eval(mu, Vec<2>{0.0, 0.0}), 0.0, 1e-14);
  // Inside the circle the average is log max(|x|, 1) = 0 as well.
  EXPECT_NEAR(potential_eval(mu, Vec<2>{0.3, -0.2}), 0.0, 1e-12);
}

TEST(Potential, SphereShellTheorem) {
  const auto mu = uniform_sphere_measure<3>({0.0, 0.0, 0.0}, 1.0, 4096);
  EXPECT_NEAR(potential_eval(mu, Vec<3>{0.0, 2.0, 0.0}), -0.5, 1e-4);
  EXPECT_NEAR(potential_eval(mu, Vec<3>{1.2, -1.2, 1.0}), -1.0 / std::sqrt(3.88), 1e-4);
}

TEST(Barrier, Examples) {
  EXPECT_EQ(barrier_eval<2>({}, 1.0, Vec<2>{1.0, 2.0}), 0.0);
  const Vec<2> lambda{5.0, -1.0};
  const std::vector<std::pair<Vec<2>, DiscreteMeasure<2>>> one{{lambda, uniform_sphere_measure<2>({0.0, 0.0}, 1.0, 256)}};
  EXPECT_NEAR(barrier_eval(one, 1.0, lambda + Vec<2>{0.0, std::numbers::e}), -1.0, 1e-12);
}

TEST(Barrier, MeanValuePropertyAwayFromSupports) {
  std::vector<std::pair<Vec<3>, DiscreteMeasure<3>>> lat;
  for (int i = 0; i < 3; ++i) lat.push_back({{4.0 * i, 0.0, 1.0}, uniform_sphere_measure<3>({0.0, 0.0, 0.0}, 0.5, 256)});
  const Vec<3> x{2.0, 2.0, 0.0};
  const double center = barrier_eval(lat, 2.0, x);
  // Spherical average on a small sphere by a dense Fibonacci rule.
  const auto pts = sphere_nodes<3>(x, 0.3, 20000);
  double avg = 0.0;
  for (const auto& p : pts) avg += barrier_eval(lat, 2.0, p);
  avg /= static_cast<double>(pts.size());
  EXPECT_NEAR(avg, center, 1e-4);
}

TEST(McCapacity, UnitSphere) {
  const auto est = mc_capacity_d3(BallUnion<3>({{{1.0, 2.0, 3.0}, 1.0}}), 400000, 12);
  EXPECT_FALSE(est.hits.flagged());
  EXPECT_NEAR(est.capacity, 1.0, 3.0 * est.std_error);
}

TEST(McCapacity, EmptyAndPlane) {
  EXPECT_EQ(mc_capacity_d3(BallUnion<3>{}, 100, 1).capacity, 0.0);
  EXPECT_THROW(mc_capacity_d3(BallUnion<2>({{{0.0, 0.0}, 1.0}}), 100, 1), UnsupportedDimension);
}

TEST(McCapacity, AgreesWithEquilibriumSolve) {
  const BallUnion<3> S({{{0.0, 0.0, 0.0}, 1.0}, {{8.0, 0.0, 0.0}, 1.0}});
  const auto eq = equilibrium_solve<3>(S, 1024).second;
  EXPECT_NEAR(eq.capacity / two_sphere_capacity_by_images(1.0, 8.0), 1.0, 5e-3);
  McCapacityOptions opt;
  opt.launch_factor = 5.0;
  const auto mc = mc_capacity_d3(S, 400000, 5, opt);
  EXPECT_NEAR(mc.capacity, eq.capacity, 3.0 * mc.std_error + 0.01 * eq.capacity);
}

TEST(McCapacity, DeterministicAcrossThreadCounts) {
  const BallUnion<3> S({{{0.0, 0.0, 0.0}, 1.0}});
  setenv("COLANDER_THREADS", "1", 1);
  const auto a = mc_capacity_d3(S, 20000, 77);
  setenv("COLANDER_THREADS", "8", 1);
  const auto b = mc_capacity_d3(S, 20000, 77);
  unsetenv("COLANDER_THREADS");
  EXPECT_EQ(a.hits.n_success, b.hits.n_success);
  EXPECT_EQ(a.capacity, b.capacity);
}

TEST(Recurrence, DenseCubeColanderPassesRatioMode) {
  // Lattice side 0.7 R: every probe ball holds several whole obstacles.
  const Profile p(Dim(2), FuncSpec::constant(1.0), FuncSpec::constant(0.1));
  const auto c = make_cube_colander<2>(p, 12.0, 1.0, 0.7);
  StreamRng rng(31, 0);
  std::vector<Vec<2>> probes;
  while (probes.size() < 50) {
    const Vec<2> x = 12.0 * uniform_in_ball<2>(rng);
    if (norm(x) + p.R_at(norm(x)) <= 11.0) probes.push_back(x);
  }
  const auto rep = recurrence_check<2>(c.obstacles(), p, probes, RecurrenceMode::ratio, equilibrium_oracle<2>(32));
  EXPECT_TRUE(rep.all_pass());
  for (const auto& r : rep.probes) EXPECT_GE(r.members, 2u);
}
