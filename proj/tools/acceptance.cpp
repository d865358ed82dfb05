// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "colander/capacity/equilibrium.hpp"
#include "colander/cli/app.hpp"
#include "colander/construction/construction.hpp"
#include "colander/construction/heart.hpp"
#include "colander/harmonic/decay_fit.hpp"
#include "colander/harmonic/grid.hpp"
#include "colander/harmonic/layers.hpp"
#include "colander/harmonic/wos.hpp"
#include "colander/mathcore/rho_sequence.hpp"
#include "colander/setgen/cube_colander.hpp"
#include "colander/setgen/recurrence.hpp"

using namespace colander;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

WoSConfig wos(double delta, long n, std::uint64_t seed) {
  WoSConfig c;
  c.delta = delta;
  c.n_walks = n;
  c.seed = seed;
  return c;
}

template <int D>
Verdict annulus(double target) {
  ::setenv("COLANDER_THREADS", "1", 1);
  const auto t0 = std::chrono::steady_clock::now();
  Vec<D> x{};
  x[0] = 2.0;
  const auto e = wos_escape(Colander<D>(4.0, BallUnion<D>({{Vec<D>{}, 1.0}})), x, wos(4e-4, 100000, 1));
  const double t = seconds_since(t0);
  ::unsetenv("COLANDER_THREADS");
  const bool ok = std::abs(e.p_hat - target) <= 3.0 * e.std_error && t <= 10.0;
  return {ok, fmt("p_hat %.5f +- %.5f vs %.5f, %.2f s on one thread", e.p_hat, e.std_error, target, t)};
}

Verdict cross_oracle() {
  std::vector<Colander<2>> cases;
  cases.emplace_back(2.0, BallUnion<2>({{Vec<2>{0.8, 0.3}, 0.4}}));
  cases.emplace_back(4.0, BallUnion<2>({{Vec<2>{1.5, 0.5}, 0.4}, {Vec<2>{-1.0, 1.5}, 0.3}, {Vec<2>{0.2, -2.0}, 0.5}}));
  std::vector<Ball<2>> ring;
  for (int i = 0; i < 12; ++i) {
    const double a = 2.0 * std::numbers::pi * i / 12 + 0.1;
    ring.push_back({Vec<2>{1.8 * std::cos(a), 1.8 * std::sin(a)}, 0.15 + 0.02 * (i % 4)});
  }
  cases.emplace_back(3.0, BallUnion<2>(std::move(ring)));
  bool ok = true;
  std::string detail;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto g = grid_solve_2d(cases[i], 0.01);
    const auto e = wos_escape(cases[i], Vec<2>{}, wos(4e-4, 100000, 20 + i));
    const double diff = std::abs(g.omega_at_origin - e.p_hat);
    const double tol = std::max(0.01, 3.0 * e.std_error);
    ok = ok && diff <= tol;
    detail += fmt("%zu obstacles: wos %.4f grid %.4f; ", cases[i].obstacles().size(), e.p_hat, g.omega_at_origin);
  }
  return {ok, detail};
}

Verdict capacity() {
  bool ok = true;
  double worst_rel = 0.0, worst_res = 0.0;
  for (double r : {0.5, 1.0, 2.0}) {
    const auto c2 = equilibrium_solve<2>(BallUnion<2>({{Vec<2>{}, r}}), 512).second;
    const auto c3 = equilibrium_solve<3>(BallUnion<3>({{Vec<3>{}, r}}), 2048).second;
    for (const auto& c : {c2, c3}) {
      const double rel = std::abs(c.capacity - r) / r;
      worst_rel = std::max(worst_rel, rel);
      worst_res = std::max(worst_res, c.residual / std::max(std::abs(c.robin), 1.0));
      ok = ok && rel <= 5e-3 && c.residual <= 1e-6 * std::max(std::abs(c.robin), 1.0);
    }
  }
  return {ok, fmt("worst relative error %.2e, worst scaled residual %.2e", worst_rel, worst_res)};
}

Verdict sandwich() {
  const Profile p(Dim(2), FuncSpec::constant(1.0), FuncSpec::constant(0.15));
  const auto c = make_cube_colander<2>(p, 14.0, 1.0, 4.0);
  const auto b = layer_bounds(c, 2.0, 6, 16, wos(1e-3, 20000, 5));
  const auto e = escape_walks(c.obstacles(), b.outer_radius, Vec<2>{}, wos(1e-3, 100000, 6));
  const bool ok = b.lower - 3.0 * b.lower_sigma <= e.p_hat && e.p_hat <= b.upper + 3.0 * b.upper_sigma &&
                  b.scheme.alpha_hypothesis;
  return {ok, fmt("lower %.3e <= direct %.4f <= upper %.4f, alpha %.3f, hypothesis %s", b.lower, e.p_hat, b.upper,
                  b.scheme.alpha, b.scheme.alpha_hypothesis ? "holds" : "fails")};
}

Verdict decay() {
  const Profile p(Dim(2), FuncSpec::constant(1.0), FuncSpec::constant(0.1));
  std::vector<double> rhos{4.0, 6.0, 8.0, 10.0, 12.0, 14.0};
  std::vector<EstimateCI> est;
  bool monotone = true;
  for (std::size_t i = 0; i < rhos.size(); ++i) {
    const auto c = make_cube_colander<2>(p, rhos[i], 1.0, 3.0);
    const auto cfg = wos(1e-3, 20000, 40 + i);
    est.push_back(wos_escape(c, Vec<2>{}, cfg));
    const auto big = wos_escape(c.with_scaled_radii(1.5), Vec<2>{}, cfg);
    const double slack = 3.0 * std::hypot(est.back().std_error, big.std_error);
    monotone = monotone && big.p_hat <= est.back().p_hat + slack;
  }
  const auto f = decay_fit(p, rhos, est);
  return {f.r2 >= 0.95 && f.c_slope > 0.0 && monotone,
          fmt("r2 %.4f, c_slope %.3f, 1.5x radii monotone %s", f.r2, f.c_slope, monotone ? "yes" : "no")};
}

Verdict phi_sandwich() {
  const Profile profiles[] = {
      Profile(Dim(2), FuncSpec::constant(1.0), FuncSpec::constant(0.1)),
      Profile(Dim(2), FuncSpec::gauge(1.0, {0.5}, 1.0), FuncSpec::constant(1e-3)),
      Profile(Dim(3), FuncSpec::gauge(2.0, {0.0, 1.0}, std::numbers::e), FuncSpec::exp_gauge(1.0, {0.0, 1.0}, 3.0)),
  };
  bool ok = true;
  int tested = 0;
  for (const auto& p : profiles) {
    const auto seq = rho_sequence(p, 10000);
    const auto Phi = big_phi_at_rho(p, seq);
    for (int n = 0; n <= 10000; ++n) {
      const double slack = 1e-12 * std::max(1, n);
      ok = ok && seq.c_R * n <= Phi[n] + slack && Phi[n] <= n + slack;
      if (n >= oscillation_window(p, seq.rho[n]) && oscillation_excess(p, seq.rho[n]) < 1.0) {
        ok = ok && oscillation_report(seq, p, n).holds;
        ++tested;
      }
    }
  }
  return {ok, fmt("3 profiles, n <= 10000, %d oscillation reports", tested)};
}

Verdict construction() {
  const auto t0 = std::chrono::steady_clock::now();
  const Profile p(Dim(2), FuncSpec::constant(7.0), FuncSpec::exp_gauge(100.0, {0.0}, 0.0).scaled(1.0 / 7.0));
  ConstructionOptions opt;
  opt.k_max = 10;
  opt.seed = 1;
  const auto c = build_construction<2>(p, opt);
  auto shell = [&](int k) {
    for (const auto& s : c.lattice.shells)
      if (s.k == k) return s.radius;
    throw PreconditionError("missing shell");
  };
  const double outer = shell(opt.k_max - 1);

  const bool a = u_eval(c, Vec<2>{}) >= 1.0;

  StreamRng rng(2, 0);
  double worst = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 200; ++i) {
    const auto& b = c.well_balls[static_cast<std::size_t>(rng.uniform() * c.well_balls.size())];
    const Vec<2> dir = uniform_on_sphere<2>(rng);
    Vec<2> x = b.center + b.radius * dir;
    if (i % 3 == 0) x = (c.r1 + 0.3 + (outer - c.r1 - 0.3) * rng.uniform()) * uniform_on_sphere<2>(rng);
    if (i % 3 == 1) x = b.center + ((0.3 + 0.4 * rng.uniform()) * b.radius) * dir;
    const double r0 = c.R0(norm(x));
    worst = std::min(worst, submean_check(c, x, {r0 / 8.0, r0 / 4.0}, 512).worst_margin);
  }
  const bool bb = worst >= -1e-6;

  bool cc = true;
  for (const auto& w : c.wells) {
    std::size_t bi = 0;
    while (c.wells[static_cast<std::size_t>(c.ball_well[bi])].k != w.k) ++bi;
    cc = cc && zero_radius(c, c.well_balls[bi].center).log_ratio >= w.log_eps0;
  }
  const bool enough_shells = c.wells.size() >= 8;

  std::vector<Vec<2>> probes;
  for (int i = 0; i < 100; ++i) probes.push_back((c.r1 + (outer - c.r1) * rng.uniform()) * uniform_on_sphere<2>(rng));
  const auto rec = recurrence_check(zero_balls(c), p, probes, RecurrenceMode::volume, {}, 3);
  const bool d = rec.all_pass();

  std::vector<double> rhos;
  for (int k = 5; k <= 10; ++k) rhos.push_back(shell(k));
  const auto g = growth_profile(c, rhos, 2048);
  const bool e = g.back().ratio <= g[g.size() - 3].ratio;

  bool f = true;
  for (int k : {5, 8}) f = f && heart_check(c, zero_set_colander(c, shell(k)), wos(1e-3, 20000, 7 + k)).holds;

  const double t = seconds_since(t0);
  return {a && bb && cc && enough_shells && d && e && f && t <= 300.0,
          fmt("(a) %d (b) worst margin %.2e (c) %zu shells %d (d) %zu/100 (e) %d (f) %d, %.1f s", a, worst, c.wells.size(),
              cc, rec.probes.size() - rec.failures(), e, f, t)};
}

std::string read_file(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

Verdict determinism() {
  const fs::path root = fs::temp_directory_path() / ("colander_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);
  const std::string configs[][2] = {
      {"decay-study", R"({"seed": 9, "profile": {"d": 2, "R": {"family": "constant", "value": 1.0},
        "eps": {"family": "constant", "value": 0.1}}, "radii": [4, 6, 8, 10, 12, 14],
        "colander": {"kind": "cube", "side_factor": 3.0}, "wos": {"delta": 1e-3, "n_walks": 20000}})"},
      {"layers", R"({"seed": 9, "profile": {"d": 2, "R": {"family": "constant", "value": 1.0},
        "eps": {"family": "constant", "value": 0.15}}, "n_layers": 4, "m_points": 8,
        "colander": {"kind": "cube"}, "wos": {"delta": 1e-3, "n_walks": 4000}})"},
      {"construct", R"({"seed": 9, "profile": {"d": 2, "R": {"family": "constant", "value": 7.0},
        "eps": {"family": "exp_gauge", "amplitude": 100.0, "alphas": [0.0], "shift": 0.0, "scale": 0.14285714285714285}},
        "options": {"k_max": 8}, "checks": {"submean_probes": 30, "recurrence_probes": 20, "heart_shells": [5]},
        "wos": {"delta": 1e-3, "n_walks": 4000}})"},
  };
  bool ok = true;
  int files = 0;
  std::ostringstream sink;
  for (const auto& [command, text] : configs) {
    const fs::path cfg = root / (command + ".json");
    std::ofstream(cfg) << text;
    std::vector<fs::path> outs;
    for (const char* threads : {"1", "8", "8"}) {
      ::setenv("COLANDER_THREADS", threads, 1);
      cli::Invocation inv;
      inv.command = command;
      inv.config = cfg;
      inv.out = root / (command + "_" + std::to_string(outs.size()));
      if (cli::run_experiment(inv, sink) != cli::kOk) return {false, command + " failed: " + sink.str()};
      outs.push_back(inv.out);
    }
    ::unsetenv("COLANDER_THREADS");
    for (const auto& e : fs::directory_iterator(outs[0])) {
      if (e.path().extension() != ".csv") continue;
      ++files;
      const std::string ref = read_file(e.path());
      for (std::size_t i = 1; i < outs.size(); ++i) ok = ok && read_file(outs[i] / e.path().filename()) == ref;
    }
  }
  fs::remove_all(root);
  return {ok && files >= 4, fmt("%d CSV files compared over runs with 1, 8, 8 threads", files)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"annulus oracle d=2", [] { return annulus<2>(0.5); }},
      {"annulus oracle d=3", [] { return annulus<3>(2.0 / 3.0); }},
      {"walk-on-spheres vs grid", cross_oracle},
      {"single-ball capacity", capacity},
      {"layered sandwich", sandwich},
      {"decay law shape", decay},
      {"Phi sandwich and oscillation", phi_sandwich},
      {"construction suite", construction},
      {"determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    failures += v.pass ? 0 : 1;
    std::printf("%s %zu %s: %s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), v.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
