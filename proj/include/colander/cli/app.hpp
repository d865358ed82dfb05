#pragma once

#include <fcntl.h>
#include <unistd.h>

#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "colander/capacity/equilibrium.hpp"
#include "colander/construction/construction.hpp"
#include "colander/construction/heart.hpp"
#include "colander/harmonic/decay_fit.hpp"
#include "colander/harmonic/io.hpp"
#include "colander/harmonic/layers.hpp"
#include "colander/harmonic/wos.hpp"
#include "colander/io/csv.hpp"
#include "colander/mathcore/envelope.hpp"
#include "colander/mathcore/rho_sequence.hpp"
#include "colander/parallel.hpp"
#include "colander/random.hpp"
#include "colander/setgen/cube_colander.hpp"
#include "colander/setgen/io.hpp"
#include "colander/setgen/recurrence.hpp"

namespace colander::cli {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr const char* kToolName = "colander-lab";
inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kInvalid = 2, kFailed = 3 };

// Reads a JSON object and remembers which keys were consumed, so that unknown
// keys can be rejected once the whole section has been parsed.
class Section {
 public:
  Section(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + " must be a JSON object");
  }

  bool has(const std::string& key) {
    used_.insert(key);
    return j_.contains(key);
  }

  const json& raw(const std::string& key) {
    used_.insert(key);
    if (!j_.contains(key)) throw ConfigError(where_ + ": missing key '" + key + "'");
    return j_.at(key);
  }

  template <class T>
  T get(const std::string& key) {
    try {
      return raw(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(where_ + ": key '" + key + "' has the wrong type");
    }
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    return has(key) ? get<T>(key) : fallback;
  }

  Section section(const std::string& key) { return Section(raw(key), where_ + "." + key); }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!used_.count(k)) throw ConfigError(where_ + ": unknown key '" + k + "'");
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> used_;
};

inline std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw SolverError("SHA-256 digest failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

inline std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Everything a command writes goes through here, into the temporary directory.
class Run {
 public:
  Run(fs::path dir, std::uint64_t seed) : dir_(std::move(dir)), seed_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t seed_for(const std::string& label) const { return derive_seed(seed_, label); }

  std::ofstream open(const std::string& name) {
    std::ofstream os(dir_ / name, std::ios::binary);
    if (!os) throw SolverError("cannot write " + (dir_ / name).string());
    outputs_.push_back(name);
    return os;
  }

  void write_json(const std::string& name, const json& j) { open(name) << j.dump(2) << '\n'; }

  // Wall-clock time of one named stage.
  template <class F>
  void stage(const std::string& name, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    timings_[name] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }

  const std::vector<std::string>& outputs() const { return outputs_; }
  const json& timings() const { return timings_; }

 private:
  fs::path dir_;
  std::uint64_t seed_;
  std::vector<std::string> outputs_;
  json timings_ = json::object();
};

inline WoSConfig read_wos(Section& s, const Run& run, const std::string& label) {
  WoSConfig cfg = s.has("wos") ? wos_config_from_json(s.raw("wos")) : WoSConfig{};
  cfg.seed = run.seed_for(label);
  return cfg;
}

template <int D>
Vec<D> read_point(Section& s, const std::string& key) {
  const auto v = s.get<std::vector<double>>(key);
  if (v.size() != D) throw ConfigError("'" + key + "' must have " + std::to_string(D) + " coordinates");
  Vec<D> x{};
  for (int k = 0; k < D; ++k) x[k] = v[k];
  return x;
}

template <int D>
BallUnion<D> read_balls(Section& s, const std::string& key) {
  const json& arr = s.raw(key);
  if (!arr.is_array()) throw ConfigError("'" + key + "' must be an array of {center, radius}");
  std::vector<Ball<D>> balls;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    Section b(arr[i], key + "[" + std::to_string(i) + "]");
    balls.push_back({read_point<D>(b, "center"), b.get<double>("radius")});
    b.finish();
    if (!(balls.back().radius > 0.0)) throw ConfigError(key + ": radii must be positive");
  }
  return BallUnion<D>(std::move(balls));
}

// {"kind": "cube", "fill", "side_factor"} needs a profile; {"kind": "balls", "balls"} does not.
template <int D>
Colander<D> read_colander(Section& root, const std::optional<Profile>& p, double rho) {
  Section s = root.section("colander");
  const auto kind = s.get<std::string>("kind");
  if (kind == "cube") {
    if (!p) throw ConfigError("a cube colander needs a profile");
    const double fill = s.get<double>("fill", 1.0);
    const double side = s.get<double>("side_factor", 4.0);
    s.finish();
    return make_cube_colander<D>(*p, rho, fill, side);
  }
  if (kind == "balls") {
    BallUnion<D> b = read_balls<D>(s, "balls");
    s.finish();
    std::vector<Ball<D>> kept;
    for (const auto& ball : b.balls())
      if (norm(ball.center) - ball.radius < rho) kept.push_back(ball);
    return Colander<D>(rho, BallUnion<D>(std::move(kept)), p);
  }
  throw ConfigError("colander.kind must be 'cube' or 'balls'");
}

inline std::optional<Profile> read_profile(Section& s, bool required) {
  if (!s.has("profile")) {
    if (required) throw ConfigError("missing key 'profile'");
    return std::nullopt;
  }
  return profile_from_json(s.raw("profile"));
}

inline int read_dimension(Section& s, const std::optional<Profile>& p) {
  int d = p ? p->d().value() : 0;
  if (s.has("d")) {
    const int given = s.get<int>("d");
    if (p && given != d) throw ConfigError("'d' does not match the profile dimension");
    d = given;
  }
  if (d != 2 && d != 3) throw ConfigError("'d' must be 2 or 3");
  return d;
}

// ---------------------------------------------------------------- commands

inline void cmd_validate_profile(Section& root, Run& run) {
  const Profile p = *read_profile(root, true);
  const double horizon = root.get<double>("horizon", Profile::kDefaultHorizon);
  const int n_max = root.get<int>("n_max", 1000);
  root.finish();
  if (!(horizon > 1.0)) throw ConfigError("horizon must exceed 1");
  if (n_max < 1) throw ConfigError("n_max must be at least 1");

  json report;
  run.stage("compute", [&] {
    const ProfileReport r = p.validate(horizon);
    const RhoSequence seq = rho_sequence(p, n_max);
    const auto Phi = big_phi_at_rho(p, seq);
    bool sandwich = true;
    int osc_tested = 0, osc_holds = 0;
    for (int n = 1; n <= n_max; ++n) {
      sandwich = sandwich && seq.c_R * n <= Phi[n] * (1.0 + 1e-12) && Phi[n] <= n * (1.0 + 1e-12);
      const int w = oscillation_window(p, seq.rho[n]);
      if (n >= w && oscillation_excess(p, seq.rho[n]) < 1.0) {
        ++osc_tested;
        osc_holds += oscillation_report(seq, p, n).holds ? 1 : 0;
      }
    }
    report = json{{"profile", p},
                  {"horizon", r.horizon},
                  {"valid", r.valid()},
                  {"r_positive", r.r_positive},
                  {"r_nondecreasing", r.r_nondecreasing},
                  {"r_concave", r.r_concave},
                  {"sup_slope", r.sup_slope},
                  {"c_R", r.c_R()},
                  {"r_sublinear", r.r_sublinear},
                  {"r0_at_least_one", r.r0_at_least_one},
                  {"eps_in_unit_interval", r.eps_in_unit_interval},
                  {"eps_nonincreasing", r.eps_nonincreasing},
                  {"phi_nonincreasing", r.phi_nonincreasing},
                  {"limsup_inv_t_phi", r.limsup_inv_t_phi},
                  {"sup_d_inv_phi", r.sup_d_inv_phi},
                  {"d_inv_phi_bounded", r.d_inv_phi_bounded},
                  {"n_max", n_max},
                  {"phi_sandwich_holds", sandwich},
                  {"oscillation_tested", osc_tested},
                  {"oscillation_holds", osc_holds}};
    run.stage("write", [&] {
      auto os = run.open("rho_sequence.csv");
      csv::Writer w(os);
      w.row("n", "rho", "big_phi", "int_phi");
      for (int n = 0; n <= n_max; ++n)
        w.row(n, seq.rho[n], Phi[n], seq.rho[n] >= 1.0 ? envelope_integral(p, seq.rho[n]) : 0.0);
    });
  });
  run.write_json("profile_report.json", report);
}

template <int D>
void capacity_impl(Section& root, Run& run) {
  const BallUnion<D> balls = read_balls<D>(root, "balls");
  const int nodes = root.get<int>("nodes_per_ball", D == 2 ? 512 : 2048);
  const double reg = root.get<double>("reg", 0.0);
  root.finish();
  if (balls.empty()) throw ConfigError("'balls' must not be empty");
  if (nodes < 8) throw ConfigError("nodes_per_ball must be at least 8");
  CapacityResult r;
  run.stage("compute", [&] { r = equilibrium_solve<D>(balls, nodes, reg).second; });
  r.seed = run.seed();
  auto os = run.open("capacity.csv");
  csv::Writer w(os);
  w.row("d", "balls", "nodes_per_ball", "capacity", "robin", "residual", "surface_residual", "nodes");
  w.row(D, balls.size(), nodes, r.capacity, r.robin, r.residual, r.surface_residual, r.nodes);
}

template <int D>
void measure_impl(Section& root, const std::optional<Profile>& p, Run& run) {
  const double rho = root.get<double>("rho");
  const Vec<D> x0 = root.has("x0") ? read_point<D>(root, "x0") : Vec<D>{};
  const WoSConfig cfg = read_wos(root, run, "measure");
  const Colander<D> c = read_colander<D>(root, p, rho);
  root.finish();
  cfg.validate(rho);
  EstimateCI e;
  run.stage("compute", [&] { e = wos_escape(c, x0, cfg); });
  const double int_phi = p && rho >= 1.0 ? envelope_integral(*p, rho) : std::numeric_limits<double>::quiet_NaN();
  auto os = run.open("results.csv");
  write_results_csv(os, {DecayRow{rho, int_phi, e, cfg.seed, cfg.delta}});
}

template <int D>
void layers_impl(Section& root, const Profile& p, Run& run) {
  const double A = root.get<double>("A", 2.0);
  const int n = root.get<int>("n_layers", 6);
  const int m = root.get<int>("m_points", 16);
  const bool direct = root.get<bool>("direct", true);
  const WoSConfig cfg = read_wos(root, run, "layers");
  const RhoSequence seq = rho_sequence(p, n + 1);
  const double outer = A * seq.rho[n + 1];
  const double rho = root.get<double>("rho", outer);
  const Colander<D> c = read_colander<D>(root, p, rho);
  root.finish();
  cfg.validate(outer);
  LayerBounds b;
  run.stage("compute", [&] { b = layer_bounds(c, A, n, m, cfg); });
  json out = b;
  if (direct) {
    WoSConfig dc = cfg;
    dc.seed = run.seed_for("layers:direct");
    EstimateCI e;
    run.stage("direct", [&] { e = escape_walks(c.obstacles(), outer, Vec<D>{}, dc); });
    out["direct"] = e;
    out["sandwich_holds"] = b.lower - 3.0 * b.lower_sigma <= e.p_hat + 3.0 * e.std_error &&
                            e.p_hat - 3.0 * e.std_error <= b.upper + 3.0 * b.upper_sigma;
  }
  auto os = run.open("layers.csv");
  write_layers_csv(os, b.scheme);
  run.write_json("bounds.json", out);
}

template <int D>
void decay_impl(Section& root, const Profile& p, Run& run) {
  const auto radii = root.get<std::vector<double>>("radii");
  const WoSConfig base = read_wos(root, run, "decay");
  json colander_spec = root.raw("colander");
  root.finish();
  if (radii.size() < 4) throw ConfigError("decay-study needs at least 4 radii");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] >= 1.0)) throw ConfigError("radii must be at least 1");
    if (i > 0 && !(radii[i] > radii[i - 1])) throw ConfigError("radii must increase");
    base.validate(radii[i]);
  }
  // Validate the colander section once before computing.
  {
    json probe{{"colander", colander_spec}};
    Section s(probe, "config");
    (void)read_colander<D>(s, p, radii.front());
  }
  std::vector<DecayRow> rows;
  run.stage("compute", [&] {
    for (std::size_t i = 0; i < radii.size(); ++i) {
      json wrap{{"colander", colander_spec}};
      Section s(wrap, "config");
      const Colander<D> c = read_colander<D>(s, p, radii[i]);
      WoSConfig cfg = base;
      cfg.seed = run.seed_for("decay:" + std::to_string(i));
      rows.push_back({radii[i], envelope_integral(p, radii[i]), wos_escape(c, Vec<D>{}, cfg), cfg.seed, cfg.delta});
    }
  });
  {
    auto os = run.open("results.csv");
    write_results_csv(os, rows);
  }
  std::vector<double> x;
  std::vector<EstimateCI> est;
  for (const auto& r : rows) {
    x.push_back(r.int_phi);
    est.push_back(r.est);
  }
  run.write_json("fit.json", json(fit_log_linear(x, est)));
}

template <int D>
void construct_impl(Section& root, const Profile& p, Run& run) {
  ConstructionOptions opt;
  if (root.has("options")) {
    Section o = root.section("options");
    opt.k_max = o.get<int>("k_max", opt.k_max);
    if (o.has("C")) opt.C = o.get<double>("C");
    opt.max_doublings = o.get<int>("max_doublings", opt.max_doublings);
    opt.well_policy = well_policy_from_string(o.get<std::string>("well_policy", to_string(opt.well_policy)));
    opt.well_safety = o.get<double>("well_safety", opt.well_safety);
    opt.poisson_nodes = o.get<int>("poisson_nodes", opt.poisson_nodes);
    o.finish();
  }
  opt.seed = run.seed_for("construct:lattice");
  int submean_probes = 200, recurrence_probes = 100;
  std::vector<int> heart_shells{5, 8};
  if (root.has("checks")) {
    Section s = root.section("checks");
    submean_probes = s.get<int>("submean_probes", submean_probes);
    recurrence_probes = s.get<int>("recurrence_probes", recurrence_probes);
    heart_shells = s.get<std::vector<int>>("heart_shells", heart_shells);
    s.finish();
  }
  const WoSConfig wos = read_wos(root, run, "construct:heart");
  root.finish();
  if (submean_probes < 0 || recurrence_probes < 0) throw ConfigError("probe counts must be non-negative");

  std::optional<Construction<D>> built;
  run.stage("build", [&] { built = build_construction<D>(p, opt); });
  const Construction<D>& c = *built;
  run.write_json("construction.json", json(c));

  std::vector<double> shell_radii;
  for (const auto& w : c.wells) shell_radii.push_back(w.radius);
  const double outer = c.wells.size() >= 2 ? c.wells[c.wells.size() - 2].radius : c.wells.back().radius;

  json checks{{"u0", u_eval(c, Vec<D>{})}};
  run.stage("zero_radii", [&] {
    auto os = run.open("zero_radii.csv");
    csv::Writer w(os);
    w.row("k", "radius", "well_radius", "A", "log_ratio", "certified_log_ratio", "log_eps0");
    bool ok = true;
    for (std::size_t wi = 0; wi < c.wells.size(); ++wi) {
      std::size_t bi = 0;
      while (static_cast<std::size_t>(c.ball_well[bi]) != wi) ++bi;
      const auto z = zero_radius(c, c.well_balls[bi].center);
      const auto& well = c.wells[wi];
      ok = ok && z.log_ratio >= well.log_eps0;
      w.row(well.k, well.radius, well.well_radius, well.A, z.log_ratio, z.certified_log_ratio, well.log_eps0);
    }
    checks["zero_radius_holds"] = ok;
  });

  run.stage("submean", [&] {
    StreamRng rng(run.seed_for("construct:submean"), 0);
    double worst = std::numeric_limits<double>::infinity();
    for (int i = 0; i < submean_probes; ++i) {
      const auto& b = c.well_balls[static_cast<std::size_t>(rng.uniform() * c.well_balls.size())];
      const Vec<D> dir = uniform_on_sphere<D>(rng);
      Vec<D> x;
      if (i % 3 == 0) {
        const double r = c.r1 + 0.3 + (outer - c.r1 - 0.3) * rng.uniform();
        x = r * uniform_on_sphere<D>(rng);
      } else if (i % 3 == 1) {
        x = b.center + ((0.3 + 0.4 * rng.uniform()) * b.radius) * dir;
      } else {
        x = b.center + b.radius * dir;
      }
      const double r0 = c.R0(norm(x));
      worst = std::min(worst, submean_check(c, x, {r0 / 8.0, r0 / 4.0}, D == 2 ? 512 : 2048).worst_margin);
    }
    checks["submean_probes"] = submean_probes;
    checks["submean_worst_margin"] = submean_probes > 0 ? json(worst) : json(nullptr);
  });

  run.stage("recurrence", [&] {
    StreamRng rng(run.seed_for("construct:recurrence"), 0);
    std::vector<Vec<D>> probes;
    for (int i = 0; i < recurrence_probes; ++i) probes.push_back((c.r1 + (outer - c.r1) * rng.uniform()) * uniform_on_sphere<D>(rng));
    const auto rep = recurrence_check(zero_balls(c), p, probes, RecurrenceMode::volume, {}, run.seed_for("construct:volume"));
    checks["recurrence_probes"] = recurrence_probes;
    checks["recurrence_failures"] = rep.failures();
  });

  run.stage("growth", [&] {
    std::vector<double> rhos;
    for (double r : shell_radii)
      if (r > c.r1) rhos.push_back(r);
    const auto g = growth_profile(c, rhos, D == 2 ? 2048 : 4096);
    auto os = run.open("growth.csv");
    csv::Writer w(os);
    w.row("rho", "int_phi", "M_hat", "ratio", "flagged");
    for (const auto& pt : g) w.row(pt.rho, envelope_integral(p, pt.rho), pt.M_hat, pt.ratio, pt.flagged ? 1 : 0);
    if (g.size() >= 3) checks["growth_trend_ok"] = g.back().ratio <= g[g.size() - 3].ratio;
  });

  run.stage("heart", [&] {
    json hs = json::array();
    for (int k : heart_shells) {
      double rho = 0.0;
      for (const auto& w : c.wells)
        if (w.k == k) rho = w.radius;
      if (rho == 0.0) continue;
      hs.push_back(json(heart_check(c, zero_set_colander(c, rho), wos)));
    }
    checks["heart"] = hs;
  });
  run.write_json("checks.json", checks);
}

// ---------------------------------------------------------------- plumbing

struct Invocation {
  std::string command;
  fs::path config;
  fs::path out;
  std::optional<std::uint64_t> seed;
  bool force = false;
};

inline void dispatch(const std::string& command, Section& root, Run& run) {
  if (command == "validate-profile") return cmd_validate_profile(root, run);
  if (command == "capacity") {
    const auto p = read_profile(root, false);
    return read_dimension(root, p) == 2 ? capacity_impl<2>(root, run) : capacity_impl<3>(root, run);
  }
  const bool needs_profile = command != "measure";
  const auto p = read_profile(root, needs_profile);
  const int d = read_dimension(root, p);
  if (command == "measure") return d == 2 ? measure_impl<2>(root, p, run) : measure_impl<3>(root, p, run);
  if (command == "layers") return d == 2 ? layers_impl<2>(root, *p, run) : layers_impl<3>(root, *p, run);
  if (command == "decay-study") return d == 2 ? decay_impl<2>(root, *p, run) : decay_impl<3>(root, *p, run);
  if (command == "construct") return d == 2 ? construct_impl<2>(root, *p, run) : construct_impl<3>(root, *p, run);
  throw ConfigError("unknown command '" + command + "'");
}

inline int classify(const std::exception& e) {
  if (dynamic_cast<const SolverError*>(&e) || dynamic_cast<const AlphaError*>(&e) || dynamic_cast<const FitError*>(&e) ||
      dynamic_cast<const ConstructionInfeasible*>(&e))
    return kFailed;
  return kInvalid;
}

// One run: lock, compute into a sibling temporary directory, rename into place.
inline int run_experiment(const Invocation& inv, std::ostream& err) {
  std::string bytes;
  {
    std::ifstream is(inv.config, std::ios::binary);
    if (!is) {
      err << "error: cannot read config " << inv.config << '\n';
      return kInvalid;
    }
    std::ostringstream ss;
    ss << is.rdbuf();
    bytes = ss.str();
  }
  json cfg;
  try {
    cfg = json::parse(bytes);
  } catch (const json::exception& e) {
    err << "error: config is not valid JSON: " << e.what() << '\n';
    return kInvalid;
  }

  const fs::path out = inv.out.empty() ? fs::path("colander-out") / inv.command : inv.out;
  if (fs::exists(out) && !inv.force) {
    err << "error: " << out << " exists (use --force to replace it)\n";
    return kInvalid;
  }
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  const fs::path lock = out.string() + ".lock";
  const int fd = ::open(lock.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    err << "error: another run holds " << lock << '\n';
    return kInvalid;
  }
  ::close(fd);
  const fs::path tmp = out.string() + ".tmp-" + std::to_string(::getpid());
  fs::remove_all(tmp);
  fs::create_directories(tmp);

  int code = kOk;
  try {
    Section root(cfg, "config");
    if (root.has("command") && root.get<std::string>("command") != inv.command)
      throw ConfigError("config command '" + root.get<std::string>("command") + "' does not match '" + inv.command + "'");
    const auto config_seed = root.get<std::uint64_t>("seed", 0);
    const std::uint64_t seed = inv.seed.value_or(config_seed);
    Run run(tmp, seed);
    const std::string started = utc_now();
    dispatch(inv.command, root, run);
    {
      std::ofstream os(tmp / "config.json", std::ios::binary);
      os << bytes;
    }
    json manifest{{"tool", kToolName},
                  {"version", kVersion},
                  {"command", inv.command},
                  {"seed", seed},
                  {"config_file", "config.json"},
                  {"config_sha256", sha256_hex(bytes)},
                  {"threads", thread_count()},
                  {"started", started},
                  {"finished", utc_now()},
                  {"timings", run.timings()},
                  {"outputs", run.outputs()}};
    std::ofstream(tmp / "manifest.json", std::ios::binary) << manifest.dump(2) << '\n';
    if (fs::exists(out)) fs::remove_all(out);
    fs::rename(tmp, out);
  } catch (const std::exception& e) {
    code = classify(e);
    err << "error: " << e.what() << '\n';
    fs::remove_all(tmp);
  }
  fs::remove(lock);
  return code;
}

// (int_phi, -log p_hat) from results.csv and (k, lower, upper) from layers.csv.
inline int plot_data(const fs::path& dir, const fs::path& out_dir, std::ostream& err) {
  const fs::path results = dir / "results.csv", layers = dir / "layers.csv";
  if (!fs::exists(results) && !fs::exists(layers)) {
    err << "error: " << dir << " has neither results.csv nor layers.csv\n";
    return kInvalid;
  }
  try {
    fs::create_directories(out_dir);
    if (fs::exists(results)) {
      std::ifstream is(results);
      const csv::Table t = csv::read(is);
      const auto xi = t.column("int_phi"), pi = t.column("p_hat");
      std::ofstream os(out_dir / "decay.dat");
      if (t.rows.empty()) err << "warning: results.csv has no rows\n";
      for (const auto& r : t.rows) {
        const double p = csv::parse_double(r[pi]);
        if (p > 0.0) os << csv::format(csv::parse_double(r[xi])) << ' ' << csv::format(-std::log(p)) << '\n';
      }
    }
    if (fs::exists(layers)) {
      std::ifstream is(layers);
      const csv::Table t = csv::read(is);
      std::ifstream bs(dir / "bounds.json");
      if (!bs) throw ConfigError("layers.csv needs bounds.json next to it");
      const json b = json::parse(bs);
      const double base = b.at("base").get<double>(), alpha = b.at("alpha").get<double>();
      const auto ki = t.column("k"), ii = t.column("inf_hat"), si = t.column("sup_hat");
      std::ofstream os(out_dir / "layers.dat");
      if (t.rows.empty()) err << "warning: layers.csv has no rows\n";
      double sum_inf = 0.0, sum_sup = 0.0;
      for (const auto& r : t.rows) {
        sum_inf += csv::parse_double(r[ii]);
        sum_sup += csv::parse_double(r[si]);
        os << r[ki] << ' ' << csv::format(base * std::exp(-alpha * sum_sup)) << ' '
           << csv::format(base * std::exp(-sum_inf)) << '\n';
      }
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInvalid;
  }
  return kOk;
}

inline int main(int argc, char** argv, std::ostream& err = std::cerr) {
  CLI::App app{"Colander experiments: harmonic measure, capacity and the subharmonic construction", kToolName};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  Invocation inv;
  std::uint64_t seed = 0;
  for (const char* name : {"validate-profile", "capacity", "measure", "layers", "decay-study", "construct"}) {
    auto* sub = app.add_subcommand(name, std::string("run ") + name);
    sub->add_option("--config", inv.config, "JSON config")->required();
    sub->add_option("--out", inv.out, "artifact directory");
    sub->add_option("--seed", seed, "master seed (overrides the config)");
    sub->add_flag("--force", inv.force, "replace an existing artifact directory");
  }
  fs::path plot_in, plot_out;
  auto* plot = app.add_subcommand("plot-data", "write gnuplot-ready columns from an artifact directory");
  plot->add_option("dir", plot_in, "artifact directory")->required();
  plot->add_option("--out", plot_out, "output directory (default: the artifact directory)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }
  if (plot->parsed()) return plot_data(plot_in, plot_out.empty() ? plot_in : plot_out, err);
  for (auto* sub : app.get_subcommands()) inv.command = sub->get_name();
  for (auto* sub : app.get_subcommands())
    if (sub->count("--seed")) inv.seed = seed;
  return run_experiment(inv, err);
}

}  // namespace colander::cli
