#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "colander/error.hpp"
#include "colander/mathcore/func_spec.hpp"
#include "colander/mathcore/kernel.hpp"
#include "json.hpp"

namespace colander {

// Numerical findings about a profile on a sample grid. The hard invariants
// (`valid()`) are enforced when a Profile is constructed; the asymptotic
// hypotheses are reported and checked by the operations that need them.
struct ProfileReport {
  double horizon = 0.0;
  int samples = 0;
  bool r_positive = true;
  bool r_nondecreasing = true;
  bool r_concave = true;
  double sup_slope = 0.0;  // max forward difference of R
  bool r_sublinear = true;  // R(T)/T <= 0.5 at the horizon
  bool r0_at_least_one = true;
  bool eps_in_unit_interval = true;
  bool eps_nonincreasing = true;
  bool phi_nonincreasing = true;
  double limsup_inv_t_phi = 0.0;  // max of 1/(t phi) over the last decade
  double sup_d_inv_phi = 0.0;     // max forward difference of 1/phi on [1, T]
  bool d_inv_phi_bounded = true;

  double c_R() const { return 1.0 - sup_slope; }
  bool valid() const {
    return r_positive && r_nondecreasing && r_concave && sup_slope < 1.0 && eps_in_unit_interval && eps_nonincreasing;
  }
  std::string first_violation() const {
    if (!r_positive) return "R must be positive";
    if (!r_nondecreasing) return "R must be non-decreasing";
    if (!r_concave) return "R must be concave";
    if (!(sup_slope < 1.0)) return "sup R' must be below 1";
    if (!eps_in_unit_interval) return "eps must take values in (0,1)";
    if (!eps_nonincreasing) return "eps must be non-increasing";
    return {};
  }
};

// log-spaced samples t_i = (1+T)^{i/(n-1)} - 1 on [0, T].
inline std::vector<double> profile_grid(double horizon, int n = 2048) {
  std::vector<double> t(n);
  const double lg = std::log1p(horizon);
  for (int i = 0; i < n; ++i) t[i] = std::expm1(lg * i / (n - 1));
  t.back() = horizon;
  return t;
}

// The pair (R, eps) in dimension d. Immutable once constructed.
class Profile {
 public:
  static constexpr double kDefaultHorizon = 1e4;
  static constexpr double kConcavityTol = 1e-9;

  Profile(Dim d, FuncSpec R, FuncSpec eps, double horizon = kDefaultHorizon)
      : d_(d), R_(std::move(R)), eps_(std::move(eps)) {
    const ProfileReport rep = validate(horizon);
    if (!rep.valid()) throw ProfileError(rep.first_violation());
  }

  Dim d() const noexcept { return d_; }
  const FuncSpec& R() const noexcept { return R_; }
  const FuncSpec& eps() const noexcept { return eps_; }

  double R_at(double t) const { return R_(t); }
  double eps_at(double t) const { return eps_(t); }

  // phi(t) = 1 / (R(t) sqrt(-ker_d(eps(t)))).
  double phi(double t) const {
    return 1.0 / (R_(t) * root_neg_ker_eps(t));
  }

  // sqrt(-ker_d(eps(t))), computed from log eps so tiny eps does not underflow.
  double root_neg_ker_eps(double t) const {
    const double le = eps_.log_value(t);
    if (!(le < 0.0) || !std::isfinite(le)) throw DomainError("eps(t) must lie in (0,1) for phi");
    if (d_.value() == 2) return std::sqrt(-le);
    return std::exp(-0.5 * (d_.value() - 2) * le);
  }

  ProfileReport validate(double horizon, int samples = 2048) const {
    ProfileReport rep;
    rep.horizon = horizon;
    rep.samples = samples;
    const auto t = profile_grid(horizon, samples);
    // eps is tracked through its logarithm.
    std::vector<double> r(t.size()), e(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
      r[i] = R_(t[i]);
      e[i] = eps_.log_value(t[i]);
      if (!(r[i] > 0.0) || !std::isfinite(r[i])) rep.r_positive = false;
      if (!(e[i] < 0.0) || !std::isfinite(e[i])) rep.eps_in_unit_interval = false;
    }
    rep.r0_at_least_one = r[0] >= 1.0;
    double prev_slope = std::numeric_limits<double>::infinity();
    rep.sup_slope = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < t.size(); ++i) {
      const double slope = (r[i + 1] - r[i]) / (t[i + 1] - t[i]);
      if (r[i + 1] < r[i]) rep.r_nondecreasing = false;
      if (e[i + 1] > e[i]) rep.eps_nonincreasing = false;
      if (slope - prev_slope > kConcavityTol * std::max(1.0, std::abs(prev_slope))) rep.r_concave = false;
      prev_slope = slope;
      rep.sup_slope = std::max(rep.sup_slope, slope);
    }
    rep.r_sublinear = r.back() / t.back() <= 0.5;
    if (!rep.eps_in_unit_interval || !rep.r_positive) return rep;

    // Asymptotic hypotheses on [1, T].
    std::vector<double> ts, inv_phi;
    for (double x : t)
      if (x >= 1.0) {
        ts.push_back(x);
        inv_phi.push_back(1.0 / phi(x));
      }
    double prev_phi = std::numeric_limits<double>::infinity();
    for (double x : t) {
      const double p = phi(x);
      if (p > prev_phi * (1.0 + 1e-12)) rep.phi_nonincreasing = false;
      prev_phi = p;
    }
    if (ts.size() >= 2) {
      double sup_head = -std::numeric_limits<double>::infinity();
      double sup_tail = -std::numeric_limits<double>::infinity();
      const double decade = ts.back() / 10.0;
      for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
        const double dv = (inv_phi[i + 1] - inv_phi[i]) / (ts[i + 1] - ts[i]);
        if (ts[i] >= decade) {
          sup_tail = std::max(sup_tail, dv);
          rep.limsup_inv_t_phi = std::max(rep.limsup_inv_t_phi, inv_phi[i] / ts[i]);
        } else {
          sup_head = std::max(sup_head, dv);
        }
      }
      rep.limsup_inv_t_phi = std::max(rep.limsup_inv_t_phi, inv_phi.back() / ts.back());
      rep.sup_d_inv_phi = std::max(sup_head, sup_tail);
      // Bounded: the derivative has stopped growing by the last decade.
      if (std::isfinite(sup_head)) {
        const double scale = std::max(std::abs(sup_head), 1e-12);
        rep.d_inv_phi_bounded = !(sup_tail > sup_head + 0.05 * scale);
      }
    }
    return rep;
  }

 private:
  Dim d_;
  FuncSpec R_;
  FuncSpec eps_;
};

inline void to_json(nlohmann::json& j, const Profile& p) {
  j = nlohmann::json{{"d", p.d().value()}, {"R", p.R()}, {"eps", p.eps()}};
}

inline Profile profile_from_json(const nlohmann::json& j, double horizon = Profile::kDefaultHorizon) {
  if (!j.is_object()) throw ConfigError("profile must be a JSON object");
  for (const auto& [k, v] : j.items())
    if (k != "d" && k != "R" && k != "eps") throw ConfigError("unknown key '" + k + "' in profile");
  return Profile(Dim(j.at("d").get<int>()), func_spec_from_json(j.at("R")), func_spec_from_json(j.at("eps")), horizon);
}

inline nlohmann::json report_to_json(const ProfileReport& r) {
  return nlohmann::json{{"horizon", r.horizon},
                        {"samples", r.samples},
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
                        {"d_inv_phi_bounded", r.d_inv_phi_bounded}};
}

}  // namespace colander
