#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "colander/error.hpp"
#include "colander/estimate.hpp"
#include "colander/mathcore/envelope.hpp"
#include "json.hpp"

namespace colander {

struct DecayFit {
  double c_slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  int points_used = 0;
  int points_excluded = 0;  // estimates with p_hat = 0
};

inline void to_json(nlohmann::json& j, const DecayFit& f) {
  j = nlohmann::json{{"c_slope", f.c_slope},
                     {"intercept", f.intercept},
                     {"r2", f.r2},
                     {"points_used", f.points_used},
                     {"points_excluded", f.points_excluded}};
}

// Weighted least squares of y = -log p_hat on x = integral_1^rho phi. The
// delta-method variance of log p_hat is (stderr / p_hat)^2. When walk counts
// are present it is floored by the same expression at (s + 1/2)/(n + 1), so an
// estimate of exactly 1 does not receive unbounded weight.
inline DecayFit fit_log_linear(const std::vector<double>& x, const std::vector<EstimateCI>& est) {
  if (x.size() != est.size()) throw PreconditionError("decay_fit needs one estimate per radius");
  DecayFit f;
  std::vector<double> xs, ys, ws;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(est[i].p_hat > 0.0)) {
      ++f.points_excluded;
      continue;
    }
    double rel2 = std::pow(est[i].std_error / est[i].p_hat, 2);
    const auto n = static_cast<double>(est[i].n_success + est[i].n_fail);
    if (n > 0.0) {
      const double pt = (static_cast<double>(est[i].n_success) + 0.5) / (n + 1.0);
      rel2 = std::max(rel2, (1.0 - pt) / (n * pt));
    }
    xs.push_back(x[i]);
    ys.push_back(-std::log(est[i].p_hat));
    ws.push_back(1.0 / (rel2 + 1e-12));
  }
  f.points_used = static_cast<int>(xs.size());
  if (xs.size() < 4) throw FitError("decay_fit needs at least 4 estimates with p_hat > 0");
  double sw = 0.0, mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sw += ws[i];
    mx += ws[i] * xs[i];
    my += ws[i] * ys[i];
  }
  mx /= sw;
  my /= sw;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += ws[i] * (xs[i] - mx) * (xs[i] - mx);
    sxy += ws[i] * (xs[i] - mx) * (ys[i] - my);
    syy += ws[i] * (ys[i] - my) * (ys[i] - my);
  }
  if (!(sxx > 1e-14 * sw * (1.0 + mx * mx))) throw FitError("decay_fit needs distinct radii");
  f.c_slope = sxy / sxx;
  f.intercept = my - f.c_slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - f.intercept - f.c_slope * xs[i];
    sse += ws[i] * r * r;
  }
  f.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  return f;
}

inline DecayFit decay_fit(const Profile& p, const std::vector<double>& rhos, const std::vector<EstimateCI>& omegas) {
  std::vector<double> x;
  x.reserve(rhos.size());
  for (double r : rhos) x.push_back(envelope_integral(p, r));
  return fit_log_linear(x, omegas);
}

}  // namespace colander
