#pragma once

#include <cmath>
#include <cstdint>

#include "json.hpp"

namespace colander {

// Binomial Monte Carlo estimate. Censored trials enter neither count.
struct EstimateCI {
  double p_hat = 0.0;
  double std_error = 0.0;  // sqrt(p(1-p)/n)
  std::int64_t n_success = 0;
  std::int64_t n_fail = 0;
  std::int64_t n_censored = 0;

  static constexpr double kCensorCap = 1e-3;

  static EstimateCI from_counts(std::int64_t success, std::int64_t fail, std::int64_t censored) {
    EstimateCI e;
    e.n_success = success;
    e.n_fail = fail;
    e.n_censored = censored;
    const std::int64_t n = success + fail;
    if (n > 0) {
      e.p_hat = static_cast<double>(success) / static_cast<double>(n);
      e.std_error = std::sqrt(e.p_hat * (1.0 - e.p_hat) / static_cast<double>(n));
    }
    return e;
  }

  std::int64_t n_walks() const noexcept { return n_success + n_fail + n_censored; }
  // More than 0.1% of the walks were cut off, or none finished.
  bool flagged() const noexcept {
    return n_success + n_fail == 0 || static_cast<double>(n_censored) > kCensorCap * static_cast<double>(n_walks());
  }
  EstimateCI complement() const { return from_counts(n_fail, n_success, n_censored); }
};

inline void to_json(nlohmann::json& j, const EstimateCI& e) {
  j = nlohmann::json{{"p_hat", e.p_hat},         {"stderr", e.std_error},     {"n_success", e.n_success},
                     {"n_fail", e.n_fail},       {"n_censored", e.n_censored}, {"flagged", e.flagged()}};
}

}  // namespace colander
