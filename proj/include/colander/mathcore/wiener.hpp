#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "colander/error.hpp"
#include "colander/mathcore/kernel.hpp"

namespace colander {

struct WienerSeries {
  std::vector<double> partial_sums;
  bool diverging_hint = false;
};

// Partial sums of the thinness series over dyadic-like shells
// E_n = E cap {gamma^{n-1} <= |z| < gamma^n}; layer_caps[n-1] = C_d(E_n).
//   d = 2:  log(gamma) * sum n / log(1/C(E_n))
//   d >= 3: sum gamma^{-n(d-2)} C(E_n)^{d-2}
// Both are |ker_d(gamma^n) / ker_d(C(E_n))| summed over n.
// diverging_hint is set when the increments over the last quarter of the
// terms never decrease.
inline WienerSeries wiener_series(Dim d, double gamma, std::span<const double> layer_caps) {
  if (!(gamma > 1.0)) throw DomainError("gamma must exceed 1");
  WienerSeries out;
  std::vector<double> terms;
  double sum = 0.0;
  for (std::size_t i = 0; i < layer_caps.size(); ++i) {
    const double cap = layer_caps[i];
    if (!(cap > 0.0)) throw DomainError("layer capacities must be positive");
    const double n = static_cast<double>(i + 1);
    double term;
    if (d.value() == 2) {
      if (!(cap < 1.0)) throw DomainError("logarithmic layer capacity must be below 1");
      term = std::log(gamma) * n / std::log(1.0 / cap);
    } else {
      term = std::pow(cap / std::pow(gamma, n), d.value() - 2.0);
    }
    terms.push_back(term);
    sum += term;
    out.partial_sums.push_back(sum);
  }
  if (terms.size() >= 2) {
    const std::size_t start = terms.size() - std::max<std::size_t>(2, terms.size() / 4);
    bool nondecreasing = true;
    for (std::size_t i = start + 1; i < terms.size(); ++i) nondecreasing = nondecreasing && terms[i] >= terms[i - 1];
    out.diverging_hint = nondecreasing;
  }
  return out;
}

}  // namespace colander
