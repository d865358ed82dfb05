#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "colander/error.hpp"
#include "colander/mathcore/envelope.hpp"
#include "colander/mathcore/profile.hpp"

namespace colander {

// rho_0 = 0, rho_{n+1} = rho_n + R(rho_n), together with c_R = 1 - sup R'.
struct RhoSequence {
  std::vector<double> rho;
  double c_R = 1.0;

  int n_max() const { return static_cast<int>(rho.size()) - 1; }
};

inline RhoSequence rho_sequence(const Profile& p, int n_max) {
  if (n_max < 1) throw PreconditionError("rho_sequence needs n_max >= 1");
  RhoSequence seq;
  seq.rho.resize(n_max + 1);
  seq.rho[0] = 0.0;
  for (int n = 0; n < n_max; ++n) seq.rho[n + 1] = seq.rho[n] + p.R_at(seq.rho[n]);
  const ProfileReport rep = p.validate(10.0 * seq.rho.back());
  if (!rep.valid()) throw ProfileError(rep.first_violation());
  seq.c_R = rep.c_R();
  return seq;
}

// Phi(rho_n) for every stored n, accumulated layer by layer.
inline std::vector<double> big_phi_at_rho(const Profile& p, const RhoSequence& seq) {
  std::vector<double> out(seq.rho.size(), 0.0);
  for (std::size_t n = 1; n < seq.rho.size(); ++n)
    out[n] = out[n - 1] + integrate([&](double t) { return 1.0 / p.R_at(t); }, seq.rho[n - 1], seq.rho[n]).value;
  return out;
}

// i(n) = floor(sqrt(-ker_d(eps(rho_n)))).
inline int oscillation_window(const Profile& p, double rho_n) {
  return static_cast<int>(std::floor(p.root_neg_ker_eps(rho_n)));
}

// e(rho_n) = 1 / (rho_n phi(rho_n)); infinite at rho_n = 0.
inline double oscillation_excess(const Profile& p, double rho_n) {
  if (rho_n <= 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / (rho_n * p.phi(rho_n));
}

struct OscillationReport {
  int n = 0;
  int window = 0;  // i(n)
  double excess = 0.0;  // e(rho_n)
  double lhs = 0.0;  // max_{n-i(n) <= k <= n} R(rho_n)/R(rho_k)
  double rhs = 0.0;  // 1/(1 - e(rho_n))
  bool holds = false;
};

inline OscillationReport oscillation_report(const RhoSequence& seq, const Profile& p, int n) {
  if (n < 0 || n > seq.n_max()) throw PreconditionError("n outside the stored sequence");
  OscillationReport r;
  r.n = n;
  r.window = oscillation_window(p, seq.rho[n]);
  if (n < r.window) throw PreconditionError("oscillation claim needs n >= i(n)");
  r.excess = oscillation_excess(p, seq.rho[n]);
  if (!(r.excess < 1.0)) throw PreconditionError("oscillation claim needs e(rho_n) < 1");
  const double Rn = p.R_at(seq.rho[n]);
  r.lhs = 0.0;
  for (int k = n - r.window; k <= n; ++k) r.lhs = std::max(r.lhs, Rn / p.R_at(seq.rho[k]));
  r.rhs = 1.0 / (1.0 - r.excess);
  r.holds = r.lhs <= r.rhs;
  return r;
}

}  // namespace colander
