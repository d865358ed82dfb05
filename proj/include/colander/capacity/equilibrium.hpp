#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "colander/capacity/measure.hpp"
#include "colander/error.hpp"
#include "colander/mathcore/kernel.hpp"
#include "colander/parallel.hpp"
#include "colander/setgen/ball_union.hpp"
#include "json.hpp"

namespace colander {

struct CapacityResult {
  double capacity = 0.0;
  double robin = 0.0;  // value of the equilibrium potential on the set
  double residual = 0.0;  // max |U(x_i) - robin| over support nodes
  double surface_residual = 0.0;  // same, at points between the nodes
  std::size_t nodes = 0;  // support size after pruning and the active-set loop
  std::uint64_t seed = 0;  // recorded for the manifest; the solve itself is deterministic
  bool capacity_at_least_one = false;  // logarithmic capacity >= 1: robin >= 0
  bool dense = true;
  int iterations = 0;
};

inline void to_json(nlohmann::json& j, const CapacityResult& r) {
  j = nlohmann::json{{"capacity", r.capacity},
                     {"robin", r.robin},
                     {"residual", r.residual},
                     {"surface_residual", r.surface_residual},
                     {"nodes", r.nodes},
                     {"seed", r.seed},
                     {"capacity_at_least_one", r.capacity_at_least_one},
                     {"solver", r.dense ? "dense-kkt" : "projected-gradient"},
                     {"iterations", r.iterations}};
}

struct EquilibriumOptions {
  std::size_t dense_limit = 4096;  // larger systems use projected gradient
  double pg_tolerance = 1e-9;  // relative potential spread that stops projected gradient
  int pg_max_iterations = 200000;
};

namespace detail {

template <int D>
double kernel_between(const Vec<D>& a, const Vec<D>& b) {
  const double t = distance(a, b);
  return D == 2 ? std::log(t) : -std::pow(t, -(D - 2));
}

template <int D>
Eigen::VectorXd apply_kernel(const std::vector<Vec<D>>& x, const std::vector<double>& self, const Eigen::VectorXd& w) {
  const std::size_t n = x.size();
  Eigen::VectorXd out(static_cast<Eigen::Index>(n));
  parallel_chunks(n, [&](std::size_t lo, std::size_t hi, unsigned) {
    for (std::size_t i = lo; i < hi; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        s += w[static_cast<Eigen::Index>(j)] * (i == j ? self[i] : kernel_between<D>(x[i], x[j]));
      out[static_cast<Eigen::Index>(i)] = s;
    }
  });
  return out;
}

// Euclidean projection onto the probability simplex (sort-based).
inline Eigen::VectorXd project_simplex(const Eigen::VectorXd& v) {
  std::vector<double> u(v.data(), v.data() + v.size());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0.0, theta = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    cum += u[k];
    const double t = (cum - 1.0) / static_cast<double>(k + 1);
    if (u[k] - t > 0.0) theta = t;
  }
  return (v.array() - theta).max(0.0).matrix();
}

}  // namespace detail

// Discrete equilibrium measure of a ball union: nodes_per_ball nodes on every
// sphere, minus those strictly inside another ball, weights solving
//   K w = robin * 1,  sum w = 1,  w >= 0
// where K_ij = ker_d(|x_i - x_j|) off the diagonal and the patch average minus
// reg on it. Small systems use a dense bordered solve with an active set for
// negative weights; large ones projected gradient on the simplex.
template <int D>
std::pair<DiscreteMeasure<D>, CapacityResult> equilibrium_solve(const BallUnion<D>& S, int nodes_per_ball,
                                                                double reg = 0.0, const EquilibriumOptions& opt = {}) {
  static_assert(D == 2 || D == 3, "equilibrium_solve is implemented for d = 2 and d = 3");
  if (S.empty()) throw PreconditionError("equilibrium_solve needs a nonempty set");
  if (nodes_per_ball < (D == 2 ? 8 : 64)) throw PreconditionError("too few nodes per ball");
  if (!(reg >= 0.0)) throw PreconditionError("reg must be non-negative");

  std::vector<Vec<D>> x;
  std::vector<double> self;
  for (std::size_t b = 0; b < S.size(); ++b) {
    const auto pts = sphere_nodes<D>(S[b].center, S[b].radius, nodes_per_ball);
    const double st = patch_self_term(D, S[b].radius, nodes_per_ball) - reg;
    for (const auto& p : pts) {
      bool buried = false;
      for (std::size_t o : S.balls_meeting(p, 0.0))
        if (o != b && distance(p, S[o].center) < S[o].radius * (1.0 - 1e-12)) buried = true;
      if (buried) continue;
      x.push_back(p);
      self.push_back(st);
    }
  }
  if (x.empty()) throw SolverError("every node is buried inside another ball");

  CapacityResult res;
  const std::size_t n_all = x.size();
  std::vector<std::size_t> active(n_all);
  std::iota(active.begin(), active.end(), std::size_t{0});
  Eigen::VectorXd w;
  double V = 0.0;

  if (n_all <= opt.dense_limit) {
    Eigen::MatrixXd K(static_cast<Eigen::Index>(n_all), static_cast<Eigen::Index>(n_all));
    parallel_chunks(n_all, [&](std::size_t lo, std::size_t hi, unsigned) {
      for (std::size_t i = lo; i < hi; ++i)
        for (std::size_t j = 0; j < n_all; ++j)
          K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = i == j ? self[i] : detail::kernel_between<D>(x[i], x[j]);
    });
    for (int round = 0;; ++round) {
      const auto n = static_cast<Eigen::Index>(active.size());
      Eigen::MatrixXd M(n + 1, n + 1);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) M(i, j) = K(static_cast<Eigen::Index>(active[i]), static_cast<Eigen::Index>(active[j]));
      M.col(n).setOnes();
      M.row(n).setOnes();
      M(n, n) = 0.0;
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
      rhs[n] = 1.0;
      const Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);
      const Eigen::VectorXd sol = lu.solve(rhs);
      if (!sol.allFinite() || (M * sol - rhs).cwiseAbs().maxCoeff() > 1e-8)
        throw SolverError("equilibrium system is singular");
      w = sol.head(n);
      V = -sol[n];
      res.iterations = round + 1;
      if (w.minCoeff() >= 0.0) break;
      std::vector<std::size_t> keep;
      for (Eigen::Index i = 0; i < n; ++i)
        if (w[i] > 0.0) keep.push_back(active[static_cast<std::size_t>(i)]);
      if (keep.empty()) throw SolverError("active set emptied");
      active = std::move(keep);
    }
    res.dense = true;
  } else {
    res.dense = false;
    w = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n_all), 1.0 / static_cast<double>(n_all));
    // Step from a power-iteration bound on the spectral radius.
    Eigen::VectorXd v = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n_all)).normalized();
    double lam = 1.0;
    for (int it = 0; it < 30; ++it) {
      const Eigen::VectorXd kv = detail::apply_kernel<D>(x, self, v);
      lam = kv.norm();
      v = kv / lam;
    }
    const double step = 0.5 / (1.05 * lam);
    Eigen::VectorXd y = w, w_prev = w;
    double tk = 1.0;
    bool converged = false;
    for (int it = 1; it <= opt.pg_max_iterations; ++it) {
      // Energy -w'Kw is convex on the simplex; its gradient is -2Kw.
      const Eigen::VectorXd g = detail::apply_kernel<D>(x, self, y);
      w_prev = w;
      w = detail::project_simplex(y + 2.0 * step * g);
      const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
      y = w + ((tk - 1.0) / tn) * (w - w_prev);
      tk = tn;
      res.iterations = it;
      if (it % 25 == 0) {
        const Eigen::VectorXd u = detail::apply_kernel<D>(x, self, w);
        V = w.dot(u);
        double spread = 0.0;
        for (Eigen::Index i = 0; i < w.size(); ++i)
          if (w[i] > 0.0) spread = std::max(spread, std::abs(u[i] - V));
        if (spread <= opt.pg_tolerance * std::max(1.0, std::abs(V))) {
          converged = true;
          break;
        }
      }
    }
    if (!converged) throw SolverError("projected gradient did not converge");
    active.clear();
    Eigen::VectorXd wk;
    for (Eigen::Index i = 0; i < w.size(); ++i)
      if (w[i] > 0.0) active.push_back(static_cast<std::size_t>(i));
    wk.resize(static_cast<Eigen::Index>(active.size()));
    for (std::size_t i = 0; i < active.size(); ++i) wk[static_cast<Eigen::Index>(i)] = w[static_cast<Eigen::Index>(active[i])];
    w = wk;
  }

  DiscreteMeasure<D> mu;
  for (std::size_t i = 0; i < active.size(); ++i) {
    mu.nodes.push_back(x[active[i]]);
    mu.weights.push_back(w[static_cast<Eigen::Index>(i)]);
    mu.self.push_back(self[active[i]]);
  }
  // Renormalise the rounding left by the solve.
  const double mass = mu.total_mass();
  for (double& wi : mu.weights) wi /= mass;

  res.robin = V;
  res.nodes = mu.size();
  res.residual = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) res.residual = std::max(res.residual, std::abs(potential_eval(mu, mu.nodes[i]) - V));

  // Midpoints between nodes on the surface that stays exposed.
  double surf = 0.0;
  for (std::size_t b = 0; b < S.size(); ++b) {
    std::vector<Vec<D>> probes;
    if constexpr (D == 2) {
      for (int i = 0; i < nodes_per_ball; ++i) {
        const double a = 2.0 * std::numbers::pi * (i + 0.5) / nodes_per_ball;
        probes.push_back(S[b].center + Vec<2>{S[b].radius * std::cos(a), S[b].radius * std::sin(a)});
      }
    } else {
      const auto all = sphere_nodes<D>(S[b].center, S[b].radius, 2 * nodes_per_ball + 1);
      for (std::size_t i = 1; i < all.size(); i += 2) probes.push_back(all[i]);
    }
    for (const auto& p : probes) {
      bool covered = false;
      for (std::size_t o : S.balls_meeting(p, 0.0))
        if (o != b && distance(p, S[o].center) < S[o].radius) covered = true;
      if (!covered) surf = std::max(surf, std::abs(potential_eval(mu, p) - V));
    }
  }
  res.surface_residual = surf;

  res.capacity_at_least_one = D == 2 && V >= 0.0;
  if (D == 2) {
    res.capacity = std::exp(V);
  } else {
    if (!(V < 0.0)) throw SolverError("Newtonian Robin value must be negative");
    res.capacity = kernel_inverse(Dim(D), V);
  }
  return {std::move(mu), res};
}

// Capacity oracle for recurrence_check built on equilibrium_solve.
template <int D>
auto equilibrium_oracle(int nodes_per_ball) {
  return [nodes_per_ball](const BallUnion<D>& S) { return equilibrium_solve<D>(S, nodes_per_ball).second.capacity; };
}

}  // namespace colander
