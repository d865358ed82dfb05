#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "colander/error.hpp"
#include "colander/setgen/colander.hpp"

namespace colander {

struct GridSolution {
  double omega_at_origin = 0.0;  // value at the grid node nearest the query point
  long iterations = 0;  // red-black sweeps
  double residual = 0.0;  // max |u - mean of the four neighbours| over free nodes
  double h = 0.0;
  long nodes_per_side = 0;
};

struct GridOptions {
  double tolerance = 1e-10;
  long max_sweeps = 10000000;
  Vec<2> query{0.0, 0.0};
};

// Five-point Laplace solve on the square lattice hZ^2 covering B(0, rho):
// value 1 at nodes with |x| >= rho - h, 0 at nodes inside an obstacle.
// Successive over-relaxation sweeps the red nodes (i + j even) and then the
// black ones, each in row-major order, so results are reproducible.
inline GridSolution grid_solve_2d(const Colander<2>& c, double h, const GridOptions& opt = {}) {
  const double rho = c.rho_outer();
  if (!(h > 0.0)) throw PreconditionError("grid spacing must be positive");
  for (const auto& b : c.obstacles().balls())
    if (h > 0.25 * b.radius) throw PreconditionError("grid spacing must not exceed a quarter of every obstacle radius");

  const long half = static_cast<long>(std::ceil(rho / h)) + 1;
  const long n = 2 * half + 1;
  enum : std::uint8_t { kFree = 0, kOne = 1, kZero = 2 };
  std::vector<std::uint8_t> kind(static_cast<std::size_t>(n * n));
  std::vector<double> u(static_cast<std::size_t>(n * n), 0.0);
  auto at = [n](long i, long j) { return static_cast<std::size_t>(i * n + j); };
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) {
      const Vec<2> x{(i - half) * h, (j - half) * h};
      std::uint8_t k = kFree;
      if (norm(x) >= rho - h)
        k = kOne;
      else if (!c.obstacles().empty() && c.obstacles().nearest(x).gap <= 0.0)
        k = kZero;
      kind[at(i, j)] = k;
      u[at(i, j)] = k == kOne ? 1.0 : 0.0;
    }

  const long qi = std::lround(opt.query[0] / h) + half;
  const long qj = std::lround(opt.query[1] / h) + half;
  if (qi < 0 || qj < 0 || qi >= n || qj >= n || kind[at(qi, qj)] == kOne)
    throw DomainError("query point is outside the grid domain");
  if (kind[at(qi, qj)] == kZero) throw DomainError("query point lies inside an obstacle");

  const double omega = 2.0 / (1.0 + std::sin(std::numbers::pi / static_cast<double>(n - 1)));
  GridSolution out;
  out.h = h;
  out.nodes_per_side = n;
  auto residual = [&] {
    double r = 0.0;
    for (long i = 1; i + 1 < n; ++i)
      for (long j = 1; j + 1 < n; ++j)
        if (kind[at(i, j)] == kFree) {
          const double avg = 0.25 * (u[at(i - 1, j)] + u[at(i + 1, j)] + u[at(i, j - 1)] + u[at(i, j + 1)]);
          r = std::max(r, std::abs(avg - u[at(i, j)]));
        }
    return r;
  };
  for (long sweep = 1; sweep <= opt.max_sweeps; ++sweep) {
    for (int color = 0; color < 2; ++color)
      for (long i = 1; i + 1 < n; ++i)
        for (long j = 1 + ((i + 1 + color) & 1); j + 1 < n; j += 2) {
          const std::size_t id = at(i, j);
          if (kind[id] != kFree) continue;
          const double avg = 0.25 * (u[id - n] + u[id + n] + u[id - 1] + u[id + 1]);
          u[id] += omega * (avg - u[id]);
        }
    out.iterations = sweep;
    if (sweep % 20 == 0) {
      out.residual = residual();
      if (out.residual <= opt.tolerance) {
        out.omega_at_origin = u[at(qi, qj)];
        return out;
      }
    }
  }
  throw SolverError("grid relaxation did not reach the residual tolerance");
}

}  // namespace colander
