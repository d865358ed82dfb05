#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "colander/error.hpp"
#include "colander/vec.hpp"

namespace colander {

template <int D>
struct Ball {
  Vec<D> center;
  double radius;

  friend bool operator==(const Ball&, const Ball&) = default;
};

// Immutable finite union of closed balls with a k-d tree over the centers.
// Each tree node stores the bounding box of its centers and the largest radius
// below it, so |x - box| - rmax is a lower bound for every gap in the subtree.
template <int D>
class BallUnion {
 public:
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  struct Nearest {
    double gap = std::numeric_limits<double>::infinity();  // |x - c| - r
    std::size_t index = npos;
  };

  BallUnion() = default;

  explicit BallUnion(std::vector<Ball<D>> balls) : balls_(std::move(balls)) {
    for (std::size_t i = 0; i < balls_.size(); ++i) {
      const auto& b = balls_[i];
      if (!(b.radius > 0.0) || !std::isfinite(b.radius))
        throw GeometryError("ball " + std::to_string(i) + " has non-positive radius");
      for (double c : b.center)
        if (!std::isfinite(c)) throw GeometryError("ball " + std::to_string(i) + " has a non-finite center");
    }
    build();
  }

  std::size_t size() const noexcept { return balls_.size(); }
  bool empty() const noexcept { return balls_.empty(); }
  const std::vector<Ball<D>>& balls() const noexcept { return balls_; }
  const Ball<D>& operator[](std::size_t i) const { return balls_[i]; }

  double max_radius() const noexcept { return nodes_.empty() ? 0.0 : nodes_[0].rmax; }

  // Exact min over balls of |x - c| - r; ties resolve to the smallest index.
  Nearest nearest(const Vec<D>& x) const {
    Nearest best;
    if (!nodes_.empty()) descend(0, x, best);
    return best;
  }

  Nearest nearest_brute(const Vec<D>& x) const {
    Nearest best;
    for (std::size_t i = 0; i < balls_.size(); ++i) {
      const double g = distance(x, balls_[i].center) - balls_[i].radius;
      if (g < best.gap) best = {g, i};
    }
    return best;
  }

  bool contains(const Vec<D>& x) const { return nearest(x).gap <= 0.0; }

  // Indices (ascending) of balls whose center lies within `radius` of x.
  std::vector<std::size_t> centers_within(const Vec<D>& x, double radius) const {
    std::vector<std::size_t> out;
    if (!nodes_.empty()) collect(0, x, radius, [](const Ball<D>&) { return 0.0; }, out);
    std::sort(out.begin(), out.end());
    return out;
  }

  // Indices (ascending) of balls meeting the closed ball B(x, radius).
  std::vector<std::size_t> balls_meeting(const Vec<D>& x, double radius) const {
    std::vector<std::size_t> out;
    if (!nodes_.empty()) collect(0, x, radius, [](const Ball<D>& b) { return b.radius; }, out);
    std::sort(out.begin(), out.end());
    return out;
  }

  // Same centers, every radius multiplied by s.
  BallUnion scaled_radii(double s) const {
    std::vector<Ball<D>> b = balls_;
    for (auto& x : b) x.radius *= s;
    return BallUnion(std::move(b));
  }

 private:
  static constexpr std::size_t kLeaf = 8;

  struct Node {
    Vec<D> lo, hi;
    double rmax = 0.0;
    std::size_t begin = 0, end = 0;
    int left = -1, right = -1;
  };

  void build() {
    order_.resize(balls_.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    nodes_.clear();
    if (!balls_.empty()) make_node(0, balls_.size());
  }

  int make_node(std::size_t begin, std::size_t end) {
    Node n;
    n.begin = begin;
    n.end = end;
    for (int k = 0; k < D; ++k) {
      n.lo[k] = std::numeric_limits<double>::infinity();
      n.hi[k] = -std::numeric_limits<double>::infinity();
    }
    for (std::size_t i = begin; i < end; ++i) {
      const auto& b = balls_[order_[i]];
      for (int k = 0; k < D; ++k) {
        n.lo[k] = std::min(n.lo[k], b.center[k]);
        n.hi[k] = std::max(n.hi[k], b.center[k]);
      }
      n.rmax = std::max(n.rmax, b.radius);
    }
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(n);
    if (end - begin <= kLeaf) return id;

    int axis = 0;
    for (int k = 1; k < D; ++k)
      if (n.hi[k] - n.lo[k] > n.hi[axis] - n.lo[axis]) axis = k;
    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::size_t a, std::size_t b) {
                       const double ca = balls_[a].center[axis], cb = balls_[b].center[axis];
                       return ca < cb || (ca == cb && a < b);
                     });
    const int l = make_node(begin, mid);
    const int r = make_node(mid, end);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  static double box_distance(const Node& n, const Vec<D>& x) {
    double s = 0.0;
    for (int k = 0; k < D; ++k) {
      const double e = x[k] < n.lo[k] ? n.lo[k] - x[k] : (x[k] > n.hi[k] ? x[k] - n.hi[k] : 0.0);
      s += e * e;
    }
    return std::sqrt(s);
  }

  void descend(int id, const Vec<D>& x, Nearest& best) const {
    const Node& n = nodes_[id];
    if (box_distance(n, x) - n.rmax > best.gap) return;
    if (n.left < 0) {
      for (std::size_t i = n.begin; i < n.end; ++i) {
        const std::size_t j = order_[i];
        const double g = distance(x, balls_[j].center) - balls_[j].radius;
        if (g < best.gap || (g == best.gap && j < best.index)) best = {g, j};
      }
      return;
    }
    const double dl = box_distance(nodes_[n.left], x) - nodes_[n.left].rmax;
    const double dr = box_distance(nodes_[n.right], x) - nodes_[n.right].rmax;
    if (dl <= dr) {
      descend(n.left, x, best);
      descend(n.right, x, best);
    } else {
      descend(n.right, x, best);
      descend(n.left, x, best);
    }
  }

  template <class Slack>
  void collect(int id, const Vec<D>& x, double radius, Slack slack, std::vector<std::size_t>& out) const {
    const Node& n = nodes_[id];
    if (box_distance(n, x) > radius + n.rmax) return;
    if (n.left < 0) {
      for (std::size_t i = n.begin; i < n.end; ++i) {
        const std::size_t j = order_[i];
        if (distance(x, balls_[j].center) <= radius + slack(balls_[j])) out.push_back(j);
      }
      return;
    }
    collect(n.left, x, radius, slack, out);
    collect(n.right, x, radius, slack, out);
  }

  std::vector<Ball<D>> balls_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace colander
