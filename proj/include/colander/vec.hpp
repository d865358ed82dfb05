#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>

namespace colander {

// Point / vector in R^D. An aggregate, so Vec<2>{x, y} works.
template <int D>
struct Vec {
  std::array<double, D> c;

  constexpr double& operator[](int i) { return c[i]; }
  constexpr const double& operator[](int i) const { return c[i]; }
  constexpr auto begin() { return c.begin(); }
  constexpr auto end() { return c.end(); }
  constexpr auto begin() const { return c.begin(); }
  constexpr auto end() const { return c.end(); }
  static constexpr int size() { return D; }
  friend constexpr bool operator==(const Vec&, const Vec&) = default;
};

template <int D>
constexpr Vec<D> operator+(const Vec<D>& a, const Vec<D>& b) {
  Vec<D> r{};
  for (int i = 0; i < D; ++i) r[i] = a[i] + b[i];
  return r;
}

template <int D>
constexpr Vec<D> operator-(const Vec<D>& a, const Vec<D>& b) {
  Vec<D> r{};
  for (int i = 0; i < D; ++i) r[i] = a[i] - b[i];
  return r;
}

template <int D>
constexpr Vec<D> operator*(double s, const Vec<D>& a) {
  Vec<D> r{};
  for (int i = 0; i < D; ++i) r[i] = s * a[i];
  return r;
}

template <int D>
constexpr double dot(const Vec<D>& a, const Vec<D>& b) {
  double s = 0.0;
  for (int i = 0; i < D; ++i) s += a[i] * b[i];
  return s;
}

template <int D>
inline double norm(const Vec<D>& a) {
  return std::sqrt(dot(a, a));
}

template <int D>
inline double distance(const Vec<D>& a, const Vec<D>& b) {
  return norm(a - b);
}

template <int D>
constexpr Vec<D> unit_axis(int i) {
  Vec<D> r{};
  r[i] = 1.0;
  return r;
}

// Volume of the unit ball in R^d.
inline double unit_ball_volume(int d) {
  return std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
}

// Surface area of the unit sphere S^{d-1}.
inline double unit_sphere_area(int d) {
  return d * unit_ball_volume(d);
}

}  // namespace colander
