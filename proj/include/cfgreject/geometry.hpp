#pragma once

#include <cmath>

namespace cfgreject {

/// A point or direction in the plane.
struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2& operator+=(const Vec2& o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  constexpr Vec2& operator-=(const Vec2& o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  constexpr Vec2& operator*=(double s) {
    x *= s;
    y *= s;
    return *this;
  }

  friend constexpr Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
  friend constexpr Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
  friend constexpr Vec2 operator-(const Vec2& a) { return {-a.x, -a.y}; }
  friend constexpr Vec2 operator*(Vec2 a, double s) { return a *= s; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return a *= s; }
  friend constexpr bool operator==(const Vec2&, const Vec2&) = default;
};

constexpr double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double norm(const Vec2& a) { return std::hypot(a.x, a.y); }
constexpr double squared_norm(const Vec2& a) { return dot(a, a); }

/// Dense 2x2 matrix, row-major.
struct Mat2 {
  double xx = 0.0;
  double xy = 0.0;
  double yx = 0.0;
  double yy = 0.0;

  static constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
  static constexpr Mat2 diagonal(double a, double b) { return {a, 0.0, 0.0, b}; }

  constexpr double determinant() const { return xx * yy - xy * yx; }
  constexpr double trace() const { return xx + yy; }
  constexpr bool is_symmetric() const { return xy == yx; }

  friend constexpr Vec2 operator*(const Mat2& m, const Vec2& v) {
    return {m.xx * v.x + m.xy * v.y, m.yx * v.x + m.yy * v.y};
  }
  friend constexpr Mat2 operator+(const Mat2& a, const Mat2& b) {
    return {a.xx + b.xx, a.xy + b.xy, a.yx + b.yx, a.yy + b.yy};
  }
  friend constexpr bool operator==(const Mat2&, const Mat2&) = default;
};

/// Smallest eigenvalue of a symmetric 2x2 matrix.
inline double min_eigenvalue(const Mat2& m) {
  const double half_trace = 0.5 * m.trace();
  const double half_gap = std::hypot(0.5 * (m.xx - m.yy), m.xy);
  return half_trace - half_gap;
}

}  // namespace cfgreject
