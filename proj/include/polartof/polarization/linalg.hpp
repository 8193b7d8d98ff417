#pragma once

#include <array>
#include <cstddef>

#include "polartof/numerics/dual.hpp"

namespace polartof {

template <typename T>
struct Vec3 {
  T x{}, y{}, z{};

  constexpr Vec3() = default;
  constexpr Vec3(T x_, T y_, T z_) : x(x_), y(y_), z(z_) {}
  template <typename U>
  static constexpr Vec3 from(const Vec3<U>& o) { return Vec3(T(o.x), T(o.y), T(o.z)); }

  constexpr Vec3 operator-() const { return {-x, -y, -z}; }
  constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Vec3 operator*(const T& s) const { return {x * s, y * s, z * s}; }
  constexpr Vec3 operator/(const T& s) const { return {x / s, y / s, z / s}; }
};

template <typename T> constexpr T dot(const Vec3<T>& a, const Vec3<T>& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
template <typename T> constexpr Vec3<T> cross(const Vec3<T>& a, const Vec3<T>& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
template <typename T> T norm(const Vec3<T>& a) { return sqrt(dot(a, a)); }
template <typename T> Vec3<T> normalized(const Vec3<T>& a) { return a / norm(a); }

template <typename T> Vec3<double> value_of(const Vec3<T>& a) {
  return {value_of(a.x), value_of(a.y), value_of(a.z)};
}

using Vec3d = Vec3<double>;

/// Stokes 4-vector (s0 intensity, s1 horizontal-vertical, s2 +45/-45, s3 right-left).
template <typename T>
struct Stokes {
  std::array<T, 4> s{};

  constexpr T& operator[](std::size_t i) { return s[i]; }
  constexpr const T& operator[](std::size_t i) const { return s[i]; }
};

/// 4x4 Mueller matrix, row-major storage, element (row, col).
template <typename T>
struct Mueller {
  std::array<T, 16> m{};

  constexpr T& operator()(std::size_t r, std::size_t c) { return m[4 * r + c]; }
  constexpr const T& operator()(std::size_t r, std::size_t c) const { return m[4 * r + c]; }

  static constexpr Mueller zero() { return {}; }
  static constexpr Mueller identity() { return diag(T(1), T(1), T(1), T(1)); }
  static constexpr Mueller diag(T a, T b, T c, T d) {
    Mueller r;
    r(0, 0) = a;
    r(1, 1) = b;
    r(2, 2) = c;
    r(3, 3) = d;
    return r;
  }

  constexpr Mueller& operator+=(const Mueller& o) {
    for (std::size_t i = 0; i < 16; ++i) m[i] += o.m[i];
    return *this;
  }
  constexpr Mueller& operator-=(const Mueller& o) {
    for (std::size_t i = 0; i < 16; ++i) m[i] -= o.m[i];
    return *this;
  }
  constexpr Mueller& operator*=(const T& s) {
    for (auto& x : m) x *= s;
    return *this;
  }
};

template <typename T> constexpr Mueller<T> operator+(Mueller<T> a, const Mueller<T>& b) { return a += b; }
template <typename T> constexpr Mueller<T> operator-(Mueller<T> a, const Mueller<T>& b) { return a -= b; }
template <typename T> constexpr Mueller<T> operator*(Mueller<T> a, const T& s) { return a *= s; }
template <typename T> constexpr Mueller<T> operator*(const T& s, Mueller<T> a) { return a *= s; }

template <typename T>
constexpr Mueller<T> operator*(const Mueller<T>& a, const Mueller<T>& b) {
  Mueller<T> r;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      T acc = a(i, 0) * b(0, j);
      for (std::size_t k = 1; k < 4; ++k) acc += a(i, k) * b(k, j);
      r(i, j) = acc;
    }
  return r;
}

template <typename T>
constexpr Stokes<T> operator*(const Mueller<T>& a, const Stokes<T>& s) {
  Stokes<T> r;
  for (std::size_t i = 0; i < 4; ++i) {
    T acc = a(i, 0) * s[0];
    for (std::size_t k = 1; k < 4; ++k) acc += a(i, k) * s[k];
    r[i] = acc;
  }
  return r;
}

template <typename T> constexpr Mueller<T> transpose(const Mueller<T>& a) {
  Mueller<T> r;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) r(i, j) = a(j, i);
  return r;
}

template <typename T> Mueller<double> value_of(const Mueller<T>& a) {
  Mueller<double> r;
  for (std::size_t i = 0; i < 16; ++i) r.m[i] = value_of(a.m[i]);
  return r;
}

using StokesVector = Stokes<double>;
using MuellerMatrix = Mueller<double>;

}  // namespace polartof
