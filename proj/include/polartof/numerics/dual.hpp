#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace polartof {

/// Forward-mode dual number carrying N partial derivatives.
///
/// All generic code in this library is written against an unqualified scalar
/// vocabulary (`sqrt`, `exp`, `cos`, ...) declared in namespace polartof, so the
/// same template evaluates on `double` or on `Dual<N>`.
template <std::size_t N>
struct Dual {
  double v = 0.0;
  std::array<double, N> d{};

  constexpr Dual() = default;
  constexpr Dual(double value) : v(value) {}  // NOLINT: implicit lift of constants
  constexpr Dual(double value, const std::array<double, N>& grad) : v(value), d(grad) {}

  /// Independent variable `i` with unit seed.
  static constexpr Dual variable(double value, std::size_t i) {
    Dual r(value);
    r.d[i] = 1.0;
    return r;
  }

  constexpr Dual operator-() const {
    Dual r(-v);
    for (std::size_t i = 0; i < N; ++i) r.d[i] = -d[i];
    return r;
  }

  constexpr Dual& operator+=(const Dual& o) {
    v += o.v;
    for (std::size_t i = 0; i < N; ++i) d[i] += o.d[i];
    return *this;
  }
  constexpr Dual& operator-=(const Dual& o) {
    v -= o.v;
    for (std::size_t i = 0; i < N; ++i) d[i] -= o.d[i];
    return *this;
  }
  constexpr Dual& operator*=(const Dual& o) {
    for (std::size_t i = 0; i < N; ++i) d[i] = d[i] * o.v + v * o.d[i];
    v *= o.v;
    return *this;
  }
  constexpr Dual& operator/=(const Dual& o) {
    const double inv = 1.0 / o.v;
    const double q = v * inv;
    for (std::size_t i = 0; i < N; ++i) d[i] = (d[i] - q * o.d[i]) * inv;
    v = q;
    return *this;
  }
  constexpr Dual& operator+=(double s) { v += s; return *this; }
  constexpr Dual& operator-=(double s) { v -= s; return *this; }
  constexpr Dual& operator*=(double s) {
    v *= s;
    for (auto& x : d) x *= s;
    return *this;
  }
  constexpr Dual& operator/=(double s) { return *this *= (1.0 / s); }
};

template <std::size_t N> constexpr Dual<N> operator+(Dual<N> a, const Dual<N>& b) { return a += b; }
template <std::size_t N> constexpr Dual<N> operator-(Dual<N> a, const Dual<N>& b) { return a -= b; }
template <std::size_t N> constexpr Dual<N> operator*(Dual<N> a, const Dual<N>& b) { return a *= b; }
template <std::size_t N> constexpr Dual<N> operator/(Dual<N> a, const Dual<N>& b) { return a /= b; }
template <std::size_t N> constexpr Dual<N> operator+(Dual<N> a, double b) { return a += b; }
template <std::size_t N> constexpr Dual<N> operator-(Dual<N> a, double b) { return a -= b; }
template <std::size_t N> constexpr Dual<N> operator*(Dual<N> a, double b) { return a *= b; }
template <std::size_t N> constexpr Dual<N> operator/(Dual<N> a, double b) { return a /= b; }
template <std::size_t N> constexpr Dual<N> operator+(double a, Dual<N> b) { return b += a; }
template <std::size_t N> constexpr Dual<N> operator-(double a, const Dual<N>& b) { return (-b) += a; }
template <std::size_t N> constexpr Dual<N> operator*(double a, Dual<N> b) { return b *= a; }
template <std::size_t N> constexpr Dual<N> operator/(double a, const Dual<N>& b) { return Dual<N>(a) /= b; }

template <std::size_t N> constexpr bool operator<(const Dual<N>& a, const Dual<N>& b) { return a.v < b.v; }
template <std::size_t N> constexpr bool operator>(const Dual<N>& a, const Dual<N>& b) { return a.v > b.v; }
template <std::size_t N> constexpr bool operator<=(const Dual<N>& a, const Dual<N>& b) { return a.v <= b.v; }
template <std::size_t N> constexpr bool operator>=(const Dual<N>& a, const Dual<N>& b) { return a.v >= b.v; }
template <std::size_t N> constexpr bool operator<(const Dual<N>& a, double b) { return a.v < b; }
template <std::size_t N> constexpr bool operator>(const Dual<N>& a, double b) { return a.v > b; }
template <std::size_t N> constexpr bool operator<=(const Dual<N>& a, double b) { return a.v <= b; }
template <std::size_t N> constexpr bool operator>=(const Dual<N>& a, double b) { return a.v >= b; }
template <std::size_t N> constexpr bool operator<(double a, const Dual<N>& b) { return a < b.v; }
template <std::size_t N> constexpr bool operator>(double a, const Dual<N>& b) { return a > b.v; }

namespace detail {
// f(a) with f'(a.v) = slope
template <std::size_t N>
constexpr Dual<N> chain(const Dual<N>& a, double value, double slope) {
  Dual<N> r(value);
  for (std::size_t i = 0; i < N; ++i) r.d[i] = slope * a.d[i];
  return r;
}
}  // namespace detail

// Scalar vocabulary. Plain-double overloads live here too so unqualified calls
// inside namespace polartof resolve without `using std::...`.
inline double sqrt(double x) { return std::sqrt(x); }
inline double exp(double x) { return std::exp(x); }
inline double log(double x) { return std::log(x); }
inline double log1p(double x) { return std::log1p(x); }
inline double sin(double x) { return std::sin(x); }
inline double cos(double x) { return std::cos(x); }
inline double tan(double x) { return std::tan(x); }
inline double asin(double x) { return std::asin(x); }
inline double acos(double x) { return std::acos(x); }
inline double atan(double x) { return std::atan(x); }
inline double atan2(double y, double x) { return std::atan2(y, x); }
inline double abs(double x) { return std::fabs(x); }
inline double pow(double x, double p) { return std::pow(x, p); }

inline double value_of(double x) { return x; }
template <std::size_t N> constexpr double value_of(const Dual<N>& x) { return x.v; }

template <std::size_t N> Dual<N> sqrt(const Dual<N>& a) {
  const double s = std::sqrt(a.v);
  return detail::chain(a, s, s > 0.0 ? 0.5 / s : 0.0);
}
template <std::size_t N> Dual<N> exp(const Dual<N>& a) {
  const double e = std::exp(a.v);
  return detail::chain(a, e, e);
}
template <std::size_t N> Dual<N> log(const Dual<N>& a) { return detail::chain(a, std::log(a.v), 1.0 / a.v); }
template <std::size_t N> Dual<N> log1p(const Dual<N>& a) {
  return detail::chain(a, std::log1p(a.v), 1.0 / (1.0 + a.v));
}
template <std::size_t N> Dual<N> sin(const Dual<N>& a) { return detail::chain(a, std::sin(a.v), std::cos(a.v)); }
template <std::size_t N> Dual<N> cos(const Dual<N>& a) { return detail::chain(a, std::cos(a.v), -std::sin(a.v)); }
template <std::size_t N> Dual<N> tan(const Dual<N>& a) {
  const double t = std::tan(a.v);
  return detail::chain(a, t, 1.0 + t * t);
}
template <std::size_t N> Dual<N> asin(const Dual<N>& a) {
  return detail::chain(a, std::asin(a.v), 1.0 / std::sqrt(1.0 - a.v * a.v));
}
template <std::size_t N> Dual<N> acos(const Dual<N>& a) {
  return detail::chain(a, std::acos(a.v), -1.0 / std::sqrt(1.0 - a.v * a.v));
}
template <std::size_t N> Dual<N> atan(const Dual<N>& a) {
  return detail::chain(a, std::atan(a.v), 1.0 / (1.0 + a.v * a.v));
}
template <std::size_t N> Dual<N> atan2(const Dual<N>& y, const Dual<N>& x) {
  const double r2 = x.v * x.v + y.v * y.v;
  Dual<N> r(std::atan2(y.v, x.v));
  for (std::size_t i = 0; i < N; ++i) r.d[i] = (x.v * y.d[i] - y.v * x.d[i]) / r2;
  return r;
}
template <std::size_t N> Dual<N> abs(const Dual<N>& a) { return a.v < 0.0 ? -a : a; }
template <std::size_t N> Dual<N> pow(const Dual<N>& a, double p) {
  const double f = std::pow(a.v, p);
  return detail::chain(a, f, p * std::pow(a.v, p - 1.0));
}

template <typename T> T square(const T& x) { return x * x; }

template <typename T> T sigmoid(const T& x) {
  if (value_of(x) >= 0.0) return 1.0 / (1.0 + exp(-x));
  const T e = exp(x);
  return e / (1.0 + e);
}

// log(1 + e^x), stable for large |x|.
template <typename T> T softplus(const T& x) {
  if (value_of(x) > 30.0) return x + log1p(exp(-x));
  return log1p(exp(x));
}

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

// Inverse of softplus for y > 0.
inline double softplus_inverse(double y) {
  if (y > 30.0) return y + std::log1p(-std::exp(-y));
  return std::log(std::expm1(y));
}

}  // namespace polartof
