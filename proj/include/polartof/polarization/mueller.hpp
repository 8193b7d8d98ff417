#pragma once

// Stokes/Mueller algebra.
//
// Conventions (fixed for the whole library):
//   s1 = horizontal - vertical, s2 = +45 - (-45), s3 = right - left circular.
//   A frame rotated by phi about the propagation direction maps Stokes vectors
//   through rotation_mueller(phi). Rotated elements are R(-theta) E0 R(theta).
//   Retarders follow the decreasing-phase convention, giving
//   QWP0 = [[1,0,0,0],[0,1,0,0],[0,0,0,-1],[0,0,1,0]].

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "polartof/error.hpp"
#include "polartof/numerics/rng.hpp"
#include "polartof/polarization/linalg.hpp"

namespace polartof {

template <typename T>
Mueller<T> rotation_mueller(const T& phi) {
  const T c = cos(2.0 * phi);
  const T s = sin(2.0 * phi);
  Mueller<T> r = Mueller<T>::identity();
  r(1, 1) = c;
  r(1, 2) = s;
  r(2, 1) = -s;
  r(2, 2) = c;
  return r;
}

enum class OpticalElement { LinearPolarizer, HalfWavePlate, QuarterWavePlate };

template <typename T>
Mueller<T> axis_aligned_element(OpticalElement kind) {
  switch (kind) {
    case OpticalElement::LinearPolarizer: {
      Mueller<T> r;
      r(0, 0) = 0.5;
      r(0, 1) = 0.5;
      r(1, 0) = 0.5;
      r(1, 1) = 0.5;
      return r;
    }
    case OpticalElement::HalfWavePlate:
      return Mueller<T>::diag(T(1), T(1), T(-1), T(-1));
    case OpticalElement::QuarterWavePlate: {
      Mueller<T> r;
      r(0, 0) = 1.0;
      r(1, 1) = 1.0;
      r(2, 3) = -1.0;
      r(3, 2) = 1.0;
      return r;
    }
  }
  return Mueller<T>::identity();
}

template <typename T>
Mueller<T> element_mueller(OpticalElement kind, const T& theta) {
  return rotation_mueller<T>(-theta) * axis_aligned_element<T>(kind) * rotation_mueller<T>(theta);
}

enum class FresnelMode { Reflect, Transmit };

/// Fresnel Mueller matrix from the cosine of the incidence angle. The
/// transmission matrix carries the (eta cos_t / cos_i) radiance factor, so
/// [F_R]00 + [F_T]00 = 1 for unpolarized light. s/p axes are x/y of the
/// plane-of-incidence frame.
template <typename T>
Mueller<T> fresnel_mueller_cos(FresnelMode mode, const T& eta, const T& cos_i) {
  const T sin2_i = 1.0 - cos_i * cos_i;
  const T sin2_t = sin2_i / (eta * eta);
  Mueller<T> r;
  if (sin2_t > 1.0) {
    if (mode == FresnelMode::Transmit)
      throw Error(ErrorCode::TotalInternalReflection, "transmission beyond the critical angle");
    // Total internal reflection: unit amplitudes, relative phase only.
    const T q = sqrt(sin2_t - 1.0);
    const T delta_s = -2.0 * atan(eta * q / cos_i);
    const T delta_p = -2.0 * atan(q / (eta * cos_i));
    const T delta = delta_s - delta_p;
    r(0, 0) = 1.0;
    r(1, 1) = 1.0;
    r(2, 2) = cos(delta);
    r(3, 3) = cos(delta);
    r(2, 3) = sin(delta);
    r(3, 2) = -sin(delta);
    return r;
  }
  const T cos_t = sqrt(1.0 - sin2_t);
  if (mode == FresnelMode::Reflect) {
    const T rs = (cos_i - eta * cos_t) / (cos_i + eta * cos_t);
    const T rp = (eta * cos_i - cos_t) / (eta * cos_i + cos_t);
    const T big_rs = rs * rs;
    const T big_rp = rp * rp;
    r(0, 0) = 0.5 * (big_rs + big_rp);
    r(0, 1) = 0.5 * (big_rs - big_rp);
    r(1, 0) = r(0, 1);
    r(1, 1) = r(0, 0);
    r(2, 2) = rs * rp;
    r(3, 3) = rs * rp;
    return r;
  }
  const T ts = 2.0 * cos_i / (cos_i + eta * cos_t);
  const T tp = 2.0 * cos_i / (eta * cos_i + cos_t);
  const T k = eta * cos_t / cos_i;
  const T big_ts = k * ts * ts;
  const T big_tp = k * tp * tp;
  r(0, 0) = 0.5 * (big_ts + big_tp);
  r(0, 1) = 0.5 * (big_ts - big_tp);
  r(1, 0) = r(0, 1);
  r(1, 1) = r(0, 0);
  r(2, 2) = k * ts * tp;
  r(3, 3) = k * ts * tp;
  return r;
}

template <typename T>
Mueller<T> fresnel_mueller(FresnelMode mode, const T& eta, const T& theta) {
  if (!(value_of(theta) >= 0.0 && value_of(theta) < std::numbers::pi / 2))
    throw Error(ErrorCode::InvalidAngle, "incidence angle must lie in [0, pi/2)");
  if (!(value_of(eta) > 0.0)) throw Error(ErrorCode::InvalidParam, "refractive-index ratio must be positive");
  return fresnel_mueller_cos<T>(mode, eta, cos(theta));
}

/// Incident/outgoing directions point away from the surface. `reference_up`
/// supplies the halfway-frame y axis when h is parallel to the propagation
/// direction (always the case for coaxial capture).
template <typename T>
struct LocalGeometry {
  Vec3<T> omega_i;
  Vec3<T> omega_o;
  Vec3<T> n;
  Vec3d reference_up{0.0, 1.0, 0.0};

  Vec3<T> halfway() const {
    const Vec3<T> s = omega_i + omega_o;
    if (value_of(dot(s, s)) < 1e-24) throw Error(ErrorCode::DegenerateFrame, "omega_i = -omega_o has no halfway vector");
    return normalized(s);
  }
  T cos_theta_i() const { return dot(n, omega_i); }
  T cos_theta_o() const { return dot(n, omega_o); }
  T cos_theta_h() const { return dot(halfway(), n); }
};

/// Coaxial geometry: both directions equal `toward_camera`.
template <typename T>
LocalGeometry<T> coaxial_geometry(const Vec3<T>& toward_camera, const Vec3<T>& n, const Vec3d& up = {0.0, 1.0, 0.0}) {
  return {toward_camera, toward_camera, n, up};
}

enum class FrameConversion { IncidentHalfwayToNormal, NormalToOutgoingHalfway };

namespace detail {

inline constexpr double kFrameEps = 1e-9;

// Unit y axis of the frame around propagation `z` spanned with `v`, or false.
template <typename T>
bool frame_y_axis(const Vec3<T>& z, const Vec3<T>& v, Vec3<T>& y) {
  const Vec3<T> perp = v - z * dot(v, z);
  const T len = norm(perp);
  if (value_of(len) < kFrameEps) return false;
  y = perp / len;
  return true;
}

// Signed angle from the halfway-frame y axis to the normal-frame y axis,
// measured right-handed about propagation direction `z`.
template <typename T>
T halfway_to_normal_angle(const LocalGeometry<T>& geom, const Vec3<T>& z) {
  Vec3<T> y_n;
  Vec3<T> y_h;
  const bool has_n = frame_y_axis(z, geom.n, y_n);
  bool has_h = frame_y_axis(z, geom.halfway(), y_h);
  if (!has_h) has_h = frame_y_axis(z, Vec3<T>::from(geom.reference_up), y_h);
  if (!has_h) has_h = frame_y_axis(z, Vec3<T>(T(1), T(0), T(0)), y_h);
  if (!has_n) {
    if (!frame_y_axis(z, geom.halfway(), y_h))
      throw Error(ErrorCode::DegenerateFrame, "propagation is parallel to both h and n");
    return T(0);
  }
  return atan2(dot(cross(y_h, y_n), z), dot(y_h, y_n));
}

}  // namespace detail

/// Frame-conversion Mueller matrix between halfway and surface-normal
/// coordinates. The incident angle is measured about the incident propagation
/// direction (-omega_i); the outgoing angle about -omega_o, so that in the
/// coaxial case C_{n->o} is the inverse of C_{i->n}.
template <typename T>
Mueller<T> coordinate_conversion(const LocalGeometry<T>& geom, FrameConversion which) {
  if (which == FrameConversion::IncidentHalfwayToNormal)
    return rotation_mueller<T>(detail::halfway_to_normal_angle(geom, -geom.omega_i));
  return rotation_mueller<T>(-detail::halfway_to_normal_angle(geom, -geom.omega_o));
}

inline double degree_of_polarization(const StokesVector& s) {
  if (!(s[0] > 0.0)) throw Error(ErrorCode::ZeroIntensity, "degree of polarization needs s0 > 0");
  return std::sqrt(s[1] * s[1] + s[2] * s[2] + s[3] * s[3]) / s[0];
}

/// Unit-intensity, fully polarized states on a Fibonacci spherical lattice.
inline std::vector<StokesVector> poincare_uniform_states(std::size_t n) {
  std::vector<StokesVector> out;
  out.reserve(n);
  const double golden_angle = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (std::size_t k = 0; k < n; ++k) {
    const double z = 1.0 - (2.0 * static_cast<double>(k) + 1.0) / static_cast<double>(n);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden_angle * static_cast<double>(k);
    out.push_back({{1.0, r * std::cos(phi), r * std::sin(phi), z}});
  }
  return out;
}

namespace detail {
// 26 probe states: 6 axis and 8 corner directions at unit DOP, 12 edge
// directions at DOP 1/2.
inline const std::array<StokesVector, 26>& physicality_probes() {
  static const std::array<StokesVector, 26> probes = [] {
    std::array<StokesVector, 26> p{};
    std::size_t k = 0;
    for (int a = -1; a <= 1; ++a)
      for (int b = -1; b <= 1; ++b)
        for (int c = -1; c <= 1; ++c) {
          const int nz = (a != 0) + (b != 0) + (c != 0);
          if (nz == 0) continue;
          const double len = std::sqrt(static_cast<double>(nz));
          const double dop = nz == 2 ? 0.5 : 1.0;
          p[k++] = {{1.0, dop * a / len, dop * b / len, dop * c / len}};
        }
    return p;
  }();
  return probes;
}
}  // namespace detail

inline bool is_physical(const MuellerMatrix& m, double tol) {
  double max_abs = 0.0;
  for (double x : m.m) {
    if (!std::isfinite(x)) return false;
    max_abs = std::max(max_abs, std::fabs(x));
  }
  if (m(0, 0) < max_abs - tol) return false;
  for (const auto& s : detail::physicality_probes()) {
    const StokesVector o = m * s;
    if (o[0] < -tol) return false;
    const double pol = std::sqrt(o[1] * o[1] + o[2] * o[2] + o[3] * o[3]);
    if (pol > o[0] * (1.0 + tol) + tol) return false;
  }
  return true;
}

/// Random physical Mueller matrix: convex mixture of 1-3 non-depolarizing
/// matrices from random Jones matrices plus an optional ideal depolarizer,
/// scaled so [M]00 lies in [0.2, 1].
inline MuellerMatrix random_physical_mueller(Rng& rng) {
  struct C {
    double re, im;
  };
  auto mul = [](C a, C b) { return C{a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re}; };
  auto conj = [](C a) { return C{a.re, -a.im}; };
  auto pure = [&](const std::array<C, 4>& j) {
    // Coherency vector ordering (xx*, xy*, yx*, yy*) of J (x) J*.
    std::array<std::array<C, 4>, 4> k{};
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int c = 0; c < 2; ++c)
          for (int d = 0; d < 2; ++d) k[2 * a + c][2 * b + d] = mul(j[2 * a + b], conj(j[2 * c + d]));
    // Stokes = A * coherency, A = [[1,0,0,1],[1,0,0,-1],[0,1,1,0],[0,i,-i,0]] (with s3 sign fixed).
    // M = A K A^{-1}, A^{-1} = 0.5 * [[1,1,0,0],[0,0,1,-i],[0,0,1,i],[1,-1,0,0]].
    const std::array<std::array<C, 4>, 4> a = {{{{{1, 0}, {0, 0}, {0, 0}, {1, 0}}},
                                                {{{1, 0}, {0, 0}, {0, 0}, {-1, 0}}},
                                                {{{0, 0}, {1, 0}, {1, 0}, {0, 0}}},
                                                {{{0, 0}, {0, 1}, {0, -1}, {0, 0}}}}};
    const std::array<std::array<C, 4>, 4> ainv = {{{{{0.5, 0}, {0.5, 0}, {0, 0}, {0, 0}}},
                                                   {{{0, 0}, {0, 0}, {0.5, 0}, {0, -0.5}}},
                                                   {{{0, 0}, {0, 0}, {0.5, 0}, {0, 0.5}}},
                                                   {{{0.5, 0}, {-0.5, 0}, {0, 0}, {0, 0}}}}};
    MuellerMatrix m;
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) {
        C acc{0, 0};
        for (int p = 0; p < 4; ++p)
          for (int q = 0; q < 4; ++q) {
            const C t = mul(mul(a[r][p], k[p][q]), ainv[q][c]);
            acc.re += t.re;
            acc.im += t.im;
          }
        m(r, c) = acc.re;
      }
    return m;
  };
  const int terms = 1 + static_cast<int>(rng.bits() % 3);
  MuellerMatrix total;
  for (int t = 0; t < terms; ++t) {
    std::array<C, 4> j;
    for (auto& e : j) e = C{rng.normal(), rng.normal()};
    MuellerMatrix p = pure(j);
    p *= rng.uniform() / p(0, 0);
    total += p;
  }
  total(0, 0) += rng.uniform() < 0.5 ? 0.0 : rng.uniform() * total(0, 0);
  total *= rng.uniform(0.2, 1.0) / total(0, 0);
  return total;
}

}  // namespace polartof
