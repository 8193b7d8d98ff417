#pragma once

// Temporal-polarimetric BRDF: a microfacet surface lobe with time-varying
// channel attenuation, plus a sub-surface lobe that enters and leaves through
// Fresnel transmission with time-varying depolarization in between.
//
// Time is in seconds. Roughness m drives both the GGX distribution and the
// Smith masking term.

#include <array>
#include <numbers>

#include "polartof/error.hpp"
#include "polartof/polarization/mueller.hpp"

namespace polartof {

/// Four per-Stokes-channel Gaussians a_i exp(-(tau - mu_i)^2 / (2 sigma_i^2)).
template <typename T>
struct TimeGaussBankT {
  std::array<T, 4> a{};
  std::array<T, 4> mu{};
  std::array<T, 4> sigma{T(1e-12), T(1e-12), T(1e-12), T(1e-12)};

  T channel(std::size_t i, double tau) const {
    const T z = (tau - mu[i]) / sigma[i];
    return a[i] * exp(-0.5 * z * z);
  }
};

template <typename T>
struct MaterialT {
  T eta = 1.5;
  T m = 0.3;
  TimeGaussBankT<T> surface;
  TimeGaussBankT<T> subsurface;
};

using TimeGaussBank = TimeGaussBankT<double>;
using Material = MaterialT<double>;

inline void validate(const TimeGaussBank& bank) {
  for (std::size_t i = 0; i < 4; ++i) {
    if (!(bank.a[i] >= 0.0)) throw Error(ErrorCode::InvalidParam, "bank amplitude must be non-negative");
    if (!(bank.sigma[i] > 0.0)) throw Error(ErrorCode::InvalidParam, "bank sigma must be positive");
    if (bank.a[i] > bank.a[0]) throw Error(ErrorCode::InvalidParam, "bank amplitude a_i exceeds a_0");
  }
}

inline void validate(const Material& mat) {
  if (!(mat.eta >= 1.0 && mat.eta <= 3.0)) throw Error(ErrorCode::InvalidParam, "eta must lie in [1, 3]");
  if (!(mat.m > 0.0 && mat.m <= 1.0)) throw Error(ErrorCode::InvalidParam, "roughness must lie in (0, 1]");
  validate(mat.surface);
  validate(mat.subsurface);
}

template <typename T>
T ggx_ndf_cos(const T& cos_h, const T& m) {
  const T m2 = m * m;
  const T denom = (m2 - 1.0) * cos_h * cos_h + 1.0;
  return m2 / (std::numbers::pi * denom * denom);
}

template <typename T>
T ggx_ndf(const T& theta_h, const T& m) {
  return ggx_ndf_cos<T>(cos(theta_h), m);
}

template <typename T>
T smith_g1_cos(const T& cos_theta, const T& m) {
  const T tan2 = (1.0 - cos_theta * cos_theta) / (cos_theta * cos_theta);
  return 2.0 / (1.0 + sqrt(1.0 + m * m * tan2));
}

template <typename T>
T smith_g(const T& theta_i, const T& theta_o, const T& m) {
  return smith_g1_cos<T>(cos(theta_i), m) * smith_g1_cos<T>(cos(theta_o), m);
}

template <typename T>
Mueller<T> time_gauss_diag(const TimeGaussBankT<T>& bank, double tau) {
  return Mueller<T>::diag(bank.channel(0, tau), bank.channel(1, tau), bank.channel(2, tau), bank.channel(3, tau));
}

namespace detail {

inline constexpr double kGrazingLimit = 1e-6;

template <typename T>
void check_front_facing(const T& cos_i, const T& cos_o) {
  if (!(value_of(cos_i) > 0.0 && value_of(cos_o) > 0.0) || value_of(cos_i * cos_o) < kGrazingLimit)
    throw Error(ErrorCode::GrazingAngle, "geometry is grazing or back-facing");
}

// D G / (4 cos_i cos_o), and the Fresnel matrix at the microfacet angle.
template <typename T>
std::pair<T, Mueller<T>> surface_factors(const LocalGeometry<T>& geom, const T& eta, const T& m) {
  const T cos_i = geom.cos_theta_i();
  const T cos_o = geom.cos_theta_o();
  check_front_facing(cos_i, cos_o);
  const Vec3<T> h = geom.halfway();
  T cos_h = dot(h, geom.n);
  if (cos_h > 1.0) cos_h = T(1.0);
  T cos_d = dot(h, geom.omega_i);
  if (cos_d > 1.0) cos_d = T(1.0);
  const T scale = ggx_ndf_cos<T>(cos_h, m) * smith_g1_cos<T>(cos_i, m) * smith_g1_cos<T>(cos_o, m) / (4.0 * cos_i * cos_o);
  return {scale, fresnel_mueller_cos<T>(FresnelMode::Reflect, eta, cos_d)};
}

template <typename T>
Mueller<T> conversion_or_identity(const LocalGeometry<T>& geom, FrameConversion which) {
  const Vec3<T> z = which == FrameConversion::IncidentHalfwayToNormal ? -geom.omega_i : -geom.omega_o;
  Vec3<T> y;
  // Transmission at normal incidence is rotation invariant; any frame works.
  if (!frame_y_axis(z, geom.n, y)) return Mueller<T>::identity();
  return coordinate_conversion(geom, which);
}

// (C_{n->o} F_T^o, F_T^i C_{i->n}): the sub-surface lobe is
// left * D^ss(tau) * right.
template <typename T>
std::pair<Mueller<T>, Mueller<T>> subsurface_factors(const LocalGeometry<T>& geom, const T& eta) {
  const T cos_i = geom.cos_theta_i();
  const T cos_o = geom.cos_theta_o();
  check_front_facing(cos_i, cos_o);
  const Mueller<T> f_in = fresnel_mueller_cos<T>(FresnelMode::Transmit, eta, cos_i);
  // Exit through the interface from inside at the Snell-refracted angle of theta_o.
  const T sin2_inner = (1.0 - cos_o * cos_o) / (eta * eta);
  const T cos_inner = sqrt(1.0 - sin2_inner);
  const Mueller<T> f_out = fresnel_mueller_cos<T>(FresnelMode::Transmit, T(1.0) / eta, cos_inner);
  const Mueller<T> c_in = conversion_or_identity(geom, FrameConversion::IncidentHalfwayToNormal);
  const Mueller<T> c_out = conversion_or_identity(geom, FrameConversion::NormalToOutgoingHalfway);
  return {c_out * f_out, f_in * c_in};
}

}  // namespace detail

template <typename T>
Mueller<T> surface_term(double tau, const LocalGeometry<T>& geom, const MaterialT<T>& mat) {
  const auto [scale, f_r] = detail::surface_factors(geom, mat.eta, mat.m);
  return scale * (time_gauss_diag(mat.surface, tau) * f_r);
}

template <typename T>
Mueller<T> subsurface_term(double tau, const LocalGeometry<T>& geom, const MaterialT<T>& mat) {
  const auto [left, right] = detail::subsurface_factors(geom, mat.eta);
  return left * time_gauss_diag(mat.subsurface, tau) * right;
}

template <typename T>
Mueller<T> brdf(double tau, const LocalGeometry<T>& geom, const MaterialT<T>& mat) {
  return surface_term(tau, geom, mat) + subsurface_term(tau, geom, mat);
}

/// H = cos(theta_i) * M.
template <typename T>
Mueller<T> cosine_scaled(double tau, const LocalGeometry<T>& geom, const MaterialT<T>& mat) {
  return geom.cos_theta_i() * brdf(tau, geom, mat);
}

/// Time-independent factorization of cosine_scaled:
///   H(tau) = sum_c g_c(tau) * basis[c],
/// where g_0..3 are the surface-bank Gaussians and g_4..7 the sub-surface ones.
template <typename T>
using BrdfBasis = std::array<Mueller<T>, 8>;

template <typename T>
BrdfBasis<T> brdf_basis(const LocalGeometry<T>& geom, const T& eta, const T& m) {
  BrdfBasis<T> basis{};
  const T cos_i = geom.cos_theta_i();
  const auto [scale, f_r] = detail::surface_factors(geom, eta, m);
  const T s = cos_i * scale;
  for (std::size_t j = 0; j < 4; ++j)
    for (std::size_t k = 0; k < 4; ++k) basis[j](j, k) = s * f_r(j, k);
  const auto [left, right] = detail::subsurface_factors(geom, eta);
  for (std::size_t j = 0; j < 4; ++j) {
    Mueller<T>& b = basis[4 + j];
    for (std::size_t r = 0; r < 4; ++r) {
      const T lr = cos_i * left(r, j);
      for (std::size_t c = 0; c < 4; ++c) b(r, c) = lr * right(j, c);
    }
  }
  return basis;
}

}  // namespace polartof
