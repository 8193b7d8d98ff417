#pragma once

#include <array>
#include <string>
#include <vector>

#include "polartof/error.hpp"
#include "polartof/polarization/mueller.hpp"

namespace polartof {

/// Rotation angles (radians) per capture: illumination HWP, illumination QWP,
/// analyzer QWP, analyzer LP.
using ScheduleEntry = std::array<double, 4>;

struct PolarimetricSchedule {
  std::vector<ScheduleEntry> entries;
  std::string id = "unnamed";

  std::size_t size() const { return entries.size(); }
};

/// Horizontal linear laser polarization.
inline constexpr StokesVector kLaserStokes{{1.0, 1.0, 0.0, 0.0}};

/// Illumination state P_i s_illum with P_i = Q(theta2) W(theta1).
template <typename T>
Stokes<T> illumination_state(const std::array<T, 4>& angles, const StokesVector& s_illum) {
  Stokes<T> s;
  for (std::size_t i = 0; i < 4; ++i) s[i] = T(s_illum[i]);
  const Mueller<T> p = element_mueller<T>(OpticalElement::QuarterWavePlate, angles[1]) *
                       element_mueller<T>(OpticalElement::HalfWavePlate, angles[0]);
  return p * s;
}

/// First row of A_i = L(theta4) Q(theta3).
template <typename T>
std::array<T, 4> analyzer_row(const std::array<T, 4>& angles) {
  const Mueller<T> a = element_mueller<T>(OpticalElement::LinearPolarizer, angles[3]) *
                       element_mueller<T>(OpticalElement::QuarterWavePlate, angles[2]);
  return {a(0, 0), a(0, 1), a(0, 2), a(0, 3)};
}

/// Row r with r . vec(H) = [A_i H P_i s_illum]_0, vec row-major:
/// r[4j + k] = a[j] * p[k].
template <typename T>
std::array<T, 16> measurement_row(const std::array<T, 4>& angles, const StokesVector& s_illum) {
  const std::array<T, 4> a = analyzer_row(angles);
  const Stokes<T> p = illumination_state(angles, s_illum);
  std::array<T, 16> r;
  for (std::size_t j = 0; j < 4; ++j)
    for (std::size_t k = 0; k < 4; ++k) r[4 * j + k] = a[j] * p[k];
  return r;
}

}  // namespace polartof
