#pragma once

#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "polartof/polarization/mueller.hpp"

namespace polartof::test {

inline constexpr double kPi = std::numbers::pi;

inline double max_abs_diff(const MuellerMatrix& a, const MuellerMatrix& b) {
  double d = 0.0;
  for (int i = 0; i < 16; ++i) d = std::max(d, std::fabs(a.m[i] - b.m[i]));
  return d;
}

inline double max_abs_diff(const StokesVector& a, const StokesVector& b) {
  double d = 0.0;
  for (int i = 0; i < 4; ++i) d = std::max(d, std::fabs(a[i] - b[i]));
  return d;
}

inline MuellerMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  MuellerMatrix m;
  int r = 0;
  for (const auto& row : rows) {
    int c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

template <typename Fn>
ErrorCode error_code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::Io;
}

}  // namespace polartof::test
