#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace polartof {

enum class ErrorCode {
  TotalInternalReflection,
  InvalidAngle,
  DegenerateFrame,
  ZeroIntensity,
  GrazingAngle,
  ShapeMismatch,
  RankDeficient,
  NoPeak,
  InvalidParam,
  Config,
  Io,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::TotalInternalReflection: return "TotalInternalReflection";
    case ErrorCode::InvalidAngle: return "InvalidAngle";
    case ErrorCode::DegenerateFrame: return "DegenerateFrame";
    case ErrorCode::ZeroIntensity: return "ZeroIntensity";
    case ErrorCode::GrazingAngle: return "GrazingAngle";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::NoPeak: return "NoPeak";
    case ErrorCode::InvalidParam: return "InvalidParam";
    case ErrorCode::Config: return "Config";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace polartof
