#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace kinlangevin {

enum class ErrorCode {
  NotPositiveDefinite,
  NotSymmetric,
  DimensionMismatch,
  InvalidArgument,
  NonPositiveFrequency,
  ConvexityLost,
  UnsupportedFriction,
  UnsupportedPotential,
  InsufficientData,
  NonPositiveValues,
  NumericalBlowup,
  DegenerateS,
  InvalidCoefficients,
  NonPositiveDenominator,
  WitnessNotFound,
  InvalidConfig,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised by the simulator when a coordinate leaves the finite range.
class NumericalBlowup : public Error {
 public:
  NumericalBlowup(std::int64_t step, std::int64_t particle, const std::string& what)
      : Error(ErrorCode::NumericalBlowup,
              what + " (step " + std::to_string(step) + ", particle " + std::to_string(particle) + ")"),
        step_(step),
        particle_(particle) {}

  std::int64_t step() const noexcept { return step_; }
  std::int64_t particle() const noexcept { return particle_; }

 private:
  std::int64_t step_;
  std::int64_t particle_;
};

inline std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonPositiveFrequency: return "NonPositiveFrequency";
    case ErrorCode::ConvexityLost: return "ConvexityLost";
    case ErrorCode::UnsupportedFriction: return "UnsupportedFriction";
    case ErrorCode::UnsupportedPotential: return "UnsupportedPotential";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::NonPositiveValues: return "NonPositiveValues";
    case ErrorCode::NumericalBlowup: return "NumericalBlowup";
    case ErrorCode::DegenerateS: return "DegenerateS";
    case ErrorCode::InvalidCoefficients: return "InvalidCoefficients";
    case ErrorCode::NonPositiveDenominator: return "NonPositiveDenominator";
    case ErrorCode::WitnessNotFound: return "WitnessNotFound";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

}  // namespace kinlangevin
