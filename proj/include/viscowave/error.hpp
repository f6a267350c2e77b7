#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace viscowave {

enum class ErrorKind {
  InvalidArgument,
  OutOfRange,
  NonFinite,
  LengthMismatch,
  NonIntegralTime,
  HistoryTooShort,
  OutOfOrder,
  MaxPicardIters,
  NonFiniteState,
  NonPositiveEnergy,
  TooFewSamples,
  DomainError,
  HypothesisFailure,
  ConfigError,
  IoError,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument:
      return "InvalidArgument";
    case ErrorKind::OutOfRange:
      return "OutOfRange";
    case ErrorKind::NonFinite:
      return "NonFinite";
    case ErrorKind::LengthMismatch:
      return "LengthMismatch";
    case ErrorKind::NonIntegralTime:
      return "NonIntegralTime";
    case ErrorKind::HistoryTooShort:
      return "HistoryTooShort";
    case ErrorKind::OutOfOrder:
      return "OutOfOrder";
    case ErrorKind::MaxPicardIters:
      return "MaxPicardIters";
    case ErrorKind::NonFiniteState:
      return "NonFiniteState";
    case ErrorKind::NonPositiveEnergy:
      return "NonPositiveEnergy";
    case ErrorKind::TooFewSamples:
      return "TooFewSamples";
    case ErrorKind::DomainError:
      return "DomainError";
    case ErrorKind::HypothesisFailure:
      return "HypothesisFailure";
    case ErrorKind::ConfigError:
      return "ConfigError";
    case ErrorKind::IoError:
      return "IoError";
  }
  return "Unknown";
}

/// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  /// True for the failures a simulation can hit at run time (CLI exit code 3).
  bool is_solver_failure() const noexcept {
    return kind_ == ErrorKind::MaxPicardIters || kind_ == ErrorKind::NonFiniteState;
  }

 private:
  ErrorKind kind_;
};

namespace detail {

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) throw Error(kind, what);
}

}  // namespace detail
}  // namespace viscowave
