#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mfst {

enum class ErrorCode {
  Overlap,
  Boundary,
  Ratio,
  ZeroGap,
  Capacity,
  EmptyInterval,
  NegativeQUnenlarged,
  InsufficientScales,
  Bracket,
  TooFewValues,
  NonConverged,
  ZeroMeasureSide,
  InvalidArgument,
};

// Stable, user-visible error name ("OverlapError", ...).
std::string_view error_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  std::string_view name() const noexcept { return error_name(code_); }

 private:
  ErrorCode code_;
};

[[noreturn]] void raise(ErrorCode code, const std::string& what);

}  // namespace mfst
