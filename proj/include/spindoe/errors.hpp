#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace spindoe {

enum class ErrorCode {
  LengthMismatch,
  DegenerateConfiguration,
  InvalidParams,
  NonConvergence,
  SingularBasis,
  OutsideDisk,
  TooFewDots,
  NoBasisAboveThreshold,
  EmptyCorrespondences,
  InfeasibleSeparation,
  TooFewSamples,
  NonUniqueAxis,
  NoConsensus,
  NonPositiveNorm,
  ParseError,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace spindoe
