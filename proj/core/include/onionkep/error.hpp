#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace onionkep {

enum class ErrorCode {
  InvalidArgument,
  InvalidModulus,
  NonInvertible,
  NotPrime,
  GenerationFailed,
  UnsupportedShape,
  MalformedSessionKey,
  BlockOutOfRange,
  MalformedCapture,
  DegenerateCapture,
  MalformedKeyFile,
  EncodingOverflow,
  MalformedPayload,
  UnknownCommand,
  TruncatedCell,
  UnknownSubcommand,
  TruncatedFrame,
  NotReady,
  CircuitIntegrityFailure,
  UnknownCircuit,
  CircuitDestroyed,
  DuplicateName,
  NotFound,
  ParamsMismatch,
  StepBudgetExceeded,
  FrameTooLarge,
  ConnectionLost,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure raised by the library carries one of the codes above so
// callers (and the CLI exit-code mapping) can branch without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code),
        detail_(what) {}

  ErrorCode code() const noexcept { return code_; }
  // Message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace onionkep
