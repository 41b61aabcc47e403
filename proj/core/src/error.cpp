#include "onionkep/error.hpp"

namespace onionkep {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidModulus: return "InvalidModulus";
    case ErrorCode::NonInvertible: return "NonInvertible";
    case ErrorCode::NotPrime: return "NotPrime";
    case ErrorCode::GenerationFailed: return "GenerationFailed";
    case ErrorCode::UnsupportedShape: return "UnsupportedShape";
    case ErrorCode::MalformedSessionKey: return "MalformedSessionKey";
    case ErrorCode::BlockOutOfRange: return "BlockOutOfRange";
    case ErrorCode::MalformedCapture: return "MalformedCapture";
    case ErrorCode::DegenerateCapture: return "DegenerateCapture";
    case ErrorCode::MalformedKeyFile: return "MalformedKeyFile";
    case ErrorCode::EncodingOverflow: return "EncodingOverflow";
    case ErrorCode::MalformedPayload: return "MalformedPayload";
    case ErrorCode::UnknownCommand: return "UnknownCommand";
    case ErrorCode::TruncatedCell: return "TruncatedCell";
    case ErrorCode::UnknownSubcommand: return "UnknownSubcommand";
    case ErrorCode::TruncatedFrame: return "TruncatedFrame";
    case ErrorCode::NotReady: return "NotReady";
    case ErrorCode::CircuitIntegrityFailure: return "CircuitIntegrityFailure";
    case ErrorCode::UnknownCircuit: return "UnknownCircuit";
    case ErrorCode::CircuitDestroyed: return "CircuitDestroyed";
    case ErrorCode::DuplicateName: return "DuplicateName";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::ParamsMismatch: return "ParamsMismatch";
    case ErrorCode::StepBudgetExceeded: return "StepBudgetExceeded";
    case ErrorCode::FrameTooLarge: return "FrameTooLarge";
    case ErrorCode::ConnectionLost: return "ConnectionLost";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace onionkep
