#include "tg/error.hpp"

namespace tg {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::ResourceLimit: return "RESOURCE_LIMIT";
    case ErrorCode::Overflow: return "OVERFLOW";
    case ErrorCode::Diverged: return "DIVERGED";
    case ErrorCode::NotConverged: return "NOT_CONVERGED";
    case ErrorCode::FormatError: return "FORMAT_ERROR";
    case ErrorCode::IllegalMove: return "ILLEGAL_MOVE";
    case ErrorCode::NotYourTurn: return "NOT_YOUR_TURN";
    case ErrorCode::NotEngineTurn: return "NOT_ENGINE_TURN";
    case ErrorCode::NoSafeMove: return "NO_SAFE_MOVE";
    case ErrorCode::UnknownSession: return "UNKNOWN_SESSION";
    case ErrorCode::Busy: return "BUSY";
    case ErrorCode::Unsupported: return "UNSUPPORTED";
    case ErrorCode::IoError: return "IO_ERROR";
    case ErrorCode::Internal: return "INTERNAL";
  }
  return "UNKNOWN";
}

}  // namespace tg
