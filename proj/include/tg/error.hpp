#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tg {

enum class ErrorCode {
  InvalidArgument,
  ResourceLimit,
  Overflow,
  Diverged,
  NotConverged,
  FormatError,
  IllegalMove,
  NotYourTurn,
  NotEngineTurn,
  NoSafeMove,
  UnknownSession,
  Busy,
  Unsupported,
  IoError,
  Internal,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries a machine-readable code so the
// CLI and the service can map it onto exit codes and JSON error bodies.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace tg
