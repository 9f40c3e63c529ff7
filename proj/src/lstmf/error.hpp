#pragma once

#include <stdexcept>
#include <string>

namespace lstmf {

// Numeric values double as CLI exit codes and C API status codes.
enum class ErrorCode : int {
  kGeneric = 1,
  kInput = 2,
  kConfig = 3,
  kInsufficientData = 4,
  kLengthMismatch = 5,
  kManifestMismatch = 6,
  kConfigHashMismatch = 7,
  kInvalidArgument = 8,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace lstmf
