#pragma once

#include <stdexcept>
#include <string>

namespace pivotal {

enum class ErrorCode {
  Parse,
  DuplicateRecord,
  IncompletePatient,
  InvalidArgument,
  EmptyGroup,
  Domain,
  Numerical,
  Io,
};

const char* to_string(ErrorCode code) noexcept;

// All library failures surface as this type; the code drives the C API status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace pivotal
