#include "pivotal/error.hpp"

namespace pivotal {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Parse: return "parse error";
    case ErrorCode::DuplicateRecord: return "duplicate record";
    case ErrorCode::IncompletePatient: return "incomplete patient";
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::EmptyGroup: return "empty group";
    case ErrorCode::Domain: return "domain error";
    case ErrorCode::Numerical: return "numerical failure";
    case ErrorCode::Io: return "i/o error";
  }
  return "unknown error";
}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace pivotal
